use statrs::distribution::{ContinuousCDF, StudentsT};

/// Mean and two-sided 95% Student-t half-width `t₀.₉₇₅,ₙ₋₁ · s / √n`;
/// the half-width is 0 for a single value.
pub fn mean_ci95(values: &[f64]) -> Option<(f64, f64)> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    Some((mean, t * var.sqrt() / (n as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_values() {
        assert_eq!(mean_ci95(&[0.7; 5]), Some((0.7, 0.0)));
        assert_eq!(mean_ci95(&[0.3]), Some((0.3, 0.0)));
        assert_eq!(mean_ci95(&[]), None);
    }

    #[test]
    fn two_values_match_t_table() {
        let (m, h) = mean_ci95(&[0.8, 0.9]).unwrap();
        assert!((m - 0.85).abs() < 1e-12);
        // t(0.975, 1) = 12.7062, s = 0.0707107.
        assert!((h - 12.706_204_736 * 0.070_710_678_1 / 2f64.sqrt()).abs() < 1e-6, "{h}");
    }
}
