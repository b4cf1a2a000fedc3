//! Skew-normal distribution SN(location, scale, shape).

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn std_normal_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Density `(2/ω) φ((x−ξ)/ω) Φ(α(x−ξ)/ω)`.
pub fn skew_normal_pdf(x: f64, location: f64, scale: f64, shape: f64) -> Result<f64> {
    Ok(SkewNormal::new(location, scale, shape)?.pdf(x))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewNormal {
    location: f64,
    scale: f64,
    shape: f64,
    delta: f64,
}

impl SkewNormal {
    pub fn new(location: f64, scale: f64, shape: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParam(format!("scale must be positive, got {scale}")));
        }
        if !location.is_finite() || !shape.is_finite() {
            return Err(Error::InvalidParam("location and shape must be finite".into()));
        }
        Ok(SkewNormal {
            location,
            scale,
            shape,
            delta: shape / (1.0 + shape * shape).sqrt(),
        })
    }

    pub fn location(&self) -> f64 {
        self.location
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let z = (x - self.location) / self.scale;
        2.0 / self.scale * std_normal_pdf(z) * std_normal_cdf(self.shape * z)
    }

    /// Closed-form mean `ξ + ωδ√(2/π)`.
    pub fn mean(&self) -> f64 {
        self.location + self.scale * self.delta * (2.0 / std::f64::consts::PI).sqrt()
    }

    /// One draw via the sign-conditioning representation: with `(u0, u1)`
    /// standard bivariate normal of correlation δ, `z = u1` if `u0 >= 0`
    /// and `-u1` otherwise.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u0: f64 = rng.sample(StandardNormal);
        let v: f64 = rng.sample(StandardNormal);
        let u1 = self.delta * u0 + (1.0 - self.delta * self.delta).sqrt() * v;
        let z = if u0 >= 0.0 { u1 } else { -u1 };
        self.location + self.scale * z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn zero_shape_is_normal() {
        let p = skew_normal_pdf(0.0, 0.0, 1.0, 0.0).unwrap();
        assert!((p - 0.398_942_280_401_432_7).abs() < 1e-15);
    }

    #[test]
    fn reflection_identity() {
        for &x in &[-2.0, -0.4, 0.0, 0.3, 1.7] {
            let a = skew_normal_pdf(x, -0.285, 0.5, 1.8).unwrap();
            let b = skew_normal_pdf(-x, 0.285, 0.5, -1.8).unwrap();
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_scale() {
        assert!(skew_normal_pdf(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(SkewNormal::new(0.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn normal_sample_mean() {
        let d = SkewNormal::new(1.5, 2.0, 0.0).unwrap();
        let mut rng = seed::rng(11);
        let n = 100_000;
        let mean = (0..n).map(|_| d.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.5).abs() < 3.0 * 2.0 / (n as f64).sqrt());
    }

    #[test]
    fn seeded_draws_repeat() {
        let d = SkewNormal::new(-0.285, 0.5, 1.8).unwrap();
        let a: Vec<f64> = (0..8).map({
            let mut r = seed::rng(5);
            move |_| d.sample(&mut r)
        }).collect();
        let b: Vec<f64> = (0..8).map({
            let mut r = seed::rng(5);
            move |_| d.sample(&mut r)
        }).collect();
        assert_eq!(a, b);
    }
}
