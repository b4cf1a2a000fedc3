use super::DenseMatrix;
use crate::error::{Error, Result};

/// Adam moments for a fixed list of parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    first: Vec<DenseMatrix>,
    second: Vec<DenseMatrix>,
}

impl AdamState {
    pub fn new<'a>(params: impl IntoIterator<Item = &'a DenseMatrix>, lr: f64) -> Self {
        let first: Vec<DenseMatrix> = params
            .into_iter()
            .map(|p| DenseMatrix::zeros(p.rows(), p.cols()))
            .collect();
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            second: first.clone(),
            first,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: Vec<&mut DenseMatrix>, grads: &[DenseMatrix]) -> Result<()> {
        if params.len() != self.first.len() || grads.len() != self.first.len() {
            return Err(Error::Shape(format!(
                "optimizer tracks {} tensors, got {} parameters and {} gradients",
                self.first.len(),
                params.len(),
                grads.len()
            )));
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.first) {
            if p.shape() != g.shape() || p.shape() != m.shape() {
                return Err(Error::Shape(format!(
                    "parameter {:?}, gradient {:?}, moment {:?}",
                    p.shape(),
                    g.shape(),
                    m.shape()
                )));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (((p, g), m), v) in params
            .into_iter()
            .zip(grads)
            .zip(self.first.iter_mut())
            .zip(self.second.iter_mut())
        {
            let (pd, gd) = (p.data_mut(), g.data());
            let (md, vd) = (m.data_mut(), v.data_mut());
            for k in 0..pd.len() {
                md[k] = self.beta1 * md[k] + (1.0 - self.beta1) * gd[k];
                vd[k] = self.beta2 * vd[k] + (1.0 - self.beta2) * gd[k] * gd[k];
                let m_hat = md[k] / c1;
                let v_hat = vd[k] / c2;
                pd[k] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = DenseMatrix::filled(2, 2, 1.5);
        let mut adam = AdamState::new([&p], 0.1);
        adam.step(vec![&mut p], &[DenseMatrix::zeros(2, 2)]).unwrap();
        assert_eq!(p, DenseMatrix::filled(2, 2, 1.5));
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = DenseMatrix::zeros(1, 3);
        let mut adam = AdamState::new([&p], 0.01);
        let g = DenseMatrix::from_rows(&[vec![2.0, -0.5, 1e3]]).unwrap();
        adam.step(vec![&mut p], &[g]).unwrap();
        // m̂ = g and v̂ = g², so the step is lr · g / (|g| + ε).
        for (&v, s) in p.data().iter().zip([-1.0, 1.0, -1.0]) {
            assert!((v - s * 0.01).abs() < 1e-9);
        }
    }

    #[test]
    fn quadratic_bowl_converges() {
        // f(p) = Σ (p - c)², minimum at c.
        let target = [3.0, -2.0];
        let mut p = DenseMatrix::zeros(1, 2);
        let mut adam = AdamState::new([&p], 0.1);
        for _ in 0..500 {
            let g = DenseMatrix::from_vec(1, 2, vec![2.0 * (p.get(0, 0) - target[0]), 2.0 * (p.get(0, 1) - target[1])])
                .unwrap();
            adam.step(vec![&mut p], &[g]).unwrap();
        }
        assert!((p.get(0, 0) - target[0]).abs() < 1e-4);
        assert!((p.get(0, 1) - target[1]).abs() < 1e-4);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut p = DenseMatrix::zeros(2, 2);
        let mut adam = AdamState::new([&p], 0.1);
        assert!(adam.step(vec![&mut p], &[DenseMatrix::zeros(1, 2)]).is_err());
    }
}
