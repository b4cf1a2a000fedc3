use super::{DenseMatrix, Parameterized};
use crate::error::{Error, Result};

/// Compares analytic gradients with central finite differences over every
/// parameter entry and returns the largest relative error
/// `|a − n| / max(|a|, |n|, 1e-8)`.
///
/// `loss_and_grads` evaluates the model and returns its scalar loss with
/// one gradient per tensor, in `params()` order.
pub fn grad_check<M, F>(model: &mut M, mut loss_and_grads: F, eps: f64) -> Result<f64>
where
    M: Parameterized,
    F: FnMut(&M) -> Result<(f64, Vec<DenseMatrix>)>,
{
    if !(eps > 0.0) {
        return Err(Error::InvalidParam(format!("epsilon must be positive, got {eps}")));
    }
    let (_, analytic) = loss_and_grads(model)?;
    let shapes: Vec<_> = model.params().iter().map(|p| p.shape()).collect();
    if analytic.len() != shapes.len() || analytic.iter().zip(&shapes).any(|(g, s)| g.shape() != *s) {
        return Err(Error::Shape("gradients do not mirror parameters".into()));
    }
    let mut worst: f64 = 0.0;
    for (t, grad) in analytic.iter().enumerate() {
        for k in 0..grad.len() {
            let original = model.params()[t].data()[k];
            model.params_mut()[t].data_mut()[k] = original + eps;
            let plus = loss_and_grads(model)?.0;
            model.params_mut()[t].data_mut()[k] = original - eps;
            let minus = loss_and_grads(model)?.0;
            model.params_mut()[t].data_mut()[k] = original;

            let numeric = (plus - minus) / (2.0 * eps);
            let a = grad.data()[k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}
