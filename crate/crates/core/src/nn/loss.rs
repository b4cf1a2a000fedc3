use super::DenseMatrix;
use crate::error::{Error, Result};

/// Mean softmax cross-entropy and its gradient w.r.t. the logits.
pub fn softmax_cross_entropy(logits: &DenseMatrix, labels: &[usize]) -> Result<(f64, DenseMatrix)> {
    let (rows, classes) = logits.shape();
    if rows != labels.len() {
        return Err(Error::Shape(format!(
            "{rows} logit rows but {} labels",
            labels.len()
        )));
    }
    if rows == 0 {
        return Err(Error::EmptyInput("empty batch"));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::InvalidLabel { label: bad, classes });
    }
    let scale = 1.0 / rows as f64;
    let mut grad = DenseMatrix::zeros(rows, classes);
    let mut loss = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        let row = logits.row(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
        let lse = max + sum.ln();
        loss += lse - row[label];
        let g = grad.row_mut(i);
        for (gj, &v) in g.iter_mut().zip(row) {
            *gj = (v - lse).exp() * scale;
        }
        g[label] -= scale;
    }
    Ok((loss * scale, grad))
}
