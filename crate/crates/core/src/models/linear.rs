//! Linear baselines: L1-regularized logistic regression fitted by
//! proximal gradient and a linear SVM fitted by subgradient descent.
//!
//! Binary problems use a single score column (class 1 vs class 0);
//! with more classes there is one column per class.

use super::spec::{ModelKind, ModelSpec};
use crate::error::{Error, Result};
use crate::graph::NodeSet;
use crate::nn::{softmax_cross_entropy, DenseMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weight: DenseMatrix,
    pub bias: DenseMatrix,
    pub classes: usize,
    /// Cluster membership when the model reads cluster-averaged features.
    pub clusters: Option<Vec<NodeSet>>,
}

/// Per-sample mean of the feature columns of each cluster.
pub fn cluster_average_features(features: &DenseMatrix, clusters: &[NodeSet]) -> Result<DenseMatrix> {
    let mut out = DenseMatrix::zeros(features.rows(), clusters.len());
    for (c, cluster) in clusters.iter().enumerate() {
        if cluster.is_empty() {
            continue;
        }
        cluster.validate(features.cols())?;
        let scale = 1.0 / cluster.len() as f64;
        for i in 0..features.rows() {
            let row = features.row(i);
            let sum: f64 = cluster.ids().iter().map(|&j| row[j]).sum();
            out.set(i, c, sum * scale);
        }
    }
    Ok(out)
}

impl LinearModel {
    pub fn new(input_dim: usize, classes: usize, clusters: Option<Vec<NodeSet>>) -> Result<Self> {
        if classes < 2 {
            return Err(Error::InvalidParam(format!(
                "linear models need at least 2 classes, got {classes}"
            )));
        }
        let k = Self::score_columns(classes);
        let dim = clusters.as_ref().map_or(input_dim, Vec::len);
        Ok(LinearModel {
            weight: DenseMatrix::zeros(dim, k),
            bias: DenseMatrix::zeros(1, k),
            classes,
            clusters,
        })
    }

    fn score_columns(classes: usize) -> usize {
        if classes == 2 {
            1
        } else {
            classes
        }
    }

    /// Features as seen by the model.
    pub fn view(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        match &self.clusters {
            Some(c) => cluster_average_features(x, c),
            None => Ok(x.clone()),
        }
    }

    fn raw_scores(&self, v: &DenseMatrix) -> Result<DenseMatrix> {
        let mut s = v.matmul(&self.weight)?;
        s.add_row_broadcast(&self.bias)?;
        Ok(s)
    }

    /// Per-class scores; the binary case is expanded to `[0, s]`.
    pub fn scores(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        let s = self.raw_scores(&self.view(x)?)?;
        Ok(expand(s, self.classes))
    }

    pub fn fit(&mut self, spec: &ModelSpec, x: &DenseMatrix, labels: &[usize]) -> Result<Vec<f64>> {
        let v = self.view(x)?;
        match spec.kind {
            ModelKind::LogregL1 | ModelKind::ClusterAvgLogreg => self.fit_logreg(spec, &v, labels),
            ModelKind::LinearSvm | ModelKind::ClusterAvgSvm => self.fit_svm(spec, &v, labels),
            other => Err(Error::InvalidParam(format!("{} is not a linear model", other.as_str()))),
        }
    }

    /// ISTA on mean cross-entropy + λ‖W‖₁ with step 1/L.
    fn fit_logreg(&mut self, spec: &ModelSpec, v: &DenseMatrix, labels: &[usize]) -> Result<Vec<f64>> {
        let n = v.rows();
        let curvature = if self.classes == 2 { 0.25 } else { 0.5 };
        let lipschitz = (curvature * gram_spectral_bound(v) / n as f64).max(1e-12);
        let step = 1.0 / lipschitz;
        let threshold = step * spec.l1_lambda;
        let mut history = Vec::with_capacity(spec.epochs);
        for epoch in 0..spec.epochs {
            let scores = self.raw_scores(v)?;
            let (loss, d_logits) = softmax_cross_entropy(&expand(scores, self.classes), labels)?;
            let objective = loss + spec.l1_lambda * self.weight.data().iter().map(|w| w.abs()).sum::<f64>();
            if !objective.is_finite() {
                return Err(Error::TrainingDiverged { epoch, loss: objective });
            }
            history.push(objective);
            let d_scores = contract(d_logits, self.classes);
            let dw = v.tr_matmul(&d_scores)?;
            let db = d_scores.column_sums();
            for (w, g) in self.weight.data_mut().iter_mut().zip(dw.data()) {
                let u = *w - step * g;
                *w = u.signum() * (u.abs() - threshold).max(0.0);
            }
            for (b, g) in self.bias.data_mut().iter_mut().zip(db.data()) {
                *b -= step * g;
            }
        }
        Ok(history)
    }

    /// One-vs-rest subgradient descent on `λ/2 ‖w‖² + mean hinge` with
    /// `λ = 1 / (C n)` and step `1 / (λ t)`, keeping the best iterate.
    fn fit_svm(&mut self, spec: &ModelSpec, v: &DenseMatrix, labels: &[usize]) -> Result<Vec<f64>> {
        let (n, d) = v.shape();
        let k = self.weight.cols();
        let lambda = 1.0 / (spec.svm_c * n as f64);
        let radius = 1.0 / lambda.sqrt();
        let mut history = vec![0.0; spec.epochs];
        for col in 0..k {
            let positive = if k == 1 { 1 } else { col };
            let y: Vec<f64> = labels
                .iter()
                .map(|&l| if l == positive { 1.0 } else { -1.0 })
                .collect();
            let mut w = vec![0.0; d];
            let mut b = 0.0;
            let objective = |w: &[f64], b: f64| {
                let hinge: f64 = (0..n)
                    .map(|i| {
                        let s: f64 = v.row(i).iter().zip(w).map(|(x, w)| x * w).sum::<f64>() + b;
                        (1.0 - y[i] * s).max(0.0)
                    })
                    .sum();
                0.5 * lambda * w.iter().map(|x| x * x).sum::<f64>() + hinge / n as f64
            };
            let mut best = (objective(&w, b), w.clone(), b);
            for (t, slot) in history.iter_mut().enumerate() {
                let eta = 1.0 / (lambda * (t + 1) as f64);
                let mut gw = vec![0.0; d];
                let mut gb = 0.0;
                for i in 0..n {
                    let row = v.row(i);
                    let s: f64 = row.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() + b;
                    if y[i] * s < 1.0 {
                        for (g, x) in gw.iter_mut().zip(row) {
                            *g -= y[i] * x / n as f64;
                        }
                        gb -= y[i] / n as f64;
                    }
                }
                for (wj, g) in w.iter_mut().zip(&gw) {
                    *wj -= eta * (lambda * *wj + g);
                }
                b -= eta * gb;
                let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > radius {
                    w.iter_mut().for_each(|x| *x *= radius / norm);
                }
                let obj = objective(&w, b);
                if !obj.is_finite() {
                    return Err(Error::TrainingDiverged { epoch: t, loss: obj });
                }
                *slot += obj;
                if obj < best.0 {
                    best = (obj, w.clone(), b);
                }
            }
            for (j, &wj) in best.1.iter().enumerate() {
                self.weight.set(j, col, wj);
            }
            self.bias.set(0, col, best.2);
        }
        Ok(history)
    }
}

fn expand(s: DenseMatrix, classes: usize) -> DenseMatrix {
    if classes == 2 && s.cols() == 1 {
        let zero = DenseMatrix::zeros(s.rows(), 1);
        DenseMatrix::hconcat(&[&zero, &s]).expect("row counts agree")
    } else {
        s
    }
}

fn contract(d_logits: DenseMatrix, classes: usize) -> DenseMatrix {
    if classes == 2 {
        d_logits.hsplit(&[1, 1]).expect("two columns").pop().unwrap()
    } else {
        d_logits
    }
}

/// Upper estimate of the largest eigenvalue of `[X 1]ᵀ[X 1]` by power
/// iteration, padded by 1%.
fn gram_spectral_bound(x: &DenseMatrix) -> f64 {
    let (n, d) = x.shape();
    let mut v = vec![1.0 / ((d + 1) as f64).sqrt(); d + 1];
    let mut value = 0.0;
    for _ in 0..100 {
        let mut xv = vec![0.0; n];
        for (i, out) in xv.iter_mut().enumerate() {
            *out = x.row(i).iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() + v[d];
        }
        let mut next = vec![0.0; d + 1];
        for (i, &s) in xv.iter().enumerate() {
            for (o, a) in next.iter_mut().zip(x.row(i)) {
                *o += a * s;
            }
            next[d] += s;
        }
        let norm = next.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        value = norm;
        v = next.into_iter().map(|a| a / norm).collect();
    }
    value * 1.01
}
