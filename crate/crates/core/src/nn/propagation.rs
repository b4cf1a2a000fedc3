//! Graph propagation operators for message passing.
//!
//! A [`Propagation`] is a sparse `n × n` operator applied independently to
//! every `n`-row block of a stacked batch, so one operator serves all
//! samples that share the background graph.

use super::DenseMatrix;
use crate::error::{Error, Result};
use crate::graph::BkGraph;

/// `D̃^{-1/2} (A + I) D̃^{-1/2}` with edge weights in `A`.
pub fn normalize_adjacency(g: &BkGraph) -> Result<DenseMatrix> {
    let n = g.node_count();
    if n == 0 {
        return Err(Error::EmptyInput("graph without nodes"));
    }
    let degree: Vec<f64> = (0..n)
        .map(|v| 1.0 + g.neighbors(v).iter().map(|&(_, w)| w as f64).sum::<f64>())
        .collect();
    let inv_sqrt: Vec<f64> = degree.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        a.set(i, i, inv_sqrt[i] * inv_sqrt[i]);
        for &(j, w) in g.neighbors(i) {
            a.set(i, j, w as f64 * (inv_sqrt[i] * inv_sqrt[j]));
        }
    }
    Ok(a)
}

/// Sparse row-compressed operator; column indices ascend within a row.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    n: usize,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Propagation {
    /// Keeps the non-zero entries of a square matrix.
    pub fn from_dense(a: &DenseMatrix) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(Error::Shape(format!(
                "propagation operator must be square, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let mut offsets = Vec::with_capacity(n + 1);
        let (mut cols, mut vals) = (Vec::new(), Vec::new());
        offsets.push(0);
        for i in 0..n {
            for (j, &v) in a.row(i).iter().enumerate() {
                if v != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            offsets.push(cols.len());
        }
        Ok(Propagation {
            n,
            offsets,
            cols,
            vals,
        })
    }

    /// Normalized GCN operator of `g`.
    pub fn gcn(g: &BkGraph) -> Result<Self> {
        Self::from_dense(&normalize_adjacency(g)?)
    }

    /// Unit-weight neighborhoods including each node itself, the support
    /// of the attention softmax.
    pub fn neighborhoods(g: &BkGraph) -> Self {
        let n = g.node_count();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(2 * g.edge_count() + n);
        offsets.push(0);
        for i in 0..n {
            let mut self_added = false;
            for j in g.neighbor_ids(i) {
                if !self_added && j > i {
                    cols.push(i);
                    self_added = true;
                }
                cols.push(j);
            }
            if !self_added {
                cols.push(i);
            }
            offsets.push(cols.len());
        }
        let vals = vec![1.0; cols.len()];
        Propagation {
            n,
            offsets,
            cols,
            vals,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let span = self.offsets[i]..self.offsets[i + 1];
        (&self.cols[span.clone()], &self.vals[span])
    }

    pub(crate) fn offset(&self, i: usize) -> usize {
        self.offsets[i]
    }

    /// Number of stacked blocks in `x`, or a shape error.
    pub fn blocks(&self, x: &DenseMatrix) -> Result<usize> {
        if self.n == 0 || x.rows() % self.n != 0 {
            return Err(Error::Shape(format!(
                "{} rows is not a multiple of {} nodes",
                x.rows(),
                self.n
            )));
        }
        Ok(x.rows() / self.n)
    }

    /// `P · x_b` for every block `x_b`.
    pub fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        let blocks = self.blocks(x)?;
        let d = x.cols();
        let mut out = DenseMatrix::zeros(x.rows(), d);
        for b in 0..blocks {
            let base = b * self.n;
            for i in 0..self.n {
                let (cols, vals) = self.row(i);
                let dst = &mut out.data_mut()[(base + i) * d..(base + i + 1) * d];
                for (&j, &a) in cols.iter().zip(vals) {
                    for (o, &v) in dst.iter_mut().zip(x.row(base + j)) {
                        *o += a * v;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `Pᵀ · x_b` for every block `x_b`.
    pub fn apply_transpose(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        let blocks = self.blocks(x)?;
        let d = x.cols();
        let mut out = DenseMatrix::zeros(x.rows(), d);
        for b in 0..blocks {
            let base = b * self.n;
            for i in 0..self.n {
                let (cols, vals) = self.row(i);
                for (&j, &a) in cols.iter().zip(vals) {
                    let src_start = (base + i) * d;
                    let dst_start = (base + j) * d;
                    for k in 0..d {
                        let v = x.data()[src_start + k];
                        out.data_mut()[dst_start + k] += a * v;
                    }
                }
            }
        }
        Ok(out)
    }
}
