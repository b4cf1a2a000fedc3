//! Dense, GCN and GATv2 layers with hand-derived backward passes.
//!
//! Row-vector convention throughout: inputs are `rows × in_dim` and
//! weights `in_dim × out_dim`. Graph layers take stacked batches of
//! `blocks · n` rows that share one propagation operator.

use rand::Rng;

use super::{DenseMatrix, Propagation};
use crate::error::{Error, Result};

/// Access to trainable tensors in a fixed order.
pub trait Parameterized {
    fn params(&self) -> Vec<&DenseMatrix>;
    fn params_mut(&mut self) -> Vec<&mut DenseMatrix>;
    fn param_names(&self) -> Vec<String>;

    fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
}

impl Activation {
    pub fn apply(self, z: &DenseMatrix) -> DenseMatrix {
        match self {
            Activation::Identity => z.clone(),
            Activation::Relu => z.map(|v| v.max(0.0)),
        }
    }

    /// Gradient w.r.t. the pre-activation given the activation output.
    pub fn backward(self, output: &DenseMatrix, d_out: &DenseMatrix) -> DenseMatrix {
        match self {
            Activation::Identity => d_out.clone(),
            Activation::Relu => {
                let mut d = d_out.clone();
                for (g, &h) in d.data_mut().iter_mut().zip(output.data()) {
                    if h <= 0.0 {
                        *g = 0.0;
                    }
                }
                d
            }
        }
    }
}

/// Glorot-uniform `rows × cols` matrix.
pub fn glorot<R: Rng + ?Sized>(rows: usize, cols: usize, fan_in: usize, fan_out: usize, rng: &mut R) -> DenseMatrix {
    let limit = (6.0 / (fan_in + fan_out).max(1) as f64).sqrt();
    let mut m = DenseMatrix::zeros(rows, cols);
    for v in m.data_mut() {
        *v = rng.random_range(-limit..=limit);
    }
    m
}

fn check_cols(x: &DenseMatrix, expected: usize, what: &str) -> Result<()> {
    if x.cols() != expected {
        return Err(Error::Shape(format!(
            "{what} expects {expected} input columns, got {}",
            x.cols()
        )));
    }
    Ok(())
}

/// Affine map `x W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: DenseMatrix,
    pub bias: DenseMatrix,
}

impl Linear {
    pub fn new<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        Linear {
            weight: glorot(in_dim, out_dim, in_dim, out_dim, rng),
            bias: DenseMatrix::zeros(1, out_dim),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn forward(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        check_cols(x, self.in_dim(), "linear layer")?;
        let mut z = x.matmul(&self.weight)?;
        z.add_row_broadcast(&self.bias)?;
        Ok(z)
    }

    /// Returns `[dW, db]` and, if requested, the input gradient.
    pub fn backward(
        &self,
        x: &DenseMatrix,
        dz: &DenseMatrix,
        need_input_grad: bool,
    ) -> Result<(Vec<DenseMatrix>, Option<DenseMatrix>)> {
        let dw = x.tr_matmul(dz)?;
        let db = dz.column_sums();
        let dx = if need_input_grad {
            Some(dz.matmul_tr(&self.weight)?)
        } else {
            None
        };
        Ok((vec![dw, db], dx))
    }
}

impl Parameterized for Linear {
    fn params(&self) -> Vec<&DenseMatrix> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut DenseMatrix> {
        vec![&mut self.weight, &mut self.bias]
    }

    fn param_names(&self) -> Vec<String> {
        vec!["weight".into(), "bias".into()]
    }
}

/// Graph convolution `Â x W + b` (activation applied by the caller).
#[derive(Debug, Clone, PartialEq)]
pub struct GcnLayer {
    pub weight: DenseMatrix,
    pub bias: DenseMatrix,
}

/// Intermediates kept for the GCN backward pass.
#[derive(Debug, Clone)]
pub struct GcnCache {
    propagated: DenseMatrix,
}

impl GcnLayer {
    pub fn new<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        GcnLayer {
            weight: glorot(in_dim, out_dim, in_dim, out_dim, rng),
            bias: DenseMatrix::zeros(1, out_dim),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn forward(&self, prop: &Propagation, x: &DenseMatrix) -> Result<(DenseMatrix, GcnCache)> {
        check_cols(x, self.in_dim(), "GCN layer")?;
        let propagated = prop.apply(x)?;
        let mut z = propagated.matmul(&self.weight)?;
        z.add_row_broadcast(&self.bias)?;
        Ok((z, GcnCache { propagated }))
    }

    pub fn backward(
        &self,
        prop: &Propagation,
        cache: &GcnCache,
        dz: &DenseMatrix,
        need_input_grad: bool,
    ) -> Result<(Vec<DenseMatrix>, Option<DenseMatrix>)> {
        let dw = cache.propagated.tr_matmul(dz)?;
        let db = dz.column_sums();
        let dx = if need_input_grad {
            Some(prop.apply_transpose(&dz.matmul_tr(&self.weight)?)?)
        } else {
            None
        };
        Ok((vec![dw, db], dx))
    }
}

impl Parameterized for GcnLayer {
    fn params(&self) -> Vec<&DenseMatrix> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut DenseMatrix> {
        vec![&mut self.weight, &mut self.bias]
    }

    fn param_names(&self) -> Vec<String> {
        vec!["weight".into(), "bias".into()]
    }
}

/// Single-head GATv2 attention layer.
///
/// For target `i` and each `j` in its neighborhood (self included):
/// `e_ij = aᵀ LeakyReLU(x_i W_dst + x_j W_src)`, `α_ij = softmax_j(e_ij)`
/// and `z_i = Σ_j α_ij x_j W_src + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gatv2Layer {
    pub w_src: DenseMatrix,
    pub w_dst: DenseMatrix,
    /// Attention vector, `1 × out_dim`.
    pub attention: DenseMatrix,
    pub bias: DenseMatrix,
    pub negative_slope: f64,
}

#[derive(Debug, Clone)]
pub struct Gatv2Cache {
    query: DenseMatrix,
    key: DenseMatrix,
    /// Attention coefficients, block-major in propagation order.
    alpha: Vec<f64>,
}

impl Gatv2Cache {
    pub fn attention_weights(&self) -> &[f64] {
        &self.alpha
    }
}

impl Gatv2Layer {
    pub const DEFAULT_SLOPE: f64 = 0.2;

    pub fn new<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        Gatv2Layer {
            w_src: glorot(in_dim, out_dim, in_dim, out_dim, rng),
            w_dst: glorot(in_dim, out_dim, in_dim, out_dim, rng),
            attention: glorot(1, out_dim, out_dim, 1, rng),
            bias: DenseMatrix::zeros(1, out_dim),
            negative_slope: Self::DEFAULT_SLOPE,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w_src.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.w_src.cols()
    }

    fn leaky(&self, s: f64) -> f64 {
        if s > 0.0 {
            s
        } else {
            self.negative_slope * s
        }
    }

    pub fn forward(&self, hood: &Propagation, x: &DenseMatrix) -> Result<(DenseMatrix, Gatv2Cache)> {
        check_cols(x, self.in_dim(), "GATv2 layer")?;
        let blocks = hood.blocks(x)?;
        let n = hood.node_count();
        let d = self.out_dim();
        let query = x.matmul(&self.w_dst)?;
        let key = x.matmul(&self.w_src)?;
        let a = self.attention.data();

        let mut alpha = vec![0.0; blocks * hood.nnz()];
        let mut z = DenseMatrix::zeros(x.rows(), d);
        let mut scores = Vec::new();
        for b in 0..blocks {
            let base = b * n;
            let alpha_base = b * hood.nnz();
            for i in 0..n {
                let (cols, _) = hood.row(i);
                let q = query.row(base + i);
                scores.clear();
                for &j in cols {
                    let k = key.row(base + j);
                    let e: f64 = a
                        .iter()
                        .zip(q.iter().zip(k))
                        .map(|(at, (qt, kt))| at * self.leaky(qt + kt))
                        .sum();
                    scores.push(e);
                }
                let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for s in scores.iter_mut() {
                    *s = (*s - max).exp();
                    total += *s;
                }
                let off = alpha_base + hood.offset(i);
                let out = z.row_mut(base + i);
                for (slot, (&j, &s)) in cols.iter().zip(&scores).enumerate() {
                    let w = s / total;
                    alpha[off + slot] = w;
                    for (o, &kv) in out.iter_mut().zip(key.row(base + j)) {
                        *o += w * kv;
                    }
                }
            }
        }
        z.add_row_broadcast(&self.bias)?;
        Ok((z, Gatv2Cache { query, key, alpha }))
    }

    /// Returns `[dW_src, dW_dst, da, db]` and optionally the input gradient.
    pub fn backward(
        &self,
        hood: &Propagation,
        x: &DenseMatrix,
        cache: &Gatv2Cache,
        dz: &DenseMatrix,
        need_input_grad: bool,
    ) -> Result<(Vec<DenseMatrix>, Option<DenseMatrix>)> {
        let blocks = hood.blocks(x)?;
        let n = hood.node_count();
        let d = self.out_dim();
        let a = self.attention.data();
        let (query, key) = (&cache.query, &cache.key);

        let mut d_query = DenseMatrix::zeros(x.rows(), d);
        let mut d_key = DenseMatrix::zeros(x.rows(), d);
        let mut d_attn = vec![0.0; d];
        let mut d_alpha = Vec::new();
        let mut dq = vec![0.0; d];
        for b in 0..blocks {
            let base = b * n;
            let alpha_base = b * hood.nnz();
            for i in 0..n {
                let (cols, _) = hood.row(i);
                let off = alpha_base + hood.offset(i);
                let alpha = &cache.alpha[off..off + cols.len()];
                let g = dz.row(base + i);
                let q = query.row(base + i);

                d_alpha.clear();
                for (&j, &w) in cols.iter().zip(alpha) {
                    let k = key.row(base + j);
                    d_alpha.push(g.iter().zip(k).map(|(gv, kv)| gv * kv).sum::<f64>());
                    let dk = &mut d_key.data_mut()[(base + j) * d..(base + j + 1) * d];
                    for (dkv, gv) in dk.iter_mut().zip(g) {
                        *dkv += w * gv;
                    }
                }
                let weighted: f64 = alpha.iter().zip(&d_alpha).map(|(w, da)| w * da).sum();

                dq.fill(0.0);
                for (slot, &j) in cols.iter().enumerate() {
                    let de = alpha[slot] * (d_alpha[slot] - weighted);
                    if de == 0.0 {
                        continue;
                    }
                    let k = key.row(base + j);
                    let dk = &mut d_key.data_mut()[(base + j) * d..(base + j + 1) * d];
                    for t in 0..d {
                        let s = q[t] + k[t];
                        let (act, slope) = if s > 0.0 {
                            (s, 1.0)
                        } else {
                            (self.negative_slope * s, self.negative_slope)
                        };
                        d_attn[t] += de * act;
                        let ds = de * a[t] * slope;
                        dq[t] += ds;
                        dk[t] += ds;
                    }
                }
                for (o, v) in d_query.row_mut(base + i).iter_mut().zip(&dq) {
                    *o += v;
                }
            }
        }
        let d_attn = DenseMatrix::from_vec(1, d, d_attn)?;

        let dw_src = x.tr_matmul(&d_key)?;
        let dw_dst = x.tr_matmul(&d_query)?;
        let db = dz.column_sums();
        let dx = if need_input_grad {
            let mut dx = d_key.matmul_tr(&self.w_src)?;
            dx.add_assign(&d_query.matmul_tr(&self.w_dst)?)?;
            Some(dx)
        } else {
            None
        };
        Ok((vec![dw_src, dw_dst, d_attn, db], dx))
    }
}

impl Parameterized for Gatv2Layer {
    fn params(&self) -> Vec<&DenseMatrix> {
        vec![&self.w_src, &self.w_dst, &self.attention, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut DenseMatrix> {
        vec![&mut self.w_src, &mut self.w_dst, &mut self.attention, &mut self.bias]
    }

    fn param_names(&self) -> Vec<String> {
        vec!["w_src".into(), "w_dst".into(), "attention".into(), "bias".into()]
    }
}

/// Stack of ReLU affine layers with an optional affine output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub hidden: Vec<Linear>,
    pub output: Option<Linear>,
}

#[derive(Debug, Clone)]
pub struct MlpCache {
    /// Input of every layer, then the final output.
    activations: Vec<DenseMatrix>,
}

impl MlpCache {
    pub fn output(&self) -> &DenseMatrix {
        self.activations.last().expect("cache holds at least the input")
    }
}

impl Mlp {
    /// `hidden_dims` ReLU layers followed by an affine map to `out_dim`
    /// when given.
    pub fn new<R: Rng + ?Sized>(
        in_dim: usize,
        hidden_dims: &[usize],
        out_dim: Option<usize>,
        rng: &mut R,
    ) -> Self {
        let mut hidden = Vec::with_capacity(hidden_dims.len());
        let mut width = in_dim;
        for &h in hidden_dims {
            hidden.push(Linear::new(width, h, rng));
            width = h;
        }
        let output = out_dim.map(|o| Linear::new(width, o, rng));
        Mlp { hidden, output }
    }

    pub fn out_dim(&self, in_dim: usize) -> usize {
        match (&self.output, self.hidden.last()) {
            (Some(o), _) => o.out_dim(),
            (None, Some(h)) => h.out_dim(),
            (None, None) => in_dim,
        }
    }

    pub fn forward(&self, x: &DenseMatrix) -> Result<(DenseMatrix, MlpCache)> {
        let mut activations = vec![x.clone()];
        for layer in &self.hidden {
            let z = layer.forward(activations.last().unwrap())?;
            activations.push(Activation::Relu.apply(&z));
        }
        if let Some(out) = &self.output {
            let z = out.forward(activations.last().unwrap())?;
            activations.push(z);
        }
        let y = activations.last().unwrap().clone();
        Ok((y, MlpCache { activations }))
    }

    pub fn backward(
        &self,
        cache: &MlpCache,
        dy: &DenseMatrix,
        need_input_grad: bool,
    ) -> Result<(Vec<DenseMatrix>, Option<DenseMatrix>)> {
        let layers: Vec<&Linear> = self.hidden.iter().chain(self.output.as_ref()).collect();
        let mut grads: Vec<Vec<DenseMatrix>> = Vec::with_capacity(layers.len());
        let mut upstream = dy.clone();
        for (idx, layer) in layers.iter().enumerate().rev() {
            let is_hidden = idx < self.hidden.len();
            let dz = if is_hidden {
                Activation::Relu.backward(&cache.activations[idx + 1], &upstream)
            } else {
                upstream.clone()
            };
            let need = idx > 0 || need_input_grad;
            let (g, dx) = layer.backward(&cache.activations[idx], &dz, need)?;
            grads.push(g);
            match dx {
                Some(dx) => upstream = dx,
                None => break,
            }
        }
        let input_grad = if need_input_grad || layers.is_empty() {
            Some(upstream)
        } else {
            None
        };
        grads.reverse();
        Ok((grads.into_iter().flatten().collect(), input_grad))
    }
}

impl Parameterized for Mlp {
    fn params(&self) -> Vec<&DenseMatrix> {
        self.hidden
            .iter()
            .chain(self.output.as_ref())
            .flat_map(|l| l.params())
            .collect()
    }

    fn params_mut(&mut self) -> Vec<&mut DenseMatrix> {
        self.hidden
            .iter_mut()
            .chain(self.output.as_mut())
            .flat_map(|l| l.params_mut())
            .collect()
    }

    fn param_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for (i, _) in self.hidden.iter().enumerate() {
            names.push(format!("hidden{i}.weight"));
            names.push(format!("hidden{i}.bias"));
        }
        if self.output.is_some() {
            names.push("output.weight".into());
            names.push("output.bias".into());
        }
        names
    }
}
