//! Synthetic graph-classification datasets with an informative BK graph.
//!
//! The graph is `C` disjoint cliques of `M` nodes. A sample of class `c`
//! draws the features of cluster `c` from the active distribution
//! `SN(Δξ/2, ω, α)` and every other feature from the mirrored inactive
//! distribution `SN(−Δξ/2, ω, −α)`.

mod bundle;
mod quadrature;
mod skew_normal;

pub use bundle::{read_bundle, write_bundle, BundleFiles};
pub use quadrature::adaptive_simpson;
pub use skew_normal::{skew_normal_pdf, std_normal_cdf, std_normal_pdf, SkewNormal};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BkGraph, NodeSet};
use crate::nn::DenseMatrix;
use crate::seed;

const FEATURE_STREAM: u64 = 0;
const SHUFFLE_STREAM: u64 = 1;
const OVERLAP_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    /// Number of clusters, which is also the number of classes.
    pub classes: usize,
    pub nodes_per_cluster: usize,
    pub samples_per_class: usize,
    /// Distance between the active and inactive locations.
    pub delta_xi: f64,
    pub omega: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            classes: 2,
            nodes_per_cluster: 16,
            samples_per_class: 600,
            delta_xi: -0.57,
            omega: 0.5,
            alpha: 1.8,
            seed: 0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.nodes_per_cluster == 0 || self.samples_per_class == 0 {
            return Err(Error::InvalidParam(
                "classes, nodes_per_cluster and samples_per_class must be >= 1".into(),
            ));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidParam(format!("omega must be positive, got {}", self.omega)));
        }
        if !self.delta_xi.is_finite() || !self.alpha.is_finite() {
            return Err(Error::InvalidParam("delta_xi and alpha must be finite".into()));
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.classes * self.nodes_per_cluster
    }

    pub fn sample_count(&self) -> usize {
        self.classes * self.samples_per_class
    }

    pub fn active(&self) -> Result<SkewNormal> {
        SkewNormal::new(self.delta_xi / 2.0, self.omega, self.alpha)
    }

    pub fn inactive(&self) -> Result<SkewNormal> {
        SkewNormal::new(-self.delta_xi / 2.0, self.omega, -self.alpha)
    }

    pub fn overlap(&self) -> Result<f64> {
        overlap_coefficient(self.delta_xi, self.omega, self.alpha)
    }
}

/// Shared graph, per-sample node features and labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub graph: BkGraph,
    /// `samples × nodes`; column `j` is the feature of node `j`.
    pub features: DenseMatrix,
    pub labels: Vec<usize>,
    pub clusters: Vec<NodeSet>,
    pub params: SynthParams,
}

impl SynthDataset {
    pub fn classes(&self) -> usize {
        self.params.classes
    }

    pub fn sample_count(&self) -> usize {
        self.labels.len()
    }
}

/// `C` disjoint cliques; cluster `c` holds nodes `cM..cM+M`.
pub fn build_cluster_graph(classes: usize, nodes_per_cluster: usize) -> (BkGraph, Vec<NodeSet>) {
    let m = nodes_per_cluster;
    let mut graph = BkGraph::empty(classes * m);
    let mut clusters = Vec::with_capacity(classes);
    for c in 0..classes {
        let base = c * m;
        for u in base..base + m {
            for v in u + 1..base + m {
                graph
                    .insert_edge(u, v, 1)
                    .expect("clique edges are in range and loop-free");
            }
        }
        clusters.push(NodeSet::range(base, m));
    }
    (graph, clusters)
}

/// Overlapping coefficient `∫ min(f_active, f_inactive) dx`.
pub fn overlap_coefficient(delta_xi: f64, omega: f64, alpha: f64) -> Result<f64> {
    let active = SkewNormal::new(delta_xi / 2.0, omega, alpha)?;
    let inactive = SkewNormal::new(-delta_xi / 2.0, omega, -alpha)?;
    let spans = [
        (active.location() - 10.0 * omega, active.location() + 10.0 * omega),
        (inactive.location() - 10.0 * omega, inactive.location() + 10.0 * omega),
    ];
    let integrand = |x: f64| active.pdf(x).min(inactive.pdf(x));
    let (lo, hi) = (spans[0].0.min(spans[1].0), spans[0].1.max(spans[1].1));
    let value = if spans[0].1 < spans[1].0 || spans[1].1 < spans[0].0 {
        spans
            .iter()
            .map(|&(a, b)| adaptive_simpson(integrand, a, b, OVERLAP_TOLERANCE / 2.0))
            .sum()
    } else {
        adaptive_simpson(integrand, lo, hi, OVERLAP_TOLERANCE)
    };
    Ok(value.clamp(0.0, 1.0))
}

/// Generates `D(C, M, N)`.
///
/// Rows are produced class by class and then shuffled with a stream that
/// is independent of the feature stream.
pub fn generate_dataset(params: &SynthParams) -> Result<SynthDataset> {
    params.validate()?;
    let active = params.active()?;
    let inactive = params.inactive()?;
    let (graph, clusters) = build_cluster_graph(params.classes, params.nodes_per_cluster);
    let (n_nodes, n_samples) = (params.node_count(), params.sample_count());
    let m = params.nodes_per_cluster;

    let mut feature_rng = seed::rng_stream(params.seed, FEATURE_STREAM);
    let mut blocked = Vec::with_capacity(n_samples * n_nodes);
    for class in 0..params.classes {
        let active_cols = class * m..(class + 1) * m;
        for _ in 0..params.samples_per_class {
            for col in 0..n_nodes {
                let dist = if active_cols.contains(&col) { &active } else { &inactive };
                blocked.push(dist.sample(&mut feature_rng));
            }
        }
    }

    let mut order: Vec<usize> = (0..n_samples).collect();
    order.shuffle(&mut seed::rng_stream(params.seed, SHUFFLE_STREAM));
    let mut data = Vec::with_capacity(blocked.len());
    let mut labels = Vec::with_capacity(n_samples);
    for &src in &order {
        data.extend_from_slice(&blocked[src * n_nodes..(src + 1) * n_nodes]);
        labels.push(src / params.samples_per_class);
    }

    Ok(SynthDataset {
        graph,
        features: DenseMatrix::from_vec(n_samples, n_nodes, data)?,
        labels,
        clusters,
        params: *params,
    })
}
