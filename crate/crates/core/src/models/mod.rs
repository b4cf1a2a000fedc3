//! Informed and uninformed classifiers, their training and evaluation.

mod linear;
mod network;
mod spec;
mod split;

pub use linear::{cluster_average_features, LinearModel};
pub use network::{GnnLayer, Network, NetworkCache};
pub use spec::{GnnLayerKind, ModelKind, ModelSpec};
pub use split::{make_split, Split, SplitPlan};

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BkGraph, NodeSet};
use crate::nn::{softmax_cross_entropy, AdamState, DenseMatrix, NamedTensor, Parameterized};
use crate::seed;
use crate::synth::SynthDataset;

const INIT_STREAM: u64 = 0;
const BATCH_STREAM: u64 = 1;
const EVAL_CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Neural(Network),
    Linear(LinearModel),
}

/// Instantiates the architecture of `spec`.
///
/// Informed kinds need `graph`; cluster-averaged kinds need `clusters`.
/// Uninformed kinds never see the graph.
pub fn build_model(
    spec: &ModelSpec,
    graph: Option<&BkGraph>,
    clusters: Option<&[NodeSet]>,
    feature_dim: usize,
    classes: usize,
) -> Result<Model> {
    spec.validate()?;
    if spec.kind.is_neural() {
        let graph = if spec.kind.is_informed() { graph } else { None };
        let mut rng = seed::rng_stream(spec.seed, INIT_STREAM);
        Ok(Model::Neural(Network::new(spec, graph, feature_dim, classes, &mut rng)?))
    } else {
        let clusters = if spec.kind.uses_cluster_average() {
            let c = clusters.ok_or(Error::MissingClusters)?;
            for cluster in c {
                cluster.validate(feature_dim)?;
            }
            Some(c.to_vec())
        } else {
            None
        };
        Ok(Model::Linear(LinearModel::new(feature_dim, classes, clusters)?))
    }
}

impl Model {
    pub fn scores(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            Model::Neural(net) => Ok(net.forward(x)?.0),
            Model::Linear(m) => m.scores(x),
        }
    }

    /// Argmax class per row; ties go to the lowest class index.
    pub fn predict(&self, x: &DenseMatrix) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(x.rows());
        for start in (0..x.rows()).step_by(EVAL_CHUNK) {
            let idx: Vec<usize> = (start..(start + EVAL_CHUNK).min(x.rows())).collect();
            let scores = self.scores(&x.select_rows(&idx))?;
            out.extend((0..scores.rows()).map(|i| argmax(scores.row(i))));
        }
        Ok(out)
    }

    pub fn named_tensors(&self) -> Vec<NamedTensor> {
        let (names, values): (Vec<String>, Vec<&DenseMatrix>) = match self {
            Model::Neural(net) => (net.param_names(), net.params()),
            Model::Linear(m) => (vec!["weight".into(), "bias".into()], vec![&m.weight, &m.bias]),
        };
        names
            .into_iter()
            .zip(values)
            .map(|(name, value)| NamedTensor {
                name,
                value: value.clone(),
            })
            .collect()
    }

    /// Overwrites parameters from tensors with matching names and shapes.
    pub fn load_tensors(&mut self, tensors: &[NamedTensor]) -> Result<()> {
        let names = match self {
            Model::Neural(net) => net.param_names(),
            Model::Linear(_) => vec!["weight".into(), "bias".into()],
        };
        let targets: Vec<&mut DenseMatrix> = match self {
            Model::Neural(net) => net.params_mut(),
            Model::Linear(m) => vec![&mut m.weight, &mut m.bias],
        };
        if tensors.len() != names.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} tensors, found {}",
                names.len(),
                tensors.len()
            )));
        }
        for ((target, name), t) in targets.into_iter().zip(&names).zip(tensors) {
            if &t.name != name || t.value.shape() != target.shape() {
                return Err(Error::Checkpoint(format!(
                    "tensor {} {:?} does not match {name} {:?}",
                    t.name,
                    t.value.shape(),
                    target.shape()
                )));
            }
            *target = t.value.clone();
        }
        Ok(())
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// Contents of a training config file: a `[model]` table with
/// [`ModelSpec`] fields and an optional `[split]` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub split: SplitPlan,
}

impl TrainConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: TrainConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.model.validate()?;
        config.split.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub model: Model,
    /// Mean training loss per epoch (objective value for linear kinds).
    pub history: Vec<f64>,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

impl TrainedModel {
    pub fn history_csv(&self) -> String {
        let mut out = String::from("epoch,loss\n");
        for (e, l) in self.history.iter().enumerate() {
            let _ = writeln!(out, "{},{l}", e + 1);
        }
        out
    }
}

fn check_split(split: &Split, samples: usize) -> Result<()> {
    let mut seen = vec![false; samples];
    for &i in split.train.iter().chain(&split.test) {
        if i >= samples || std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidParam(format!(
                "split index {i} is out of range or repeated"
            )));
        }
    }
    if split.train.is_empty() {
        return Err(Error::EmptyInput("training split"));
    }
    Ok(())
}

/// Fits `spec` on the training part of `split`.
///
/// `graph` is the (possibly perturbed) BK graph handed to informed kinds.
pub fn train(
    spec: &ModelSpec,
    dataset: &SynthDataset,
    split: &Split,
    graph: Option<&BkGraph>,
) -> Result<TrainedModel> {
    check_split(split, dataset.sample_count())?;
    let classes = dataset.classes();
    let mut model = build_model(
        spec,
        graph,
        Some(&dataset.clusters),
        dataset.features.cols(),
        classes,
    )?;
    let x = dataset.features.select_rows(&split.train);
    let y: Vec<usize> = split.train.iter().map(|&i| dataset.labels[i]).collect();
    let history = match &mut model {
        Model::Neural(net) => fit_neural(spec, net, &x, &y)?,
        Model::Linear(m) => m.fit(spec, &x, &y)?,
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        model,
        history,
        train_indices: split.train.clone(),
        test_indices: split.test.clone(),
    })
}

fn fit_neural(spec: &ModelSpec, net: &mut Network, x: &DenseMatrix, y: &[usize]) -> Result<Vec<f64>> {
    let mut adam = AdamState::new(net.params(), spec.lr);
    let mut rng = seed::rng_stream(spec.seed, BATCH_STREAM);
    let mut order: Vec<usize> = (0..x.rows()).collect();
    let mut history = Vec::with_capacity(spec.epochs);
    for epoch in 0..spec.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(spec.batch_size) {
            let xb = x.select_rows(batch);
            let yb: Vec<usize> = batch.iter().map(|&i| y[i]).collect();
            let (logits, cache) = net.forward(&xb)?;
            let (loss, d_logits) = softmax_cross_entropy(&logits, &yb)?;
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch, loss });
            }
            total += loss * batch.len() as f64;
            let grads = net.backward(&cache, &d_logits)?;
            adam.step(net.params_mut(), &grads)?;
        }
        let mean = total / x.rows() as f64;
        if !mean.is_finite() || !net.params().iter().all(|p| p.all_finite()) {
            return Err(Error::TrainingDiverged { epoch, loss: mean });
        }
        history.push(mean);
    }
    Ok(history)
}

/// Fraction of `indices` whose argmax prediction equals the label.
pub fn evaluate(trained: &TrainedModel, dataset: &SynthDataset, indices: &[usize]) -> Result<f64> {
    accuracy(&trained.model, &dataset.features, &dataset.labels, indices)
}

pub fn accuracy(model: &Model, features: &DenseMatrix, labels: &[usize], indices: &[usize]) -> Result<f64> {
    if indices.is_empty() {
        return Err(Error::EmptyInput("evaluation indices"));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= labels.len()) {
        return Err(Error::InvalidParam(format!("sample index {bad} out of range")));
    }
    let predictions = model.predict(&features.select_rows(indices))?;
    let correct = predictions
        .iter()
        .zip(indices)
        .filter(|(p, &i)| **p == labels[i])
        .count();
    Ok(correct as f64 / indices.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{build_cluster_graph, SynthParams};

    fn toy() -> SynthDataset {
        // Two clusters of two nodes; class c has large values on cluster c.
        let (graph, clusters) = build_cluster_graph(2, 2);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            let c = i % 2;
            let jitter = (i as f64 * 0.37).sin() * 0.2;
            let mut r = vec![-1.0 + jitter; 4];
            r[2 * c] = 1.0 - jitter;
            r[2 * c + 1] = 1.0 + jitter;
            rows.push(r);
            labels.push(c);
        }
        SynthDataset {
            graph,
            features: DenseMatrix::from_rows(&rows).unwrap(),
            labels,
            clusters,
            params: SynthParams {
                classes: 2,
                nodes_per_cluster: 2,
                samples_per_class: 20,
                ..SynthParams::default()
            },
        }
    }

    #[test]
    fn train_config_parses() {
        let c = TrainConfig::from_toml("[model]\nkind = \"gcn\"\nepochs = 5\n").unwrap();
        assert_eq!((c.model.kind, c.model.epochs), (ModelKind::Gcn, 5));
        assert_eq!(c.split, SplitPlan::default());
        let c = TrainConfig::from_toml(
            "[model]\nkind = \"mlp\"\n[split]\ntest_fraction = 0.5\nseed = 4\n",
        )
        .unwrap();
        assert_eq!((c.split.test_fraction, c.split.seed), (0.5, 4));
        assert!(TrainConfig::from_toml("[model]\nkind = \"mlp\"\nlayers = 2\n").is_err());
        assert!(TrainConfig::from_toml("[model]\nkind = \"mlp\"\nmlp_hidden_layers = 5\n").is_err());
    }

    #[test]
    fn every_kind_separates_toy_set() {
        let data = toy();
        let split = make_split(&data.labels, 2, &SplitPlan::default()).unwrap();
        for kind in ModelKind::ALL {
            let mut spec = ModelSpec::new(kind);
            spec.epochs = 100;
            spec.lr = 1e-2;
            spec.batch_size = 8;
            spec.hidden_dim = 4;
            spec.mlp_hidden_dim = 8;
            let t = train(&spec, &data, &split, Some(&data.graph)).unwrap();
            assert_eq!(t.history.len(), 100);
            let acc = evaluate(&t, &data, &split.train).unwrap();
            assert_eq!(acc, 1.0, "{}", kind.as_str());
        }
    }

    #[test]
    fn huge_l1_zeroes_weights() {
        let data = toy();
        let split = make_split(&data.labels, 2, &SplitPlan::default()).unwrap();
        let mut spec = ModelSpec::new(ModelKind::LogregL1);
        spec.l1_lambda = 1e6;
        let t = train(&spec, &data, &split, None).unwrap();
        let Model::Linear(m) = &t.model else { panic!() };
        assert!(m.weight.data().iter().all(|&w| w == 0.0));
        assert_eq!(evaluate(&t, &data, &split.test).unwrap(), 0.5);
    }

    #[test]
    fn accuracy_arithmetic_and_ties() {
        let mut m = LinearModel::new(1, 2, None).unwrap();
        m.weight = DenseMatrix::from_rows(&[vec![1.0]]).unwrap();
        let model = Model::Linear(m);
        let x = DenseMatrix::from_rows(&[vec![1.0], vec![-1.0], vec![2.0], vec![0.0]]).unwrap();
        // Scores 1, -1, 2, 0 -> predictions 1, 0, 1, 0 (tie at 0 goes to class 0).
        assert_eq!(model.predict(&x).unwrap(), vec![1, 0, 1, 0]);
        assert_eq!(accuracy(&model, &x, &[1, 0, 1, 1], &[0, 1, 2, 3]).unwrap(), 0.75);
        assert_eq!(accuracy(&model, &x, &[1, 0, 1, 0], &[0, 1, 2, 3]).unwrap(), 1.0);
    }

    #[test]
    fn checkpoint_tensors_round_trip() {
        let data = toy();
        let split = make_split(&data.labels, 2, &SplitPlan::default()).unwrap();
        let mut spec = ModelSpec::new(ModelKind::Parallel);
        spec.epochs = 2;
        let t = train(&spec, &data, &split, Some(&data.graph)).unwrap();
        let tensors = t.model.named_tensors();
        let mut fresh = build_model(&spec, Some(&data.graph), None, 4, 2).unwrap();
        assert_ne!(fresh, t.model);
        fresh.load_tensors(&tensors).unwrap();
        assert_eq!(fresh, t.model);
        assert!(fresh.load_tensors(&tensors[1..]).is_err());
    }

    #[test]
    fn missing_inputs_rejected() {
        let spec = ModelSpec::new(ModelKind::Gcn);
        assert!(matches!(
            build_model(&spec, None, None, 4, 2),
            Err(Error::MissingGraph(_))
        ));
        let spec = ModelSpec::new(ModelKind::ClusterAvgSvm);
        assert!(matches!(build_model(&spec, None, None, 4, 2), Err(Error::MissingClusters)));
    }
}
