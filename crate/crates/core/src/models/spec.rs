use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Gcn,
    Gatv2,
    /// GNN branch and MLP branch side by side, concatenated before the classifier.
    Parallel,
    Mlp,
    LogregL1,
    LinearSvm,
    ClusterAvgLogreg,
    ClusterAvgSvm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 8] = [
        ModelKind::Gcn,
        ModelKind::Gatv2,
        ModelKind::Parallel,
        ModelKind::Mlp,
        ModelKind::LogregL1,
        ModelKind::LinearSvm,
        ModelKind::ClusterAvgLogreg,
        ModelKind::ClusterAvgSvm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Gcn => "gcn",
            ModelKind::Gatv2 => "gatv2",
            ModelKind::Parallel => "parallel",
            ModelKind::Mlp => "mlp",
            ModelKind::LogregL1 => "logreg-l1",
            ModelKind::LinearSvm => "linear-svm",
            ModelKind::ClusterAvgLogreg => "cluster-avg-logreg",
            ModelKind::ClusterAvgSvm => "cluster-avg-svm",
        }
    }

    /// Whether the model reads the background-knowledge graph.
    pub fn is_informed(self) -> bool {
        matches!(self, ModelKind::Gcn | ModelKind::Gatv2 | ModelKind::Parallel)
    }

    pub fn is_neural(self) -> bool {
        matches!(
            self,
            ModelKind::Gcn | ModelKind::Gatv2 | ModelKind::Parallel | ModelKind::Mlp
        )
    }

    pub fn uses_cluster_average(self) -> bool {
        matches!(self, ModelKind::ClusterAvgLogreg | ModelKind::ClusterAvgSvm)
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidParam(format!("unknown model kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GnnLayerKind {
    Gcn,
    #[default]
    Gatv2,
}

/// Architecture and optimization settings of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// Label used in result tables; defaults to the kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kind: ModelKind,
    /// Message-passing layer type of the `parallel` kind.
    #[serde(default)]
    pub gnn_layer: GnnLayerKind,
    #[serde(default = "defaults::gnn_layers")]
    pub gnn_layers: usize,
    #[serde(default = "defaults::hidden_dim")]
    pub hidden_dim: usize,
    #[serde(default = "defaults::mlp_hidden_layers")]
    pub mlp_hidden_layers: usize,
    #[serde(default = "defaults::mlp_hidden_dim")]
    pub mlp_hidden_dim: usize,
    #[serde(default = "defaults::l1_lambda")]
    pub l1_lambda: f64,
    #[serde(default = "defaults::svm_c")]
    pub svm_c: f64,
    #[serde(default = "defaults::epochs")]
    pub epochs: usize,
    #[serde(default = "defaults::lr")]
    pub lr: f64,
    #[serde(default = "defaults::batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
}

mod defaults {
    pub fn gnn_layers() -> usize {
        3
    }
    pub fn hidden_dim() -> usize {
        16
    }
    pub fn mlp_hidden_layers() -> usize {
        2
    }
    pub fn mlp_hidden_dim() -> usize {
        64
    }
    pub fn l1_lambda() -> f64 {
        1e-2
    }
    pub fn svm_c() -> f64 {
        1.0
    }
    pub fn epochs() -> usize {
        200
    }
    pub fn lr() -> f64 {
        1e-3
    }
    pub fn batch_size() -> usize {
        64
    }
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        ModelSpec {
            name: None,
            kind,
            gnn_layer: GnnLayerKind::default(),
            gnn_layers: defaults::gnn_layers(),
            hidden_dim: defaults::hidden_dim(),
            mlp_hidden_layers: defaults::mlp_hidden_layers(),
            mlp_hidden_dim: defaults::mlp_hidden_dim(),
            l1_lambda: defaults::l1_lambda(),
            svm_c: defaults::svm_c(),
            epochs: defaults::epochs(),
            lr: defaults::lr(),
            batch_size: defaults::batch_size(),
            seed: 0,
        }
    }

    pub fn label(&self) -> String {
        match (&self.name, self.kind) {
            (Some(n), _) => n.clone(),
            (None, ModelKind::Parallel) => match self.gnn_layer {
                GnnLayerKind::Gcn => "parallel-gcn".into(),
                GnnLayerKind::Gatv2 => "parallel-gatv2".into(),
            },
            (None, k) => k.as_str().into(),
        }
    }

    /// Message-passing layer type, if the model has a GNN branch.
    pub fn message_passing(&self) -> Option<GnnLayerKind> {
        match self.kind {
            ModelKind::Gcn => Some(GnnLayerKind::Gcn),
            ModelKind::Gatv2 => Some(GnnLayerKind::Gatv2),
            ModelKind::Parallel => Some(self.gnn_layer),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParam(format!("model {}: {msg}", self.label())));
        if let Some(name) = &self.name {
            if name.is_empty() || name.contains([',', '\n', '"']) {
                return bad(format!("name {name:?} must be non-empty without commas or quotes"));
            }
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1".into());
        }
        if self.kind.is_neural() {
            if !(self.lr > 0.0 && self.lr.is_finite()) {
                return bad(format!("lr must be positive, got {}", self.lr));
            }
            if self.batch_size == 0 {
                return bad("batch_size must be >= 1".into());
            }
        }
        if self.kind.is_informed() && (self.gnn_layers == 0 || self.hidden_dim == 0) {
            return bad("gnn_layers and hidden_dim must be >= 1".into());
        }
        if matches!(self.kind, ModelKind::Mlp | ModelKind::Parallel) {
            if !(2..=3).contains(&self.mlp_hidden_layers) {
                return bad(format!(
                    "mlp_hidden_layers must be 2 or 3, got {}",
                    self.mlp_hidden_layers
                ));
            }
            if self.mlp_hidden_dim == 0 {
                return bad("mlp_hidden_dim must be >= 1".into());
            }
        }
        if !(self.l1_lambda >= 0.0 && self.l1_lambda.is_finite()) {
            return bad(format!("l1_lambda must be >= 0, got {}", self.l1_lambda));
        }
        if !(self.svm_c > 0.0 && self.svm_c.is_finite()) {
            return bad(format!("svm_c must be positive, got {}", self.svm_c));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_fields() {
        let spec: ModelSpec = toml::from_str("kind = \"parallel\"").unwrap();
        assert_eq!(spec, ModelSpec::new(ModelKind::Parallel));
        assert_eq!(spec.label(), "parallel-gatv2");
        assert_eq!((spec.gnn_layers, spec.hidden_dim, spec.batch_size), (3, 16, 64));
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in ModelKind::ALL {
            assert_eq!(kind.as_str().parse::<ModelKind>().unwrap(), kind);
            let spec: ModelSpec = toml::from_str(&format!("kind = \"{}\"", kind.as_str())).unwrap();
            assert_eq!(spec.kind, kind);
        }
    }

    #[test]
    fn validation() {
        let mut spec = ModelSpec::new(ModelKind::Mlp);
        spec.mlp_hidden_layers = 4;
        assert!(spec.validate().is_err());
        spec.mlp_hidden_layers = 3;
        assert!(spec.validate().is_ok());
        spec.name = Some("a,b".into());
        assert!(spec.validate().is_err());
        assert!(toml::from_str::<ModelSpec>("kind = \"mlp\"\nlayers = 2").is_err());
    }
}
