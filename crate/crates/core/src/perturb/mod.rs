//! κ-parameterized perturbations of background-knowledge graphs.
//!
//! | operator       | κ meaning                                   | range  |
//! |----------------|---------------------------------------------|--------|
//! | remove edges   | fraction of edges deleted                   | [0, 1] |
//! | add edges      | new edges as a fraction of the current ones | ≥ 0    |
//! | weight noise   | std. dev. of the integer weight noise       | ≥ 0    |
//! | isolate nodes  | fraction of nodes stripped of all edges     | [0, 1] |
//! | detach-rewire  | fraction of each source cluster moved       | [0, 1] |
//!
//! Counts are `round(κ · total)` with halves rounded away from zero. All
//! operators are pure: they return a new graph plus a provenance record
//! of exactly what was changed.

mod ops;

pub use ops::{add_edges, detach_rewire, isolate_nodes, remove_edges, weight_noise};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BkGraph, NodeSet, Weight};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseVariant {
    /// Edges whose weight drops below 1 are deleted.
    RemoveNegatives,
    /// Such edges are deleted and replaced by a random non-edge.
    ReplaceNegatives,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IsolationVariant {
    Random,
    PerCluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewireMode {
    /// Nodes move from the last cluster into the first one.
    Drain,
    /// Every cluster `c` sends nodes to cluster `(c + 1) mod C`.
    Exchange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PerturbationKind {
    RemoveEdges,
    AddEdges,
    WeightNoise(NoiseVariant),
    IsolateNodes(IsolationVariant),
    DetachRewire(RewireMode),
}

impl PerturbationKind {
    pub fn name(&self) -> &'static str {
        match self {
            PerturbationKind::RemoveEdges => "remove",
            PerturbationKind::AddEdges => "add",
            PerturbationKind::WeightNoise(_) => "noise",
            PerturbationKind::IsolateNodes(_) => "isolate",
            PerturbationKind::DetachRewire(_) => "rewire",
        }
    }

    /// Variant token, or `None` for operators without variants.
    pub fn variant(&self) -> Option<&'static str> {
        match self {
            PerturbationKind::RemoveEdges | PerturbationKind::AddEdges => None,
            PerturbationKind::WeightNoise(NoiseVariant::RemoveNegatives) => Some("remove"),
            PerturbationKind::WeightNoise(NoiseVariant::ReplaceNegatives) => Some("replace"),
            PerturbationKind::IsolateNodes(IsolationVariant::Random) => Some("random"),
            PerturbationKind::IsolateNodes(IsolationVariant::PerCluster) => Some("per-cluster"),
            PerturbationKind::DetachRewire(RewireMode::Drain) => Some("drain"),
            PerturbationKind::DetachRewire(RewireMode::Exchange) => Some("exchange"),
        }
    }

    /// Builds a kind from its name and optional variant token; a missing
    /// variant selects the operator's default.
    pub fn from_parts(name: &str, variant: Option<&str>) -> Result<Self> {
        let bad_variant = |v: &str| Error::InvalidParam(format!("unknown variant {v:?} for {name}"));
        let kind = match (name, variant) {
            ("remove", None) => PerturbationKind::RemoveEdges,
            ("add", None) => PerturbationKind::AddEdges,
            ("noise", None | Some("remove")) => {
                PerturbationKind::WeightNoise(NoiseVariant::RemoveNegatives)
            }
            ("noise", Some("replace")) => {
                PerturbationKind::WeightNoise(NoiseVariant::ReplaceNegatives)
            }
            ("isolate", None | Some("random")) => {
                PerturbationKind::IsolateNodes(IsolationVariant::Random)
            }
            ("isolate", Some("per-cluster")) => {
                PerturbationKind::IsolateNodes(IsolationVariant::PerCluster)
            }
            ("rewire", None | Some("drain")) => PerturbationKind::DetachRewire(RewireMode::Drain),
            ("rewire", Some("exchange")) => PerturbationKind::DetachRewire(RewireMode::Exchange),
            ("remove" | "add" | "noise" | "isolate" | "rewire", Some(v)) => {
                return Err(bad_variant(v))
            }
            _ => return Err(Error::InvalidParam(format!("unknown perturbation {name:?}"))),
        };
        Ok(kind)
    }

    /// Whether κ is a fraction bounded by 1 for this operator.
    pub fn bounded(&self) -> bool {
        matches!(
            self,
            PerturbationKind::RemoveEdges
                | PerturbationKind::IsolateNodes(_)
                | PerturbationKind::DetachRewire(_)
        )
    }

    pub fn check_kappa(&self, kappa: f64) -> Result<()> {
        let ok = kappa.is_finite() && kappa >= 0.0 && (!self.bounded() || kappa <= 1.0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSeverity {
                kind: self.name(),
                kappa,
            })
        }
    }
}

/// One operator, its severity and the seed of its random stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub kind: PerturbationKind,
    pub kappa: f64,
    pub seed: u64,
}

impl Perturbation {
    pub fn new(kind: PerturbationKind, kappa: f64, seed: u64) -> Result<Self> {
        kind.check_kappa(kappa)?;
        Ok(Perturbation { kind, kappa, seed })
    }

    pub fn apply(&self, g: &BkGraph, clusters: Option<&[NodeSet]>) -> Result<Perturbed> {
        self.kind.check_kappa(self.kappa)?;
        let mut rng = seed::rng(self.seed);
        let mut out = match self.kind {
            PerturbationKind::RemoveEdges => remove_edges(g, self.kappa, &mut rng)?,
            PerturbationKind::AddEdges => add_edges(g, self.kappa, &mut rng)?,
            PerturbationKind::WeightNoise(v) => weight_noise(g, self.kappa, v, &mut rng)?,
            PerturbationKind::IsolateNodes(v) => isolate_nodes(g, self.kappa, v, clusters, &mut rng)?,
            PerturbationKind::DetachRewire(mode) => {
                let clusters = clusters.ok_or(Error::MissingClusters)?;
                detach_rewire(g, clusters, self.kappa, mode, &mut rng)?
            }
        };
        if out.clusters.is_none() {
            out.clusters = clusters.map(<[NodeSet]>::to_vec);
        }
        out.provenance.descriptor = self.to_string();
        out.provenance.seed = self.seed;
        Ok(out)
    }
}

impl fmt::Display for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.name(), self.kappa)?;
        if let Some(v) = self.kind.variant() {
            write!(f, ":{v}")?;
        }
        write!(f, ":{}", self.seed)
    }
}

impl FromStr for Perturbation {
    type Err = Error;

    /// Parses `kind:kappa[:variant][:seed]`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let invalid = |msg: String| Error::InvalidParam(format!("descriptor {s:?}: {msg}"));
        if !(2..=4).contains(&parts.len()) {
            return Err(invalid("expected kind:kappa[:variant][:seed]".into()));
        }
        let kappa: f64 = parts[1]
            .parse()
            .map_err(|_| invalid(format!("invalid kappa {:?}", parts[1])))?;
        let has_variants = PerturbationKind::from_parts(parts[0], None)?.variant().is_some();
        let (variant, seed_token) = match &parts[2..] {
            [] => (None, None),
            [one] if !has_variants || one.parse::<u64>().is_ok() => (None, Some(*one)),
            [one] => (Some(*one), None),
            [v, sd] if has_variants => (Some(*v), Some(*sd)),
            _ => return Err(invalid("too many fields".into())),
        };
        let kind = PerturbationKind::from_parts(parts[0], variant)?;
        let seed = match seed_token {
            Some(t) => t.parse().map_err(|_| invalid(format!("invalid seed {t:?}")))?,
            None => 0,
        };
        Perturbation::new(kind, kappa, seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MovedNode {
    pub node: usize,
    pub from: usize,
    pub to: usize,
}

/// What an operator changed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub descriptor: String,
    pub seed: u64,
    pub removed_edges: Vec<(usize, usize, Weight)>,
    pub added_edges: Vec<(usize, usize, Weight)>,
    pub reweighted_edges: usize,
    pub isolated_nodes: Vec<usize>,
    pub moved_nodes: Vec<MovedNode>,
    /// Replacement edges that could not be placed because the graph was complete.
    pub dropped_replacements: usize,
}

impl Provenance {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("provenance serializes") + "\n"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Perturbed {
    pub graph: BkGraph,
    /// Cluster assignment after the perturbation, when clusters were given.
    pub clusters: Option<Vec<NodeSet>>,
    pub provenance: Provenance,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptor_parsing() {
        let p: Perturbation = "remove:0.3:42".parse().unwrap();
        assert_eq!(p.kind, PerturbationKind::RemoveEdges);
        assert_eq!((p.kappa, p.seed), (0.3, 42));

        let p: Perturbation = "noise:2.0:replace:7".parse().unwrap();
        assert_eq!(p.kind, PerturbationKind::WeightNoise(NoiseVariant::ReplaceNegatives));
        assert_eq!(p.to_string(), "noise:2:replace:7");

        let p: Perturbation = "isolate:0.125:9".parse().unwrap();
        assert_eq!(p.kind, PerturbationKind::IsolateNodes(IsolationVariant::Random));
        assert_eq!(p.seed, 9);

        let p: Perturbation = "add:1".parse().unwrap();
        assert_eq!((p.kind, p.seed), (PerturbationKind::AddEdges, 0));
    }

    #[test]
    fn descriptor_round_trip() {
        for s in ["remove:0.5:1", "add:2:3", "rewire:0.1875:exchange:4", "isolate:1:per-cluster:0"] {
            let p: Perturbation = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
    }

    #[test]
    fn descriptor_errors() {
        assert!("remove:1.5".parse::<Perturbation>().is_err());
        assert!("add:-0.1".parse::<Perturbation>().is_err());
        assert!("shuffle:0.1".parse::<Perturbation>().is_err());
        assert!("noise:1:sideways".parse::<Perturbation>().is_err());
        assert!("remove:0.1:2:3".parse::<Perturbation>().is_err());
        assert!("remove".parse::<Perturbation>().is_err());
        assert!("add:3".parse::<Perturbation>().is_ok());
        assert!("noise:5".parse::<Perturbation>().is_ok());
    }
}
