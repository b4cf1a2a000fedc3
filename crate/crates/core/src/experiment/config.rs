use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ModelSpec, SplitPlan};
use crate::perturb::PerturbationKind;
use crate::synth::SynthParams;

/// Where the samples of a sweep come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetSource {
    /// A bundle directory written by `write_bundle`.
    Bundle { bundle: PathBuf },
    /// Synthetic parameters; the seed field is replaced per run.
    Synthetic(SynthParams),
}

impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource::Synthetic(SynthParams::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationGrid {
    /// Operator name: remove, add, noise, isolate or rewire.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    /// Severities, ascending and starting at 0.
    pub kappas: Vec<f64>,
}

impl PerturbationGrid {
    pub fn operator(&self) -> Result<PerturbationKind> {
        PerturbationKind::from_parts(&self.kind, self.variant.as_deref())
    }
}

/// A κ-sweep over models for one perturbation operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Reuse the run-0 dataset in every run instead of resampling it.
    #[serde(default)]
    pub freeze_dataset: bool,
    #[serde(default)]
    pub dataset: DatasetSource,
    #[serde(default)]
    pub split: SplitPlan,
    pub perturbation: PerturbationGrid,
    pub models: Vec<ModelSpec>,
}

fn default_runs() -> usize {
    10
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: SweepConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let DatasetSource::Bundle { bundle } = &mut config.dataset {
            if bundle.is_relative() {
                if let Some(dir) = path.parent() {
                    *bundle = dir.join(&*bundle);
                }
            }
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("sweep config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.runs == 0 {
            return bad("runs must be >= 1".into());
        }
        let kind = self.perturbation.operator()?;
        let kappas = &self.perturbation.kappas;
        if kappas.first() != Some(&0.0) {
            return bad("kappa grid must start at 0".into());
        }
        if kappas.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("kappa grid must be strictly ascending".into());
        }
        for &k in kappas {
            kind.check_kappa(k)?;
        }
        self.split.validate()?;
        if self.models.is_empty() {
            return bad("at least one model is required".into());
        }
        let mut labels = Vec::new();
        for spec in &self.models {
            spec.validate()?;
            let label = spec.label();
            if labels.contains(&label) {
                return bad(format!("duplicate model label {label:?}; set distinct names"));
            }
            labels.push(label);
        }
        if let DatasetSource::Synthetic(p) = &self.dataset {
            p.validate()?;
            if p.classes < 2 {
                return bad("sweeps need at least 2 classes".into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
runs = 1
[perturbation]
kind = "remove"
kappas = [0.0]
[[models]]
kind = "mlp"
"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = SweepConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.dataset, DatasetSource::Synthetic(SynthParams::default()));
        assert_eq!(c.split, SplitPlan::default());
        assert_eq!(SweepConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn bundle_source() {
        let text = MINIMAL.replace("runs = 1", "runs = 1\n[dataset]\nbundle = \"data\"");
        let c = SweepConfig::from_toml(&text).unwrap();
        assert_eq!(c.dataset, DatasetSource::Bundle { bundle: "data".into() });
    }

    #[test]
    fn invalid_grids() {
        for (from, to) in [
            ("kappas = [0.0]", "kappas = [0.1, 0.2]"),
            ("kappas = [0.0]", "kappas = [0.0, 0.5, 0.5]"),
            ("kappas = [0.0]", "kappas = [0.0, 1.5]"),
            ("runs = 1", "runs = 0"),
            ("kind = \"remove\"", "kind = \"shuffle\""),
            ("kind = \"mlp\"", "kind = \"mlp\"\n[[models]]\nkind = \"mlp\""),
        ] {
            assert!(SweepConfig::from_toml(&MINIMAL.replace(from, to)).is_err(), "{to}");
        }
        assert!(SweepConfig::from_toml(&MINIMAL.replace("runs = 1", "runs = 1\nbogus = 2")).is_err());
    }
}
