//! κ-sweeps over models and perturbation severities, aggregation to
//! mean ± 95% CI, and SVG curves.
//!
//! Seeds are derived with [`seed::derive_seed`] from the master seed and
//! cell coordinates:
//!
//! | stream        | parts                                        |
//! |---------------|----------------------------------------------|
//! | dataset       | `[0, run]` (`[0, 0]` with `freeze_dataset`)  |
//! | split         | `[1, run, split.seed]`                       |
//! | perturbation  | `[2, run]`, shared by every κ of a run       |
//! | model         | `[3, run, κ index, model index]`             |
//!
//! Uninformed models never see the graph, so they are trained once per
//! run (κ index 0) and their results are repeated for every κ.

mod config;
mod stats;
mod svg;

pub use config::{DatasetSource, PerturbationGrid, SweepConfig};
pub use stats::mean_ci95;
pub use svg::render_curves;

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::BkGraph;
use crate::models::{evaluate, make_split, train, Split, SplitPlan};
use crate::perturb::Perturbation;
use crate::seed;
use crate::synth::{generate_dataset, read_bundle, SynthDataset};

pub const RESULTS_HEADER: &str = "model,perturbation,variant,kappa,run,seed,split,status,accuracy";
pub const AGGREGATES_HEADER: &str = "model,perturbation,variant,kappa,n,mean,ci95";

const DATASET_TAG: u64 = 0;
const SPLIT_TAG: u64 = 1;
const PERTURB_TAG: u64 = 2;
const MODEL_TAG: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Test,
}

impl SplitName {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    Failed,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::Failed => "failed",
        }
    }
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub model: String,
    pub perturbation: String,
    pub variant: String,
    pub kappa: f64,
    pub run: usize,
    pub seed: u64,
    pub split: SplitName,
    pub status: CellStatus,
    /// `None` when the cell failed.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellProvenance {
    pub model: String,
    pub kappa: f64,
    pub run: usize,
    pub seed: u64,
    /// Result reused from the κ = 0 cell of an uninformed model.
    pub shared: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunProvenance {
    pub run: usize,
    pub dataset_seed: Option<u64>,
    pub split_seed: u64,
    pub perturbation_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepProvenance {
    pub master_seed: u64,
    pub runs: Vec<RunProvenance>,
    pub perturbation: PerturbationGrid,
    pub cells: Vec<CellProvenance>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
    pub provenance: SweepProvenance,
}

/// Mean test accuracy over successful runs for one (model, κ).
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatePoint {
    pub model: String,
    pub perturbation: String,
    pub variant: String,
    pub kappa: f64,
    /// Successful runs.
    pub n: usize,
    pub mean: Option<f64>,
    pub ci95: f64,
}

struct Job {
    model: usize,
    kappa: usize,
    run: usize,
    seed: u64,
}

type CellOutcome = std::result::Result<(f64, f64), String>;

/// Runs every (model, κ, run) cell of `config` on a pool of `workers`
/// threads. Output is independent of `workers` and scheduling.
pub fn run_sweep(config: &SweepConfig, workers: usize) -> Result<SweepResult> {
    config.validate()?;
    let operator = config.perturbation.operator()?;
    let kappas = &config.perturbation.kappas;
    let master = config.master_seed;

    let mut datasets: Vec<Arc<SynthDataset>> = Vec::with_capacity(config.runs);
    let mut run_info = Vec::with_capacity(config.runs);
    match &config.dataset {
        DatasetSource::Bundle { bundle } => {
            let data = Arc::new(read_bundle(bundle)?);
            datasets.resize(config.runs, data);
        }
        DatasetSource::Synthetic(params) => {
            let mut frozen = None;
            for run in 0..config.runs {
                let data = match &frozen {
                    Some(d) => Arc::clone(d),
                    None => {
                        let mut p = *params;
                        p.seed = seed::derive_seed(master, &[DATASET_TAG, run as u64]);
                        let d = Arc::new(generate_dataset(&p)?);
                        if config.freeze_dataset {
                            frozen = Some(Arc::clone(&d));
                        }
                        d
                    }
                };
                datasets.push(data);
            }
        }
    }

    let mut splits: Vec<Split> = Vec::with_capacity(config.runs);
    let mut graphs: Vec<Vec<BkGraph>> = Vec::with_capacity(config.runs);
    for (run, data) in datasets.iter().enumerate() {
        if data.classes() < 2 {
            return Err(Error::Config("sweeps need at least 2 classes".into()));
        }
        let split_seed = seed::derive_seed(master, &[SPLIT_TAG, run as u64, config.split.seed]);
        let plan = SplitPlan {
            seed: split_seed,
            ..config.split
        };
        splits.push(make_split(&data.labels, data.classes(), &plan)?);
        let perturbation_seed = seed::derive_seed(master, &[PERTURB_TAG, run as u64]);
        let mut per_kappa = Vec::with_capacity(kappas.len());
        for &kappa in kappas {
            let p = Perturbation::new(operator, kappa, perturbation_seed)?;
            per_kappa.push(p.apply(&data.graph, Some(&data.clusters))?.graph);
        }
        graphs.push(per_kappa);
        run_info.push(RunProvenance {
            run,
            dataset_seed: match config.dataset {
                DatasetSource::Synthetic(_) => Some(data.params.seed),
                DatasetSource::Bundle { .. } => None,
            },
            split_seed,
            perturbation_seed,
        });
    }

    let mut jobs = Vec::new();
    for (m, spec) in config.models.iter().enumerate() {
        let kappa_range = if spec.kind.is_informed() { 0..kappas.len() } else { 0..1 };
        for k in kappa_range {
            for run in 0..config.runs {
                jobs.push(Job {
                    model: m,
                    kappa: k,
                    run,
                    seed: seed::derive_seed(master, &[MODEL_TAG, run as u64, k as u64, m as u64]),
                });
            }
        }
    }

    let execute = |job: &Job| -> Result<CellOutcome> {
        let mut spec = config.models[job.model].clone();
        spec.seed = job.seed;
        let data = &datasets[job.run];
        let split = &splits[job.run];
        let graph = spec.kind.is_informed().then(|| &graphs[job.run][job.kappa]);
        match train(&spec, data, split, graph) {
            Ok(trained) => Ok(Ok((
                evaluate(&trained, data, &split.train)?,
                evaluate(&trained, data, &split.test)?,
            ))),
            Err(e @ Error::TrainingDiverged { .. }) => Ok(Err(e.to_string())),
            Err(e) => Err(e),
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let outcomes: Vec<CellOutcome> =
        pool.install(|| jobs.par_iter().map(execute).collect::<Result<Vec<_>>>())?;

    let lookup = |m: usize, k: usize, run: usize| -> (&Job, &CellOutcome) {
        let idx = jobs
            .iter()
            .position(|j| j.model == m && j.kappa == k && j.run == run)
            .expect("job exists for every cell");
        (&jobs[idx], &outcomes[idx])
    };

    let variant = operator.variant().unwrap_or("").to_string();
    let mut records = Vec::with_capacity(config.models.len() * kappas.len() * config.runs * 2);
    let mut cells = Vec::new();
    for (m, spec) in config.models.iter().enumerate() {
        let label = spec.label();
        for (k, &kappa) in kappas.iter().enumerate() {
            let source_k = if spec.kind.is_informed() { k } else { 0 };
            for run in 0..config.runs {
                let (job, outcome) = lookup(m, source_k, run);
                cells.push(CellProvenance {
                    model: label.clone(),
                    kappa,
                    run,
                    seed: job.seed,
                    shared: source_k != k,
                    error: outcome.as_ref().err().cloned(),
                });
                for split in [SplitName::Train, SplitName::Test] {
                    let (status, accuracy) = match outcome {
                        Ok((tr, te)) => (
                            CellStatus::Ok,
                            Some(if split == SplitName::Train { *tr } else { *te }),
                        ),
                        Err(_) => (CellStatus::Failed, None),
                    };
                    records.push(SweepRecord {
                        model: label.clone(),
                        perturbation: operator.name().to_string(),
                        variant: variant.clone(),
                        kappa,
                        run,
                        seed: job.seed,
                        split,
                        status,
                        accuracy,
                    });
                }
            }
        }
    }

    Ok(SweepResult {
        records,
        provenance: SweepProvenance {
            master_seed: master,
            runs: run_info,
            perturbation: config.perturbation.clone(),
            cells,
        },
    })
}

pub fn results_to_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in records {
        let acc = r.accuracy.map(|a| a.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{acc}",
            r.model,
            r.perturbation,
            r.variant,
            r.kappa,
            r.run,
            r.seed,
            r.split.as_str(),
            r.status.as_str()
        );
    }
    out
}

pub fn parse_results_csv(text: &str, source: &str) -> Result<Vec<SweepRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == RESULTS_HEADER => {}
        _ => return Err(Error::parse(source, 1, format!("expected header `{RESULTS_HEADER}`"))),
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::parse(source, idx + 1, msg);
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(err(format!("expected 9 fields, found {}", f.len())));
        }
        let num = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("invalid {what} {s:?}")))
        };
        let split = match f[6] {
            "train" => SplitName::Train,
            "test" => SplitName::Test,
            s => return Err(err(format!("invalid split {s:?}"))),
        };
        let status = match f[7] {
            "ok" => CellStatus::Ok,
            "failed" => CellStatus::Failed,
            s => return Err(err(format!("invalid status {s:?}"))),
        };
        let accuracy = match (status, f[8]) {
            (CellStatus::Failed, "") => None,
            (CellStatus::Ok, s) => Some(num(s, "accuracy")?),
            (CellStatus::Failed, s) => return Err(err(format!("failed cell has accuracy {s:?}"))),
        };
        records.push(SweepRecord {
            model: f[0].to_string(),
            perturbation: f[1].to_string(),
            variant: f[2].to_string(),
            kappa: num(f[3], "kappa")?,
            run: f[4].parse().map_err(|_| err(format!("invalid run {:?}", f[4])))?,
            seed: f[5].parse().map_err(|_| err(format!("invalid seed {:?}", f[5])))?,
            split,
            status,
            accuracy,
        });
    }
    Ok(records)
}

/// Test-split mean and CI per (model, perturbation, variant, κ), in order
/// of first appearance. Failed cells count towards nothing but remain
/// visible through a smaller `n`.
pub fn aggregate(records: &[SweepRecord]) -> Vec<AggregatePoint> {
    let mut keys: Vec<(&str, &str, &str, f64)> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for r in records.iter().filter(|r| r.split == SplitName::Test) {
        let key = (r.model.as_str(), r.perturbation.as_str(), r.variant.as_str(), r.kappa);
        let idx = match keys.iter().position(|k| *k == key) {
            Some(i) => i,
            None => {
                keys.push(key);
                values.push(Vec::new());
                keys.len() - 1
            }
        };
        if let (CellStatus::Ok, Some(a)) = (r.status, r.accuracy) {
            values[idx].push(a);
        }
    }
    keys.into_iter()
        .zip(values)
        .map(|((model, perturbation, variant, kappa), v)| {
            let stats = mean_ci95(&v);
            AggregatePoint {
                model: model.into(),
                perturbation: perturbation.into(),
                variant: variant.into(),
                kappa,
                n: v.len(),
                mean: stats.map(|s| s.0),
                ci95: stats.map_or(0.0, |s| s.1),
            }
        })
        .collect()
}

pub fn aggregates_to_csv(points: &[AggregatePoint]) -> String {
    let mut out = String::from(AGGREGATES_HEADER);
    out.push('\n');
    for p in points {
        let mean = p.mean.map(|m| m.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{mean},{}",
            p.model, p.perturbation, p.variant, p.kappa, p.n, p.ci95
        );
    }
    out
}

/// X-axis label for the curves of `points`.
pub fn kappa_label(points: &[AggregatePoint]) -> String {
    match points.first() {
        Some(p) if p.variant.is_empty() => format!("κ ({})", p.perturbation),
        Some(p) => format!("κ ({}, {})", p.perturbation, p.variant),
        None => "κ".into(),
    }
}

/// Writes the SVG chart of `points` to `path`.
pub fn emit_curves(points: &[AggregatePoint], path: impl AsRef<Path>) -> Result<()> {
    if points.is_empty() {
        return Err(Error::EmptyInput("aggregates"));
    }
    let path = path.as_ref();
    std::fs::write(path, render_curves(points, &kappa_label(points))).map_err(|e| Error::io(path, e))
}

impl SweepResult {
    pub fn results_csv(&self) -> String {
        results_to_csv(&self.records)
    }

    pub fn aggregate(&self) -> Vec<AggregatePoint> {
        aggregate(&self.records)
    }

    pub fn provenance_json(&self) -> String {
        serde_json::to_string_pretty(&self.provenance).expect("provenance serializes") + "\n"
    }

    /// Writes `results.csv`, `aggregates.csv`, `curve.svg` and
    /// `provenance.json` into `dir`.
    pub fn write_outputs(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let points = self.aggregate();
        let files = [
            ("results.csv", self.results_csv()),
            ("aggregates.csv", aggregates_to_csv(&points)),
            ("curve.svg", render_curves(&points, &kappa_label(&points))),
            ("provenance.json", self.provenance_json()),
        ];
        for (name, text) in files {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ModelKind, ModelSpec};
    use crate::synth::SynthParams;

    fn small_config(kappas: Vec<f64>, runs: usize) -> SweepConfig {
        let mut gcn = ModelSpec::new(ModelKind::Gcn);
        gcn.epochs = 3;
        gcn.hidden_dim = 4;
        let mut mlp = ModelSpec::new(ModelKind::Mlp);
        mlp.epochs = 3;
        mlp.mlp_hidden_dim = 8;
        let mut lr = ModelSpec::new(ModelKind::LogregL1);
        lr.epochs = 20;
        SweepConfig {
            runs,
            master_seed: 9,
            freeze_dataset: false,
            dataset: DatasetSource::Synthetic(SynthParams {
                nodes_per_cluster: 4,
                samples_per_class: 20,
                ..SynthParams::default()
            }),
            split: SplitPlan::default(),
            perturbation: PerturbationGrid {
                kind: "remove".into(),
                variant: None,
                kappas,
            },
            models: vec![gcn, mlp, lr],
        }
    }

    #[test]
    fn record_counts() {
        let mut c = small_config(vec![0.0], 1);
        c.models.truncate(1);
        assert_eq!(run_sweep(&c, 1).unwrap().records.len(), 2);
        let r = run_sweep(&small_config(vec![0.0, 0.5, 1.0], 2), 1).unwrap();
        assert_eq!(r.records.len(), 2 * 3 * 3 * 2);
        let csv = r.results_csv();
        assert!(csv.starts_with(&format!("{RESULTS_HEADER}\n")));
        assert_eq!(parse_results_csv(&csv, "r.csv").unwrap(), r.records);
    }

    #[test]
    fn uninformed_rows_shared_across_kappa() {
        let r = run_sweep(&small_config(vec![0.0, 0.5, 1.0], 2), 1).unwrap();
        for model in ["mlp", "logreg-l1"] {
            for run in 0..2 {
                let accs: Vec<_> = r
                    .records
                    .iter()
                    .filter(|x| x.model == model && x.run == run)
                    .map(|x| (x.split, x.accuracy, x.seed))
                    .collect();
                assert_eq!(accs.len(), 6);
                assert_eq!(accs[0], accs[2]);
                assert_eq!(accs[0], accs[4]);
            }
        }
        let shared = r.provenance.cells.iter().filter(|c| c.shared).count();
        assert_eq!(shared, 2 * 2 * 2);
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let c = small_config(vec![0.0, 0.5], 2);
        let a = run_sweep(&c, 1).unwrap().results_csv();
        let b = run_sweep(&c, 3).unwrap().results_csv();
        assert_eq!(a, b);
    }

    #[test]
    fn aggregation_skips_failed_cells() {
        let rec = |run, acc: Option<f64>| SweepRecord {
            model: "m".into(),
            perturbation: "add".into(),
            variant: String::new(),
            kappa: 0.5,
            run,
            seed: 0,
            split: SplitName::Test,
            status: if acc.is_some() { CellStatus::Ok } else { CellStatus::Failed },
            accuracy: acc,
        };
        let pts = aggregate(&[rec(0, Some(0.8)), rec(1, None), rec(2, Some(0.9))]);
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].n, 2);
        assert!((pts[0].mean.unwrap() - 0.85).abs() < 1e-12);
        let csv = aggregates_to_csv(&pts);
        assert!(csv.starts_with(&format!("{AGGREGATES_HEADER}\nm,add,,0.5,2,")));
        let none = aggregate(&[rec(0, None)]);
        assert_eq!((none[0].n, none[0].mean), (0, None));
    }

    #[test]
    fn malformed_results_rejected() {
        let bad = format!("{RESULTS_HEADER}\nm,remove,,0,0,1,test,ok\n");
        assert!(matches!(
            parse_results_csv(&bad, "r.csv"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(parse_results_csv("nope\n", "r.csv").is_err());
    }
}
