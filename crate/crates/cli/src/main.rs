//! `bkbench` command-line front end.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 I/O error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bkbench::experiment::{self, SweepConfig};
use bkbench::graph::{
    cluster_aspl, mean_receptive_field, read_clusters, read_edge_list, write_clusters,
    write_edge_list, BkGraph, NodeSet,
};
use bkbench::models::{evaluate, make_split, train, TrainConfig};
use bkbench::nn::write_checkpoint;
use bkbench::perturb::Perturbation;
use bkbench::synth::{generate_dataset, read_bundle, write_bundle, SynthParams};
use bkbench::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bkbench", version, about = "Robustness benchmarks for graph-informed classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic clustered dataset bundle.
    Generate(GenerateArgs),
    /// Apply a perturbation to a graph file.
    Perturb(PerturbArgs),
    /// Train one model on a dataset bundle.
    Train(TrainArgs),
    /// Run a κ-sweep described by a config file.
    Sweep(SweepArgs),
    /// Print per-cluster ASPL and mean k-hop receptive field.
    Metrics(MetricsArgs),
    /// Re-aggregate a results CSV and draw its curves.
    Plot(PlotArgs),
}

#[derive(clap::Args)]
#[command(allow_negative_numbers = true)]
struct GenerateArgs {
    /// Number of clusters and classes (C).
    #[arg(short = 'C', long, default_value_t = 2)]
    classes: usize,
    /// Nodes per cluster (M).
    #[arg(short = 'M', long, default_value_t = 16)]
    nodes_per_cluster: usize,
    /// Samples per class (N).
    #[arg(short = 'N', long, default_value_t = 600)]
    samples_per_class: usize,
    /// Gap between active and inactive locations (Δξ).
    #[arg(long, default_value_t = -0.57)]
    delta_xi: f64,
    /// Scale of both feature distributions (ω).
    #[arg(long, default_value_t = 0.5)]
    omega: f64,
    /// Shape of the active distribution (α); the inactive one uses −α.
    #[arg(long, default_value_t = 1.8)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Bundle directory to create or overwrite.
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct PerturbArgs {
    /// Input edge-list TSV.
    #[arg(long)]
    graph: PathBuf,
    /// `kind:kappa[:variant][:seed]`, e.g. `remove:0.3:42` or `rewire:0.25:exchange:1`.
    #[arg(long)]
    descriptor: String,
    /// Cluster file; required by per-cluster isolation and rewiring.
    #[arg(long)]
    clusters: Option<PathBuf>,
    /// Overrides the seed in the descriptor.
    #[arg(long)]
    seed: Option<u64>,
    /// Output edge-list TSV. Provenance goes to `<out>.provenance.json` and,
    /// when clusters were given, the updated assignment to `<out>.clusters.tsv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct TrainArgs {
    /// TOML file with a `[model]` table and optional `[split]` table.
    #[arg(long)]
    config: PathBuf,
    /// Dataset bundle directory.
    #[arg(long)]
    data: PathBuf,
    /// Graph for informed models instead of the bundle's own graph.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Overrides the model seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the split seed.
    #[arg(long)]
    split_seed: Option<u64>,
    /// Output directory for `model.ckpt`, `history.csv` and `summary.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct SweepArgs {
    /// Sweep config TOML (see docs/config.md).
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Overrides `master_seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct MetricsArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    clusters: PathBuf,
    /// Hop count of the receptive field.
    #[arg(short, long, default_value_t = 1)]
    k: usize,
}

#[derive(clap::Args)]
struct PlotArgs {
    /// `results.csv` written by `sweep`.
    #[arg(long)]
    results: PathBuf,
    /// SVG output path.
    #[arg(long)]
    out: PathBuf,
    /// Also write the aggregates CSV here.
    #[arg(long)]
    aggregates: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Perturb(a) => perturb(a),
        Command::Train(a) => train_cmd(a),
        Command::Sweep(a) => sweep(a),
        Command::Metrics(a) => metrics(a),
        Command::Plot(a) => plot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 3 } else { 2 })
        }
    }
}

type CmdResult = Result<(), Error>;

fn write_file(path: &Path, text: &str) -> CmdResult {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

fn generate(a: GenerateArgs) -> CmdResult {
    let params = SynthParams {
        classes: a.classes,
        nodes_per_cluster: a.nodes_per_cluster,
        samples_per_class: a.samples_per_class,
        delta_xi: a.delta_xi,
        omega: a.omega,
        alpha: a.alpha,
        seed: a.seed,
    };
    let data = generate_dataset(&params)?;
    let overlap = params.overlap()?;
    write_bundle(&a.out, &data)?;
    println!("Omega ≈ {overlap:.3}");
    Ok(())
}

fn perturb(a: PerturbArgs) -> CmdResult {
    let mut p: Perturbation = a.descriptor.parse()?;
    if let Some(seed) = a.seed {
        p.seed = seed;
    }
    let graph = read_edge_list(&a.graph)?;
    let clusters = a.clusters.as_ref().map(read_clusters).transpose()?;
    let out = p.apply(&graph, clusters.as_deref())?;
    write_file(&a.out, &write_edge_list(&out.graph))?;
    write_file(&sidecar(&a.out, ".provenance.json"), &out.provenance.to_json())?;
    if let (Some(_), Some(updated)) = (&a.clusters, &out.clusters) {
        write_clusters(sidecar(&a.out, ".clusters.tsv"), updated)?;
    }
    eprintln!(
        "{}: {} -> {} edges",
        out.provenance.descriptor,
        graph.edge_count(),
        out.graph.edge_count()
    );
    Ok(())
}

fn train_cmd(a: TrainArgs) -> CmdResult {
    let mut config = TrainConfig::load(&a.config)?;
    if let Some(seed) = a.seed {
        config.model.seed = seed;
    }
    if let Some(seed) = a.split_seed {
        config.split.seed = seed;
    }
    let data = read_bundle(&a.data)?;
    let graph: Option<BkGraph> = a.graph.as_ref().map(read_edge_list).transpose()?;
    let split = make_split(&data.labels, data.classes(), &config.split)?;
    let trained = train(
        &config.model,
        &data,
        &split,
        Some(graph.as_ref().unwrap_or(&data.graph)),
    )?;
    let train_acc = evaluate(&trained, &data, &split.train)?;
    let test_acc = evaluate(&trained, &data, &split.test)?;
    let summary = serde_json::json!({
        "model": config.model,
        "split": config.split,
        "train_accuracy": train_acc,
        "test_accuracy": test_acc,
        "train_indices": trained.train_indices,
        "test_indices": trained.test_indices,
    });
    std::fs::create_dir_all(&a.out).map_err(|e| io_error(&a.out, e))?;
    write_checkpoint(a.out.join("model.ckpt"), &trained.model.named_tensors())?;
    write_file(&a.out.join("history.csv"), &trained.history_csv())?;
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    write_file(&a.out.join("summary.json"), &json)?;
    println!("train_accuracy={train_acc} test_accuracy={test_acc}");
    Ok(())
}

fn sweep(a: SweepArgs) -> CmdResult {
    let mut config = SweepConfig::load(&a.config)?;
    if let Some(seed) = a.seed {
        config.master_seed = seed;
    }
    if a.workers == 0 {
        return Err(Error::InvalidParam("--workers must be >= 1".into()));
    }
    let result = experiment::run_sweep(&config, a.workers)?;
    result.write_outputs(&a.out)?;
    let failed = result.provenance.cells.iter().filter(|c| c.error.is_some()).count();
    eprintln!(
        "{} records written to {}; {failed} failed cells",
        result.records.len(),
        a.out.display()
    );
    Ok(())
}

fn metrics(a: MetricsArgs) -> CmdResult {
    if a.k == 0 {
        return Err(Error::InvalidParam("--k must be >= 1".into()));
    }
    let graph = read_edge_list(&a.graph)?;
    let clusters = read_clusters(&a.clusters)?;
    print!("{}", metrics_table(&graph, &clusters, a.k)?);
    Ok(())
}

fn metrics_table(graph: &BkGraph, clusters: &[NodeSet], k: usize) -> Result<String, Error> {
    let mut out = format!("cluster,aspl,mean_rf_{k}\n");
    for (c, cluster) in clusters.iter().enumerate() {
        let aspl = cluster_aspl(graph, cluster)?;
        let rf = mean_receptive_field(graph, cluster, k)?;
        let _ = writeln!(out, "{c},{aspl},{rf}");
    }
    Ok(out)
}

fn plot(a: PlotArgs) -> CmdResult {
    let text = std::fs::read_to_string(&a.results).map_err(|e| io_error(&a.results, e))?;
    let records = experiment::parse_results_csv(&text, &a.results.display().to_string())?;
    let points = experiment::aggregate(&records);
    if points.is_empty() {
        return Err(Error::EmptyInput("results"));
    }
    if let Some(path) = &a.aggregates {
        write_file(path, &experiment::aggregates_to_csv(&points))?;
    }
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
    }
    experiment::emit_curves(&points, &a.out)?;
    Ok(())
}
