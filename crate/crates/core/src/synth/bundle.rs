//! On-disk dataset bundle.
//!
//! ```text
//! <dir>/graph.tsv      edge list (see `graph::write_edge_list`)
//! <dir>/features.csv   header = node ids, one row per sample
//! <dir>/labels.csv     header `label`, one row per sample
//! <dir>/meta.json      generation parameters
//! <dir>/clusters.tsv   cluster assignment (see `graph::clusters_to_string`)
//! ```
//!
//! Floats are written in shortest round-trip form, so write → read → write
//! reproduces every file byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{build_cluster_graph, SynthDataset, SynthParams};
use crate::error::{Error, Result};
use crate::graph::{clusters_to_string, parse_clusters, parse_edge_list, write_edge_list};
use crate::nn::DenseMatrix;

#[derive(Debug, Clone)]
pub struct BundleFiles {
    pub graph: PathBuf,
    pub features: PathBuf,
    pub labels: PathBuf,
    pub meta: PathBuf,
    pub clusters: PathBuf,
}

impl BundleFiles {
    pub fn in_dir(dir: &Path) -> Self {
        BundleFiles {
            graph: dir.join("graph.tsv"),
            features: dir.join("features.csv"),
            labels: dir.join("labels.csv"),
            meta: dir.join("meta.json"),
            clusters: dir.join("clusters.tsv"),
        }
    }
}

pub fn write_bundle(dir: impl AsRef<Path>, dataset: &SynthDataset) -> Result<BundleFiles> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = BundleFiles::in_dir(dir);

    let meta = serde_json::to_string_pretty(&dataset.params)
        .map_err(|e| Error::Config(e.to_string()))?
        + "\n";
    let outputs = [
        (&files.graph, write_edge_list(&dataset.graph)),
        (&files.features, features_to_csv(&dataset.features)),
        (&files.labels, labels_to_csv(&dataset.labels)),
        (&files.meta, meta),
        (&files.clusters, clusters_to_string(&dataset.clusters)),
    ];
    for (path, text) in outputs {
        std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    }
    Ok(files)
}

pub fn read_bundle(dir: impl AsRef<Path>) -> Result<SynthDataset> {
    let files = BundleFiles::in_dir(dir.as_ref());
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::io(p, e));

    let params: SynthParams = serde_json::from_str(&read(&files.meta)?)
        .map_err(|e| Error::parse(files.meta.display(), e.line(), e.to_string()))?;
    params.validate()?;
    let graph = parse_edge_list(&read(&files.graph)?, &files.graph.display().to_string())?;
    let features = parse_features(&read(&files.features)?, &files.features)?;
    let labels = parse_labels(&read(&files.labels)?, &files.labels)?;
    let clusters = if files.clusters.exists() {
        parse_clusters(&read(&files.clusters)?, &files.clusters.display().to_string())?
    } else {
        build_cluster_graph(params.classes, params.nodes_per_cluster).1
    };

    if features.rows() != labels.len() {
        return Err(Error::InvalidParam(format!(
            "{} feature rows but {} labels",
            features.rows(),
            labels.len()
        )));
    }
    if features.cols() != graph.node_count() {
        return Err(Error::InvalidParam(format!(
            "{} feature columns but {} graph nodes",
            features.cols(),
            graph.node_count()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= params.classes) {
        return Err(Error::InvalidLabel {
            label: bad,
            classes: params.classes,
        });
    }
    Ok(SynthDataset {
        graph,
        features,
        labels,
        clusters,
        params,
    })
}

fn features_to_csv(features: &DenseMatrix) -> String {
    let mut out = String::with_capacity(features.len() * 20);
    let header: Vec<String> = (0..features.cols()).map(|j| j.to_string()).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..features.rows() {
        for (j, v) in features.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

fn labels_to_csv(labels: &[usize]) -> String {
    let mut out = String::from("label\n");
    for l in labels {
        let _ = writeln!(out, "{l}");
    }
    out
}

fn parse_features(text: &str, path: &Path) -> Result<DenseMatrix> {
    let src = path.display();
    let mut lines = text.lines().enumerate();
    let cols = match lines.next() {
        Some((_, header)) => {
            for (j, field) in header.split(',').enumerate() {
                if field.trim().parse::<usize>() != Ok(j) {
                    return Err(Error::parse(&src, 1, format!("header column {j} is {field:?}")));
                }
            }
            header.split(',').count()
        }
        None => return Err(Error::parse(&src, 1, "missing header")),
    };
    let mut data = Vec::new();
    let mut rows = 0;
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let before = data.len();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::parse(&src, idx + 1, format!("invalid number {field:?}")))?;
            if !v.is_finite() {
                return Err(Error::parse(&src, idx + 1, "non-finite feature"));
            }
            data.push(v);
        }
        if data.len() - before != cols {
            return Err(Error::parse(&src, idx + 1, format!("expected {cols} columns")));
        }
        rows += 1;
    }
    DenseMatrix::from_vec(rows, cols, data)
}

fn parse_labels(text: &str, path: &Path) -> Result<Vec<usize>> {
    let src = path.display();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "label" => {}
        _ => return Err(Error::parse(&src, 1, "expected header `label`")),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(idx, l)| {
            l.trim()
                .parse()
                .map_err(|_| Error::parse(&src, idx + 1, format!("invalid label {l:?}")))
        })
        .collect()
}
