//! Text formats for graphs and cluster assignments.
//!
//! Edge lists are one edge per line, `u<TAB>v<TAB>weight`, with the weight
//! column optional (default 1). Lines starting with `#` are comments, except
//! that the writer emits a `# nodes: N` header which the reader honours so
//! trailing isolated nodes survive a round trip. Without the header the node
//! count is one more than the largest id seen.
//!
//! Cluster files list `node<TAB>cluster` per node with a `# clusters: C`
//! header; clusters may be empty.

use std::fmt::Write as _;
use std::path::Path;

use super::{BkGraph, NodeSet};
use crate::error::{Error, Result};

const NODES_HEADER: &str = "# nodes:";
const CLUSTERS_HEADER: &str = "# clusters:";

/// Serializes a graph: header, then edges with `u < v` in ascending order.
pub fn write_edge_list(g: &BkGraph) -> String {
    let mut out = String::with_capacity(16 * g.edge_count() + 16);
    let _ = writeln!(out, "{NODES_HEADER} {}", g.node_count());
    for (u, v, w) in g.edges() {
        let _ = writeln!(out, "{u}\t{v}\t{w}");
    }
    out
}

pub fn parse_edge_list(text: &str, source: &str) -> Result<BkGraph> {
    let mut declared: Option<usize> = None;
    let mut edges = Vec::new();
    let mut max_id: Option<usize> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix(NODES_HEADER) {
            let n = rest
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::parse(source, line_no, "malformed node count header"))?;
            declared = Some(n);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(Error::parse(
                source,
                line_no,
                format!("expected 2 or 3 columns, found {}", fields.len()),
            ));
        }
        let node = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(source, line_no, format!("invalid node id {s:?}")))
        };
        let u = node(fields[0])?;
        let v = node(fields[1])?;
        let w = match fields.get(2) {
            Some(s) => s
                .parse::<i64>()
                .map_err(|_| Error::parse(source, line_no, format!("invalid weight {s:?}")))?,
            None => 1,
        };
        if u == v {
            return Err(Error::parse(source, line_no, format!("self-loop on node {u}")));
        }
        if w < 1 {
            return Err(Error::parse(source, line_no, format!("weight {w} < 1")));
        }
        if let Some(n) = declared {
            if u.max(v) >= n {
                return Err(Error::parse(
                    source,
                    line_no,
                    format!("node {} out of range for {n} nodes", u.max(v)),
                ));
            }
        }
        max_id = Some(max_id.map_or(u.max(v), |m: usize| m.max(u).max(v)));
        edges.push((u, v, w));
    }

    let node_count = match (declared, max_id) {
        (Some(n), _) => n,
        (None, Some(m)) => m + 1,
        (None, None) => 0,
    };
    BkGraph::from_edges(node_count, edges)
}

pub fn read_edge_list(path: impl AsRef<Path>) -> Result<BkGraph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, &path.display().to_string())
}

pub fn clusters_to_string(clusters: &[NodeSet]) -> String {
    let mut assignment: Vec<(usize, usize)> = clusters
        .iter()
        .enumerate()
        .flat_map(|(c, set)| set.ids().iter().map(move |&v| (v, c)))
        .collect();
    assignment.sort_unstable();
    let mut out = String::new();
    let _ = writeln!(out, "{CLUSTERS_HEADER} {}", clusters.len());
    for (v, c) in assignment {
        let _ = writeln!(out, "{v}\t{c}");
    }
    out
}

/// Parses a cluster file; members of each cluster come out ascending.
pub fn parse_clusters(text: &str, source: &str) -> Result<Vec<NodeSet>> {
    let mut declared = 0usize;
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix(CLUSTERS_HEADER) {
            declared = rest
                .trim()
                .parse()
                .map_err(|_| Error::parse(source, line_no, "malformed cluster count header"))?;
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::parse(source, line_no, "expected `node<TAB>cluster`"));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(source, line_no, format!("invalid id {s:?}")))
        };
        pairs.push((parse(fields[0])?, parse(fields[1])?, line_no));
    }
    let count = pairs.iter().map(|&(_, c, _)| c + 1).max().unwrap_or(0).max(declared);
    let mut members = vec![Vec::new(); count];
    for &(v, c, _) in &pairs {
        members[c].push(v);
    }
    let mut clusters = Vec::with_capacity(count);
    for mut ids in members {
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            let line = pairs.iter().rev().find(|p| p.0 == w[0]).map_or(0, |p| p.2);
            return Err(Error::parse(source, line, format!("node {} listed twice", w[0])));
        }
        clusters.push(NodeSet(ids));
    }
    Ok(clusters)
}

pub fn read_clusters(path: impl AsRef<Path>) -> Result<Vec<NodeSet>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_clusters(&text, &path.display().to_string())
}

pub fn write_clusters(path: impl AsRef<Path>, clusters: &[NodeSet]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, clusters_to_string(clusters)).map_err(|e| Error::io(path, e))
}
