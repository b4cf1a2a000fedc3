//! Structural diagnostics: cluster ASPL, k-hop receptive fields and
//! connected components.

use std::collections::VecDeque;

use super::{BkGraph, NodeSet};
use crate::error::{Error, Result};

/// Average shortest path length within the subgraph induced on `cluster`.
///
/// Only pairs that are connected inside the induced subgraph enter the
/// mean. A cluster without any connected pair (a singleton, or one with
/// no internal edges) yields 0.
pub fn cluster_aspl(g: &BkGraph, cluster: &NodeSet) -> Result<f64> {
    if cluster.is_empty() {
        return Err(Error::EmptyInput("cluster"));
    }
    cluster.validate(g.node_count())?;

    let mut member = vec![false; g.node_count()];
    for &v in cluster.ids() {
        member[v] = true;
    }

    let mut dist = vec![usize::MAX; g.node_count()];
    let mut queue = VecDeque::new();
    let mut total: u64 = 0;
    let mut pairs: u64 = 0;
    for &source in cluster.ids() {
        for &v in cluster.ids() {
            dist[v] = usize::MAX;
        }
        dist[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for w in g.neighbor_ids(u) {
                if member[w] && dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        // Each unordered pair is counted from its smaller endpoint.
        for &v in cluster.ids() {
            if v > source && dist[v] != usize::MAX {
                total += dist[v] as u64;
                pairs += 1;
            }
        }
    }
    if pairs == 0 {
        return Ok(0.0);
    }
    Ok(total as f64 / pairs as f64)
}

/// Number of distinct nodes within `k` hops of `v`.
pub fn k_hop_receptive_field(g: &BkGraph, v: usize, k: usize, include_self: bool) -> Result<usize> {
    if v >= g.node_count() {
        return Err(Error::InvalidNode {
            node: v,
            node_count: g.node_count(),
        });
    }
    if k == 0 {
        return Err(Error::InvalidParam("receptive field depth k must be >= 1".into()));
    }
    let mut seen = vec![false; g.node_count()];
    seen[v] = true;
    let mut frontier = vec![v];
    let mut reached = 1;
    for _ in 0..k {
        let mut next = Vec::new();
        for &u in &frontier {
            for w in g.neighbor_ids(u) {
                if !seen[w] {
                    seen[w] = true;
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        reached += next.len();
        frontier = next;
    }
    Ok(if include_self { reached } else { reached - 1 })
}

/// Mean `k`-hop receptive field (self included) over the members of `cluster`.
pub fn mean_receptive_field(g: &BkGraph, cluster: &NodeSet, k: usize) -> Result<f64> {
    if cluster.is_empty() {
        return Err(Error::EmptyInput("cluster"));
    }
    let mut sum = 0usize;
    for &v in cluster.ids() {
        sum += k_hop_receptive_field(g, v, k, true)?;
    }
    Ok(sum as f64 / cluster.len() as f64)
}

/// Connected components, each sorted ascending, ordered by smallest member.
pub fn connected_components(g: &BkGraph) -> Vec<NodeSet> {
    let n = g.node_count();
    let mut seen = vec![false; n];
    let mut components = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut members = vec![start];
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for w in g.neighbor_ids(u) {
                if !seen[w] {
                    seen[w] = true;
                    members.push(w);
                    stack.push(w);
                }
            }
        }
        members.sort_unstable();
        components.push(NodeSet(members));
    }
    components
}
