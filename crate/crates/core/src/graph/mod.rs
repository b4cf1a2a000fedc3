//! Background-knowledge graphs: an undirected simple graph over feature
//! nodes with positive integer evidence weights.
//!
//! Adjacency is kept as one neighbor list per node, sorted by neighbor id,
//! so every traversal (and therefore every seeded sampling step built on
//! top of it) visits nodes in the same order.

mod io;
mod metrics;

pub use io::{
    clusters_to_string, parse_clusters, parse_edge_list, read_clusters, read_edge_list,
    write_clusters, write_edge_list,
};
pub use metrics::{
    cluster_aspl, connected_components, k_hop_receptive_field, mean_receptive_field,
};

use crate::error::{Error, Result};

/// Evidence weight of an edge (number of supporting observations).
pub type Weight = u64;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BkGraph {
    adjacency: Vec<Vec<(usize, Weight)>>,
    edge_count: usize,
}

impl BkGraph {
    /// A graph with `node_count` nodes and no edges.
    pub fn empty(node_count: usize) -> Self {
        BkGraph {
            adjacency: vec![Vec::new(); node_count],
            edge_count: 0,
        }
    }

    /// Builds a simple graph from a weighted edge list.
    ///
    /// Duplicate pairs (in either orientation) are merged and the last
    /// weight seen wins.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, i64)>,
    {
        let mut graph = BkGraph::empty(node_count);
        for (u, v, weight) in edges {
            graph.check_pair(u, v)?;
            if weight < 1 {
                return Err(Error::InvalidWeight { u, v, weight });
            }
            graph.insert_edge(u, v, weight as Weight)?;
        }
        Ok(graph)
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Number of unordered node pairs that are not connected.
    pub fn non_edge_count(&self) -> usize {
        let n = self.node_count();
        n * n.saturating_sub(1) / 2 - self.edge_count
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// Neighbors of `v` with their weights, ascending by neighbor id.
    pub fn neighbors(&self, v: usize) -> &[(usize, Weight)] {
        &self.adjacency[v]
    }

    pub fn neighbor_ids(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[v].iter().map(|&(u, _)| u)
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<Weight> {
        let list = self.adjacency.get(u)?;
        list.binary_search_by_key(&v, |&(n, _)| n)
            .ok()
            .map(|i| list[i].1)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.weight(u, v).is_some()
    }

    /// All edges as `(u, v, weight)` with `u < v`, ascending by `(u, v)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, Weight)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, list)| {
            list.iter()
                .filter(move |&&(v, _)| v > u)
                .map(move |&(v, w)| (u, v, w))
        })
    }

    /// Edge weights in canonical edge order.
    pub fn weights(&self) -> Vec<Weight> {
        self.edges().map(|(_, _, w)| w).collect()
    }

    /// Inserts an edge or overwrites its weight. Returns `true` when the
    /// edge did not exist before.
    pub fn insert_edge(&mut self, u: usize, v: usize, weight: Weight) -> Result<bool> {
        self.check_pair(u, v)?;
        if weight < 1 {
            return Err(Error::InvalidWeight { u, v, weight: 0 });
        }
        let added = upsert(&mut self.adjacency[u], v, weight);
        upsert(&mut self.adjacency[v], u, weight);
        if added {
            self.edge_count += 1;
        }
        Ok(added)
    }

    /// Removes an edge, returning its weight if it existed.
    pub fn remove_edge(&mut self, u: usize, v: usize) -> Option<Weight> {
        if u >= self.node_count() || v >= self.node_count() {
            return None;
        }
        let w = remove(&mut self.adjacency[u], v)?;
        remove(&mut self.adjacency[v], u);
        self.edge_count -= 1;
        Some(w)
    }

    /// Removes every edge incident to `v` and returns them as canonical
    /// `(min, max, weight)` triples.
    pub fn isolate(&mut self, v: usize) -> Vec<(usize, usize, Weight)> {
        let incident = std::mem::take(&mut self.adjacency[v]);
        for &(u, _) in &incident {
            remove(&mut self.adjacency[u], v);
        }
        self.edge_count -= incident.len();
        incident
            .into_iter()
            .map(|(u, w)| (u.min(v), u.max(v), w))
            .collect()
    }

    fn check_pair(&self, u: usize, v: usize) -> Result<()> {
        let node_count = self.node_count();
        for node in [u, v] {
            if node >= node_count {
                return Err(Error::InvalidNode { node, node_count });
            }
        }
        if u == v {
            return Err(Error::SelfLoopRejected(u));
        }
        Ok(())
    }
}

fn upsert(list: &mut Vec<(usize, Weight)>, v: usize, weight: Weight) -> bool {
    match list.binary_search_by_key(&v, |&(n, _)| n) {
        Ok(i) => {
            list[i].1 = weight;
            false
        }
        Err(i) => {
            list.insert(i, (v, weight));
            true
        }
    }
}

fn remove(list: &mut Vec<(usize, Weight)>, v: usize) -> Option<Weight> {
    let i = list.binary_search_by_key(&v, |&(n, _)| n).ok()?;
    Some(list.remove(i).1)
}

/// Ordered collection of distinct node ids, e.g. the members of a cluster.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NodeSet(Vec<usize>);

impl NodeSet {
    pub fn new(ids: Vec<usize>) -> Result<Self> {
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidClusters(format!("node {} listed twice", w[0])));
        }
        Ok(NodeSet(ids))
    }

    /// Consecutive ids `start..start + len`.
    pub fn range(start: usize, len: usize) -> Self {
        NodeSet((start..start + len).collect())
    }

    pub fn ids(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.contains(&v)
    }

    pub fn push(&mut self, v: usize) {
        debug_assert!(!self.contains(v));
        self.0.push(v);
    }

    pub fn remove(&mut self, v: usize) -> bool {
        match self.0.iter().position(|&x| x == v) {
            Some(i) => {
                self.0.remove(i);
                true
            }
            None => false,
        }
    }

    /// Checks that every id refers to a node of a graph with `node_count` nodes.
    pub fn validate(&self, node_count: usize) -> Result<()> {
        match self.0.iter().find(|&&v| v >= node_count) {
            Some(&node) => Err(Error::InvalidNode { node, node_count }),
            None => Ok(()),
        }
    }
}

impl From<NodeSet> for Vec<usize> {
    fn from(set: NodeSet) -> Self {
        set.0
    }
}

/// Checks that `clusters` partition `0..node_count`.
pub fn check_partition(clusters: &[NodeSet], node_count: usize) -> Result<()> {
    let mut seen = vec![false; node_count];
    for cluster in clusters {
        for &v in cluster.ids() {
            if v >= node_count {
                return Err(Error::InvalidClusters(format!(
                    "node {v} out of range for {node_count} nodes"
                )));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidClusters(format!("node {v} in two clusters")));
            }
        }
    }
    match seen.iter().position(|s| !s) {
        Some(v) => Err(Error::InvalidClusters(format!("node {v} not assigned"))),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_graph() {
        let g = BkGraph::from_edges(2, [(0, 1, 1)]).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.weight(0, 1), Some(1));
        assert_eq!(g.weight(1, 0), Some(1));
    }

    #[test]
    fn duplicate_keeps_last_weight() {
        let g = BkGraph::from_edges(3, [(0, 1, 1), (1, 0, 5)]).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1, 5)]);
    }

    #[test]
    fn two_cliques_of_sixteen() {
        let mut edges = Vec::new();
        for c in 0..2 {
            for u in c * 16..c * 16 + 16 {
                for v in u + 1..c * 16 + 16 {
                    edges.push((u, v, 1));
                }
            }
        }
        let g = BkGraph::from_edges(32, edges).unwrap();
        assert_eq!(g.edge_count(), 240);
        assert_eq!(g.non_edge_count(), 256);
    }

    #[test]
    fn build_errors() {
        assert!(matches!(
            BkGraph::from_edges(2, [(0, 2, 1)]),
            Err(Error::InvalidNode { node: 2, .. })
        ));
        assert!(matches!(
            BkGraph::from_edges(2, [(1, 1, 1)]),
            Err(Error::SelfLoopRejected(1))
        ));
        assert!(matches!(
            BkGraph::from_edges(2, [(0, 1, 0)]),
            Err(Error::InvalidWeight { weight: 0, .. })
        ));
    }

    #[test]
    fn mutation_keeps_counts() {
        let mut g = BkGraph::from_edges(4, [(0, 1, 1), (1, 2, 2), (1, 3, 3)]).unwrap();
        assert_eq!(g.remove_edge(2, 1), Some(2));
        assert_eq!(g.remove_edge(2, 1), None);
        assert_eq!(g.edge_count(), 2);
        let removed = g.isolate(1);
        assert_eq!(removed, vec![(0, 1, 1), (1, 3, 3)]);
        assert_eq!(g.edge_count(), 0);
        assert!(g.insert_edge(3, 0, 4).unwrap());
        assert!(!g.insert_edge(0, 3, 6).unwrap());
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 3, 6)]);
    }

    #[test]
    fn node_set_rejects_duplicates() {
        assert!(NodeSet::new(vec![1, 2, 1]).is_err());
        let set = NodeSet::new(vec![3, 0]).unwrap();
        assert!(set.validate(4).is_ok());
        assert!(set.validate(3).is_err());
    }

    #[test]
    fn partition_check() {
        let ok = [NodeSet::range(0, 2), NodeSet::range(2, 2)];
        assert!(check_partition(&ok, 4).is_ok());
        assert!(check_partition(&ok, 5).is_err());
        let overlap = [NodeSet::range(0, 3), NodeSet::range(2, 2)];
        assert!(check_partition(&overlap, 4).is_err());
    }
}
