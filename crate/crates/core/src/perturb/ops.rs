use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{
    IsolationVariant, MovedNode, NoiseVariant, PerturbationKind, Perturbed, Provenance, RewireMode,
};
use crate::error::{Error, Result};
use crate::graph::{check_partition, BkGraph, NodeSet, Weight};
use crate::seed::scaled_count;

/// Above this many candidate pairs, non-edges are drawn by rejection
/// instead of being enumerated.
const ENUMERATION_LIMIT: usize = 1 << 22;

fn perturbed(graph: BkGraph, provenance: Provenance) -> Perturbed {
    Perturbed {
        graph,
        clusters: None,
        provenance,
    }
}

/// Deletes `round(κ|E|)` uniformly chosen edges.
///
/// Edges are drawn as a prefix of one seeded shuffle, so with a fixed seed
/// the removed set grows monotonically with κ.
pub fn remove_edges<R: Rng + ?Sized>(g: &BkGraph, kappa: f64, rng: &mut R) -> Result<Perturbed> {
    PerturbationKind::RemoveEdges.check_kappa(kappa)?;
    let mut edges: Vec<_> = g.edges().collect();
    let k = scaled_count(kappa, edges.len());
    edges.shuffle(rng);
    let mut removed = edges[..k].to_vec();
    removed.sort_unstable();

    let mut out = g.clone();
    for &(u, v, _) in &removed {
        out.remove_edge(u, v);
    }
    Ok(perturbed(
        out,
        Provenance {
            removed_edges: removed,
            ..Provenance::default()
        },
    ))
}

/// Adds `round(κ|E|)` edges drawn uniformly from the non-edges.
pub fn add_edges<R: Rng + ?Sized>(g: &BkGraph, kappa: f64, rng: &mut R) -> Result<Perturbed> {
    PerturbationKind::AddEdges.check_kappa(kappa)?;
    let k = scaled_count(kappa, g.edge_count());
    let available = g.non_edge_count();
    if k > available {
        return Err(Error::GraphSaturated {
            requested: k,
            available,
        });
    }
    let weights = EmpiricalWeights::of(g);
    let mut chosen = sample_non_edges(g, k, rng);
    chosen.sort_unstable();

    let mut out = g.clone();
    let mut added = Vec::with_capacity(k);
    for (u, v) in chosen {
        let w = weights.draw(rng);
        out.insert_edge(u, v, w)?;
        added.push((u, v, w));
    }
    Ok(perturbed(
        out,
        Provenance {
            added_edges: added,
            ..Provenance::default()
        },
    ))
}

/// Adds `round(n)` with `n ~ N(0, σ²)` to every weight. Edges whose new
/// weight falls below 1 are removed, or under `ReplaceNegatives` replaced
/// by a uniformly chosen non-edge carrying a weight drawn from the
/// original weight distribution.
pub fn weight_noise<R: Rng + ?Sized>(
    g: &BkGraph,
    sigma: f64,
    variant: NoiseVariant,
    rng: &mut R,
) -> Result<Perturbed> {
    PerturbationKind::WeightNoise(variant).check_kappa(sigma)?;
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParam(e.to_string()))?;
    let weights = EmpiricalWeights::of(g);

    let mut out = g.clone();
    let mut prov = Provenance::default();
    for (u, v, w) in g.edges() {
        let shift = normal.sample(rng).round() as i64;
        let updated = w as i64 + shift;
        if updated < 1 {
            out.remove_edge(u, v);
            prov.removed_edges.push((u, v, w));
        } else if shift != 0 {
            out.insert_edge(u, v, updated as Weight)?;
            prov.reweighted_edges += 1;
        }
    }

    if variant == NoiseVariant::ReplaceNegatives {
        for _ in 0..prov.removed_edges.len() {
            match sample_non_edges(&out, 1, rng).pop() {
                Some((u, v)) => {
                    let w = weights.draw(rng);
                    out.insert_edge(u, v, w)?;
                    prov.added_edges.push((u, v, w));
                }
                None => prov.dropped_replacements += 1,
            }
        }
    }
    Ok(perturbed(out, prov))
}

/// Strips all edges from `round(κ · node_count)` nodes.
///
/// `PerCluster` spreads the count evenly over the clusters; the remainder
/// goes to the lowest-indexed clusters.
pub fn isolate_nodes<R: Rng + ?Sized>(
    g: &BkGraph,
    kappa: f64,
    variant: IsolationVariant,
    clusters: Option<&[NodeSet]>,
    rng: &mut R,
) -> Result<Perturbed> {
    PerturbationKind::IsolateNodes(variant).check_kappa(kappa)?;
    let k = scaled_count(kappa, g.node_count());
    let selected: Vec<usize> = match variant {
        IsolationVariant::Random => {
            let mut nodes: Vec<usize> = (0..g.node_count()).collect();
            nodes.shuffle(rng);
            nodes.truncate(k);
            nodes
        }
        IsolationVariant::PerCluster => {
            let clusters = clusters.ok_or(Error::MissingClusters)?;
            check_partition(clusters, g.node_count())?;
            let c = clusters.len();
            let mut picked = Vec::with_capacity(k);
            for (idx, cluster) in clusters.iter().enumerate() {
                let quota = (k / c + usize::from(idx < k % c)).min(cluster.len());
                let mut members = cluster.ids().to_vec();
                members.shuffle(rng);
                picked.extend_from_slice(&members[..quota]);
            }
            picked
        }
    };

    let mut out = g.clone();
    let mut prov = Provenance::default();
    for &v in &selected {
        prov.removed_edges.extend(out.isolate(v));
    }
    prov.removed_edges.sort_unstable();
    prov.isolated_nodes = selected;
    Ok(perturbed(out, prov))
}

/// Detaches `round(κ · |cluster|)` nodes from each source cluster and
/// rewires each of them to every node currently in its target cluster.
pub fn detach_rewire<R: Rng + ?Sized>(
    g: &BkGraph,
    clusters: &[NodeSet],
    kappa: f64,
    mode: RewireMode,
    rng: &mut R,
) -> Result<Perturbed> {
    PerturbationKind::DetachRewire(mode).check_kappa(kappa)?;
    check_partition(clusters, g.node_count())?;
    let c = clusters.len();
    if c < 2 {
        return Err(Error::InvalidClusters(
            "detach-and-rewire needs at least two clusters".into(),
        ));
    }
    let routes: Vec<(usize, usize)> = match mode {
        RewireMode::Drain => vec![(c - 1, 0)],
        RewireMode::Exchange => (0..c).map(|s| (s, (s + 1) % c)).collect(),
    };

    let mut moves = Vec::new();
    for &(from, to) in &routes {
        let k = scaled_count(kappa, clusters[from].len());
        let mut members = clusters[from].ids().to_vec();
        members.shuffle(rng);
        moves.extend(members[..k].iter().map(|&node| MovedNode { node, from, to }));
    }

    let weights = EmpiricalWeights::of(g);
    let mut out = g.clone();
    let mut updated = clusters.to_vec();
    let mut prov = Provenance::default();
    for m in &moves {
        prov.removed_edges.extend(out.isolate(m.node));
        updated[m.from].remove(m.node);
    }
    prov.removed_edges.sort_unstable();
    for m in &moves {
        for &u in updated[m.to].ids() {
            let w = weights.draw(rng);
            out.insert_edge(m.node, u, w)?;
            prov.added_edges.push((m.node.min(u), m.node.max(u), w));
        }
        updated[m.to].push(m.node);
    }
    prov.moved_nodes = moves;
    Ok(Perturbed {
        graph: out,
        clusters: Some(updated),
        provenance: prov,
    })
}

/// Weight source for newly created edges: the pre-perturbation empirical
/// distribution. Uniformly weighted graphs always yield their single
/// weight (1 for graphs without edges) without consuming randomness.
struct EmpiricalWeights {
    values: Vec<Weight>,
    constant: Option<Weight>,
}

impl EmpiricalWeights {
    fn of(g: &BkGraph) -> Self {
        let values = g.weights();
        let constant = match values.first() {
            None => Some(1),
            Some(&first) if values.iter().all(|&w| w == first) => Some(first),
            Some(_) => None,
        };
        EmpiricalWeights { values, constant }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Weight {
        match self.constant {
            Some(w) => w,
            None => self.values[rng.random_range(0..self.values.len())],
        }
    }
}

/// `k` distinct non-edges chosen uniformly, returned in draw order.
fn sample_non_edges<R: Rng + ?Sized>(g: &BkGraph, k: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let n = g.node_count();
    let pairs = n * n.saturating_sub(1) / 2;
    let available = g.non_edge_count();
    if k == 0 || available == 0 {
        return Vec::new();
    }
    let sparse_enough = available >= pairs / 4 && k <= available / 2;
    if pairs <= ENUMERATION_LIMIT || !sparse_enough {
        let mut pool: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|&(u, v)| !g.has_edge(u, v))
            .collect();
        let k = k.min(pool.len());
        let (head, _) = pool.partial_shuffle(rng, k);
        return head.to_vec();
    }
    let mut seen = HashSet::with_capacity(k);
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u == v {
            continue;
        }
        let pair = (u.min(v), u.max(v));
        if !g.has_edge(pair.0, pair.1) && seen.insert(pair) {
            out.push(pair);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{cluster_aspl, connected_components};
    use crate::seed;
    use crate::synth::build_cluster_graph;

    fn synthetic() -> (BkGraph, Vec<NodeSet>) {
        build_cluster_graph(2, 16)
    }

    #[test]
    fn remove_extremes_and_half() {
        let (g, _) = synthetic();
        let p = remove_edges(&g, 0.0, &mut seed::rng(1)).unwrap();
        assert_eq!(p.graph, g);
        let p = remove_edges(&g, 1.0, &mut seed::rng(1)).unwrap();
        assert_eq!(p.graph.edge_count(), 0);
        assert_eq!(connected_components(&p.graph).len(), 32);
        let p = remove_edges(&g, 0.5, &mut seed::rng(1)).unwrap();
        assert_eq!(p.graph.edge_count(), 120);
        assert_eq!(p.provenance.removed_edges.len(), 120);
        assert!(remove_edges(&g, 1.01, &mut seed::rng(1)).is_err());
    }

    #[test]
    fn removal_is_nested_across_kappa() {
        let (g, _) = synthetic();
        let small = remove_edges(&g, 0.2, &mut seed::rng(4)).unwrap();
        let large = remove_edges(&g, 0.6, &mut seed::rng(4)).unwrap();
        for e in &small.provenance.removed_edges {
            assert!(large.provenance.removed_edges.contains(e));
        }
    }

    #[test]
    fn add_doubles_then_saturates() {
        let (g, _) = synthetic();
        let p = add_edges(&g, 1.0, &mut seed::rng(2)).unwrap();
        assert_eq!(p.graph.edge_count(), 480);
        assert!(p.graph.edges().all(|(_, _, w)| w == 1));
        assert_eq!(add_edges(&g, 0.0, &mut seed::rng(2)).unwrap().graph, g);

        // 256 non-edges: κ = 256/240 fills the graph, anything more fails.
        let full = add_edges(&g, 256.0 / 240.0, &mut seed::rng(2)).unwrap();
        assert_eq!(full.graph.non_edge_count(), 0);
        assert!(matches!(
            add_edges(&g, 1.1, &mut seed::rng(2)),
            Err(Error::GraphSaturated { requested: 264, available: 256 })
        ));
    }

    #[test]
    fn added_weights_follow_empirical_distribution() {
        let g = BkGraph::from_edges(6, [(0, 1, 3), (1, 2, 7)]).unwrap();
        let p = add_edges(&g, 2.0, &mut seed::rng(8)).unwrap();
        assert_eq!(p.graph.edge_count(), 6);
        assert!(p.provenance.added_edges.iter().all(|&(_, _, w)| w == 3 || w == 7));
    }

    #[test]
    fn noise_zero_sigma_is_identity() {
        let g = BkGraph::from_edges(4, [(0, 1, 2), (2, 3, 1)]).unwrap();
        for v in [NoiseVariant::RemoveNegatives, NoiseVariant::ReplaceNegatives] {
            assert_eq!(weight_noise(&g, 0.0, v, &mut seed::rng(0)).unwrap().graph, g);
        }
    }

    #[test]
    fn noise_replace_conserves_count() {
        let (g, _) = synthetic();
        let p = weight_noise(&g, 3.0, NoiseVariant::ReplaceNegatives, &mut seed::rng(5)).unwrap();
        assert_eq!(p.graph.edge_count(), 240);
        assert!(!p.provenance.removed_edges.is_empty());
        let p = weight_noise(&g, 3.0, NoiseVariant::RemoveNegatives, &mut seed::rng(5)).unwrap();
        assert_eq!(p.graph.edge_count(), 240 - p.provenance.removed_edges.len());
    }

    #[test]
    fn noise_on_complete_graph_drops_replacements() {
        let g = BkGraph::from_edges(3, [(0, 1, 1), (1, 2, 1), (0, 2, 1)]).unwrap();
        let p = weight_noise(&g, 50.0, NoiseVariant::ReplaceNegatives, &mut seed::rng(1)).unwrap();
        let removed = p.provenance.removed_edges.len();
        assert_eq!(
            p.provenance.added_edges.len() + p.provenance.dropped_replacements,
            removed
        );
        assert_eq!(p.graph.edge_count(), 3);
    }

    #[test]
    fn isolate_counts() {
        let (g, clusters) = synthetic();
        let p = isolate_nodes(&g, 0.0, IsolationVariant::Random, None, &mut seed::rng(3)).unwrap();
        assert_eq!(p.graph, g);
        let p = isolate_nodes(&g, 1.0, IsolationVariant::Random, None, &mut seed::rng(3)).unwrap();
        assert_eq!(p.graph.edge_count(), 0);

        let p = isolate_nodes(
            &g,
            2.0 / 16.0,
            IsolationVariant::PerCluster,
            Some(&clusters),
            &mut seed::rng(3),
        )
        .unwrap();
        let iso = &p.provenance.isolated_nodes;
        assert_eq!(iso.len(), 4);
        assert_eq!(iso.iter().filter(|&&v| v < 16).count(), 2);
        assert!(iso.iter().all(|&v| p.graph.degree(v) == 0));
        // Each clique loses the edges of its two isolated members: 15 + 14.
        assert_eq!(p.graph.edge_count(), 240 - 2 * 29);

        assert!(matches!(
            isolate_nodes(&g, 0.5, IsolationVariant::PerCluster, None, &mut seed::rng(3)),
            Err(Error::MissingClusters)
        ));
    }

    #[test]
    fn drain_full_merges_clusters() {
        let (g, clusters) = synthetic();
        let p = detach_rewire(&g, &clusters, 1.0, RewireMode::Drain, &mut seed::rng(6)).unwrap();
        assert_eq!(p.graph.edge_count(), 32 * 31 / 2);
        let updated = p.clusters.unwrap();
        assert_eq!(updated[0].len(), 32);
        assert!(updated[1].is_empty());
        assert_eq!(cluster_aspl(&p.graph, &updated[0]).unwrap(), 1.0);
    }

    #[test]
    fn drain_three_sixteenths() {
        let (g, clusters) = synthetic();
        let p = detach_rewire(&g, &clusters, 3.0 / 16.0, RewireMode::Drain, &mut seed::rng(6))
            .unwrap();
        let updated = p.clusters.unwrap();
        assert_eq!(updated[0].len(), 19);
        assert_eq!(updated[1].len(), 13);
        for m in &p.provenance.moved_nodes {
            assert_eq!((m.from, m.to), (1, 0));
            assert_eq!(p.graph.degree(m.node), 18);
        }
        assert!(updated[1].ids().iter().all(|&v| p.graph.degree(v) == 12));
    }

    #[test]
    fn exchange_moves_both_ways() {
        let (g, clusters) = synthetic();
        let p = detach_rewire(&g, &clusters, 0.25, RewireMode::Exchange, &mut seed::rng(2))
            .unwrap();
        let updated = p.clusters.unwrap();
        assert_eq!(updated[0].len(), 16);
        assert_eq!(updated[1].len(), 16);
        assert_eq!(p.provenance.moved_nodes.len(), 8);
        // Clusters stay cliques with no edges between them.
        assert_eq!(connected_components(&p.graph).len(), 2);
        assert_eq!(p.graph.edge_count(), 240);
    }

    #[test]
    fn rewire_rejects_bad_clusters() {
        let (g, _) = synthetic();
        let partial = vec![NodeSet::range(0, 16)];
        assert!(matches!(
            detach_rewire(&g, &partial, 0.5, RewireMode::Drain, &mut seed::rng(1)),
            Err(Error::InvalidClusters(_))
        ));
    }
}
