#![allow(dead_code)]

use bkbench::graph::{BkGraph, NodeSet};
use bkbench::models::{GnnLayer, GnnLayerKind, ModelKind, ModelSpec, Network};
use bkbench::nn::{
    glorot, grad_check, softmax_cross_entropy, DenseMatrix, Gatv2Layer, Parameterized, Propagation,
};
use bkbench::seed;
use proptest::prelude::*;

/// Random simple graph on `1..=max_nodes` nodes with weights in 1..=4.
pub fn arb_graph(max_nodes: usize, max_edges: usize) -> impl Strategy<Value = BkGraph> {
    (1..=max_nodes).prop_flat_map(move |n| {
        proptest::collection::vec((0..n, 0..n, 1u64..=4), 0..=max_edges).prop_map(move |raw| {
            let mut g = BkGraph::empty(n);
            for (u, v, w) in raw {
                if u != v {
                    g.insert_edge(u, v, w).unwrap();
                }
            }
            g
        })
    })
}

/// Random subset of the graph's nodes, possibly empty.
pub fn subset(g: &BkGraph, mask: &[bool]) -> Vec<usize> {
    (0..g.node_count()).filter(|&v| mask[v % mask.len()]).collect()
}

/// All-pairs hop distances by Floyd–Warshall, restricted to `allowed`.
pub fn hop_distances(g: &BkGraph, allowed: &[bool]) -> Vec<Vec<Option<usize>>> {
    let n = g.node_count();
    let mut d = vec![vec![None; n]; n];
    for u in 0..n {
        if !allowed[u] {
            continue;
        }
        d[u][u] = Some(0);
        for (v, _) in g.neighbors(u) {
            if allowed[*v] {
                d[u][*v] = Some(1);
            }
        }
    }
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (d[i][m], d[m][j]) {
                    if d[i][j].map_or(true, |c| a + b < c) {
                        d[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    d
}

pub fn oracle_aspl(g: &BkGraph, cluster: &[usize]) -> f64 {
    let mut allowed = vec![false; g.node_count()];
    for &v in cluster {
        allowed[v] = true;
    }
    let d = hop_distances(g, &allowed);
    let (mut total, mut pairs) = (0usize, 0usize);
    for (a, &u) in cluster.iter().enumerate() {
        for &v in &cluster[a + 1..] {
            if let Some(x) = d[u][v] {
                total += x;
                pairs += 1;
            }
        }
    }
    if pairs == 0 {
        0.0
    } else {
        total as f64 / pairs as f64
    }
}

pub fn oracle_receptive_field(g: &BkGraph, v: usize, k: usize, include_self: bool) -> usize {
    let d = hop_distances(g, &vec![true; g.node_count()]);
    let within = d[v].iter().filter(|x| x.is_some_and(|x| x <= k)).count();
    if include_self {
        within
    } else {
        within - 1
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(a: &DenseMatrix) -> Vec<f64> {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[i][i]).collect()
}

/// Margin below which an activation argument counts as sitting on a kink.
/// Central differences at ε = 1e-5 are only meaningful away from kinks.
pub const KINK_MARGIN: f64 = 1e-3;

/// Nonzero gradient entries below this are under the resolution of central
/// differences at ε = 1e-5 in double precision.
pub const RESOLVABLE_GRADIENT: f64 = 1e-6;

/// Whether central differences can verify every entry of `grads`.
pub fn resolvable(grads: &[DenseMatrix]) -> bool {
    grads
        .iter()
        .flat_map(|g| g.data())
        .all(|&v| v == 0.0 || v.abs() >= RESOLVABLE_GRADIENT)
}

/// Whether every attention argument `q_i + k_j` keeps clear of the
/// LeakyReLU kink and every output column has at least one neighborhood
/// whose arguments straddle zero. A column without such a neighborhood has
/// an exactly zero `w_dst` gradient by softmax shift invariance, which only
/// roundoff residue would report.
pub fn gatv2_conditioned(layer: &Gatv2Layer, hood: &Propagation, x: &DenseMatrix) -> bool {
    let q = x.matmul(&layer.w_dst).unwrap();
    let k = x.matmul(&layer.w_src).unwrap();
    let n = hood.node_count();
    let d = layer.w_dst.cols();
    let mut live = vec![false; d];
    for b in 0..x.rows() / n {
        for i in 0..n {
            let (cols, _) = hood.row(i);
            for (c, flag) in live.iter_mut().enumerate() {
                let (mut pos, mut neg) = (false, false);
                for &j in cols {
                    let arg = q.get(b * n + i, c) + k.get(b * n + j, c);
                    if arg.abs() < KINK_MARGIN {
                        return false;
                    }
                    pos |= arg > 0.0;
                    neg |= arg < 0.0;
                }
                *flag |= pos && neg;
            }
        }
    }
    live.into_iter().all(|l| l)
}

/// Network with its default initialization and biases drawn from ±0.5.
pub fn random_network(kind: ModelKind, layers: usize, g: &BkGraph, hidden: usize, rng: &mut seed::Rng) -> Network {
    let mut spec = ModelSpec::new(kind);
    spec.gnn_layer = if kind == ModelKind::Gcn { GnnLayerKind::Gcn } else { GnnLayerKind::Gatv2 };
    spec.gnn_layers = layers;
    spec.hidden_dim = hidden;
    spec.mlp_hidden_dim = hidden;
    let graph = kind.is_informed().then_some(g);
    let mut net = Network::new(&spec, graph, g.node_count(), 2, rng).unwrap();
    let names = net.param_names();
    for (p, name) in net.params_mut().into_iter().zip(names) {
        if name.ends_with("bias") {
            *p = glorot(p.rows(), p.cols(), 1, 1, rng).map(|v| v * 0.5 / 3f64.sqrt());
        }
    }
    net
}

/// Max relative gradient error of a random network on a random batch, or
/// `None` when the instance cannot be verified by central differences.
pub fn network_grad_error(kind: ModelKind, layers: usize, g: &BkGraph, batch: usize, hidden: usize, seed_value: u64) -> Option<f64> {
    let mut rng = seed::rng(seed_value);
    let mut net = random_network(kind, layers, g, hidden, &mut rng);
    let n = g.node_count();
    let x = glorot(batch, n, 1, 1, &mut rng);
    let labels: Vec<usize> = (0..batch).map(|i| i % 2).collect();
    if kind == ModelKind::Gatv2 {
        assert_eq!(layers, 1, "only the input layer's attention arguments are observable");
        let GnnLayer::Gatv2(layer) = &net.gnn_layers()[0] else { unreachable!() };
        let stacked = x.clone().reshape(batch * n, 1).unwrap();
        if !gatv2_conditioned(layer, &Propagation::neighborhoods(g), &stacked) {
            return None;
        }
    }
    let loss_and_grads = |net: &Network| {
        let (logits, cache) = net.forward(&x)?;
        let (loss, d) = softmax_cross_entropy(&logits, &labels)?;
        Ok((loss, net.backward(&cache, &d)?))
    };
    let (_, grads): (f64, Vec<DenseMatrix>) = loss_and_grads(&net).unwrap();
    if !resolvable(&grads) {
        return None;
    }
    Some(grad_check(&mut net, loss_and_grads, 1e-5).unwrap())
}

/// Max relative gradient error of one GATv2 layer under a random linear
/// functional of its output, or `None` for an unverifiable instance.
pub fn gatv2_layer_grad_error(g: &BkGraph, din: usize, dout: usize, batch: usize, seed_value: u64) -> Option<f64> {
    let mut rng = seed::rng(seed_value);
    let n = g.node_count();
    let mut layer = Gatv2Layer::new(din, dout, &mut rng);
    layer.bias = glorot(1, dout, 1, 1, &mut rng);
    let hood = Propagation::neighborhoods(g);
    let x = glorot(batch * n, din, 1, 1, &mut rng);
    let r = glorot(batch * n, dout, 1, 1, &mut rng);
    if !gatv2_conditioned(&layer, &hood, &x) {
        return None;
    }
    let loss_and_grads = |l: &Gatv2Layer| {
        let (z, cache) = l.forward(&hood, &x)?;
        let loss: f64 = z.data().iter().zip(r.data()).map(|(a, b)| a * b).sum();
        Ok((loss, l.backward(&hood, &x, &cache, &r, false)?.0))
    };
    let (_, grads): (f64, Vec<DenseMatrix>) = loss_and_grads(&layer).unwrap();
    if !resolvable(&grads) {
        return None;
    }
    Some(grad_check(&mut layer, loss_and_grads, 1e-5).unwrap())
}

pub fn clusters_of(classes: usize, m: usize) -> Vec<NodeSet> {
    (0..classes).map(|c| NodeSet::range(c * m, m)).collect()
}
