mod common;

use bkbench::models::{ModelKind, ModelSpec, Network};
use bkbench::nn::{glorot, normalize_adjacency};
use bkbench::seed;
use common::{arb_graph, gatv2_layer_grad_error, network_grad_error, symmetric_eigenvalues};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn normalized_adjacency_is_symmetric_and_contractive(g in arb_graph(32, 120)) {
        let a = normalize_adjacency(&g).unwrap();
        let n = g.node_count();
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(a.get(i, j), a.get(j, i));
            }
        }
        let radius = symmetric_eigenvalues(&a).into_iter().map(f64::abs).fold(0.0, f64::max);
        prop_assert!(radius <= 1.0 + 1e-8, "spectral radius {}", radius);
    }
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        rng_seed: RngSeed::Fixed(0x6b1d),
        ..ProptestConfig::default()
    })]

    #[test]
    fn network_gradients_match_finite_differences(
        g in arb_graph(32, 80),
        batch in 1usize..4,
        hidden in 1usize..=8,
        seed_value in any::<u64>(),
    ) {
        for (kind, layers) in [(ModelKind::Mlp, 3), (ModelKind::Gcn, 3), (ModelKind::Gatv2, 1)] {
            if let Some(err) = network_grad_error(kind, layers, &g, batch, hidden, seed_value) {
                prop_assert!(err < 1e-4, "{:?}: {}", kind, err);
            }
        }
    }

    #[test]
    fn gatv2_layer_gradients_match_finite_differences(
        g in arb_graph(32, 120),
        din in 1usize..=8,
        dout in 1usize..=8,
        batch in 1usize..4,
        seed_value in any::<u64>(),
    ) {
        if let Some(err) = gatv2_layer_grad_error(&g, din, dout, batch, seed_value) {
            prop_assert!(err < 1e-4, "{}", err);
        }
    }

    #[test]
    fn forward_is_pure(g in arb_graph(16, 40), seed_value in any::<u64>()) {
        for kind in [ModelKind::Gcn, ModelKind::Gatv2, ModelKind::Parallel, ModelKind::Mlp] {
            let mut spec = ModelSpec::new(kind);
            spec.hidden_dim = 3;
            spec.mlp_hidden_dim = 5;
            let n = g.node_count();
            let net = Network::new(&spec, kind.is_informed().then_some(&g), n, 2, &mut seed::rng(seed_value)).unwrap();
            let twin = Network::new(&spec, kind.is_informed().then_some(&g), n, 2, &mut seed::rng(seed_value)).unwrap();
            let x = glorot(3, n, 1, 1, &mut seed::rng(seed_value ^ 1));
            let (a, _) = net.forward(&x).unwrap();
            let (b, _) = twin.forward(&x).unwrap();
            let bits = |m: &bkbench::nn::DenseMatrix| m.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&a), bits(&b));
        }
    }
}

#[test]
fn jacobi_oracle_sanity() {
    let a = bkbench::nn::DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
    let mut eig = symmetric_eigenvalues(&a);
    eig.sort_by(f64::total_cmp);
    assert!((eig[0] - 1.0).abs() < 1e-12 && (eig[1] - 3.0).abs() < 1e-12);
}
