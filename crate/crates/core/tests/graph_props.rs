mod common;

use bkbench::graph::{
    cluster_aspl, connected_components, k_hop_receptive_field, parse_edge_list, write_edge_list,
    BkGraph, NodeSet,
};
use common::{arb_graph, oracle_aspl, oracle_receptive_field, subset};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn diagnostics_match_floyd_warshall(
        g in arb_graph(64, 160),
        mask in proptest::collection::vec(any::<bool>(), 1..8),
        k in 1usize..5,
    ) {
        let members = subset(&g, &mask);
        if !members.is_empty() {
            let cluster = NodeSet::new(members.clone()).unwrap();
            prop_assert_eq!(cluster_aspl(&g, &cluster).unwrap(), oracle_aspl(&g, &members));
        }
        for v in 0..g.node_count() {
            for include_self in [true, false] {
                prop_assert_eq!(
                    k_hop_receptive_field(&g, v, k, include_self).unwrap(),
                    oracle_receptive_field(&g, v, k, include_self)
                );
            }
        }
    }

    #[test]
    fn component_sizes_partition_nodes(g in arb_graph(64, 120)) {
        let comps = connected_components(&g);
        prop_assert_eq!(comps.iter().map(NodeSet::len).sum::<usize>(), g.node_count());
        let mut all: Vec<usize> = comps.iter().flat_map(|c| c.ids().to_vec()).collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..g.node_count()).collect::<Vec<_>>());
    }

    #[test]
    fn complete_induced_subgraph_has_unit_aspl(
        g in arb_graph(24, 60),
        size in 2usize..10,
        w in 1u64..5,
    ) {
        let mut g = g;
        let size = size.min(g.node_count());
        prop_assume!(size >= 2);
        for u in 0..size {
            for v in u + 1..size {
                g.insert_edge(u, v, w).unwrap();
            }
        }
        prop_assert_eq!(cluster_aspl(&g, &NodeSet::range(0, size)).unwrap(), 1.0);
    }

    #[test]
    fn receptive_field_monotone_and_bounded(g in arb_graph(40, 80)) {
        for v in 0..g.node_count() {
            let mut prev = 0;
            for k in 1..=6 {
                let rf = k_hop_receptive_field(&g, v, k, true).unwrap();
                prop_assert!(rf >= prev && rf <= g.node_count());
                prev = rf;
            }
        }
    }

    #[test]
    fn edge_list_round_trip_is_byte_identical(g in arb_graph(64, 200)) {
        let text = write_edge_list(&g);
        let back = parse_edge_list(&text, "mem").unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(write_edge_list(&back), text);
    }
}

#[test]
fn floyd_warshall_oracle_sanity() {
    let path = BkGraph::from_edges(4, [(0, 1, 1), (1, 2, 1), (2, 3, 1)]).unwrap();
    assert_eq!(oracle_aspl(&path, &[0, 1, 2, 3]), 10.0 / 6.0);
    assert_eq!(oracle_aspl(&path, &[0, 2]), 0.0);
    assert_eq!(oracle_receptive_field(&path, 0, 2, true), 3);
    assert_eq!(oracle_receptive_field(&path, 1, 1, false), 2);
}
