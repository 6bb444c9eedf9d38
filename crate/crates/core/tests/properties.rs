use proptest::prelude::*;

use multiplex_recon::edp::{edp_prune, edp_prune_ordered, has_p_disjoint_bounded_paths, PruneOrder, DEFAULT_STATE_CAP};
use multiplex_recon::graph::{Adjacency, Edge, EdgeSet};
use multiplex_recon::prune::{simple_test, PruneParams};

fn graph() -> impl Strategy<Value = EdgeSet> {
    (4usize..14).prop_flat_map(|n| {
        prop::collection::vec((0..n as u32, 0..n as u32), 0..40).prop_map(move |raw| {
            let pairs: Vec<(u32, u32)> = raw.into_iter().filter(|(a, b)| a != b).collect();
            let mut edges: Vec<_> = pairs.iter().map(|&(a, b)| Edge::new(a, b)).collect();
            edges.sort_unstable();
            edges.dedup();
            EdgeSet::from_edges(n, edges)
        })
    })
}

proptest! {
    #[test]
    fn edp_fixed_point_is_order_free(g in graph(), p in 1usize..4, h in 1usize..4, seed in any::<u64>()) {
        let waves = edp_prune(&g, p, h, DEFAULT_STATE_CAP).unwrap();
        let seq = edp_prune_ordered(&g, p, h, DEFAULT_STATE_CAP, PruneOrder::Sequential(seed)).unwrap();
        prop_assert_eq!(&waves, &seq);
        prop_assert!(waves.is_subset(&g));
        for e in waves.iter() {
            prop_assert!(has_p_disjoint_bounded_paths(&waves, e.lo, e.hi, p, h, DEFAULT_STATE_CAP).unwrap());
        }
    }

    #[test]
    fn raising_the_threshold_only_drops_pairs(g in graph(), m in 1usize..4) {
        let adj = Adjacency::new(&g);
        let lo = simple_test(&adj, &PruneParams::new(m, 1.0).unwrap()).pairs;
        let hi = simple_test(&adj, &PruneParams::new(m + 1, 1.0).unwrap()).pairs;
        prop_assert!(hi.is_subset(&lo));
    }
}
