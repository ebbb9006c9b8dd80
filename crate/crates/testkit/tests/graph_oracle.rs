use std::sync::Arc;

use dsa_hotspot::{build_graph, TechParams};
use dsa_hotspot_testkit::{
    brute_components, brute_conflicts, brute_group_edges, random_gridded, random_small_layout,
};
use proptest::prelude::*;

fn check(layout: dsa_hotspot::Layout, tech: &TechParams) -> Result<(), TestCaseError> {
    let conflicts = brute_conflicts(&layout, tech);
    let templates = brute_group_edges(&layout, tech);
    let comps = brute_components(layout.len(), &conflicts, &templates);
    let g = build_graph(Arc::new(layout), tech).unwrap();

    let mut got: Vec<(usize, usize)> = g.conflict_edges().iter().map(|e| (e.a, e.b)).collect();
    got.sort_unstable();
    prop_assert_eq!(got, conflicts);
    let mut edges: Vec<Vec<usize>> = g.group_edges().iter().map(|e| e.key()).collect();
    edges.sort();
    prop_assert_eq!(edges, templates);
    prop_assert_eq!(g.components().to_vec(), comps);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lattice_graph_matches_brute_force(seed in any::<u64>(), max_g in 1usize..=4) {
        let t = TechParams::default().with_max_g(max_g);
        check(random_small_layout(seed, 14, &t), &t)?;
    }

    #[test]
    fn gridded_graph_matches_brute_force(seed in any::<u64>(), px in 40i64..90, py in 15i64..60) {
        let t = TechParams::default().with_max_g(3);
        check(random_gridded(seed, 10, 10, px, py, &t), &t)?;
    }
}
