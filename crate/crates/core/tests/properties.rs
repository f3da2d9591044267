//! Property-based invariants for the topology layer and the FPP metric.

use fpp_lab::geodesic::{self, SearchOptions};
use fpp_lab::topology::{canonical_edge_key, Topology, TreeWord, Vertex};
use fpp_lab::weights::{WeightOracle, WeightSpec};
use proptest::prelude::*;

fn uniform_oracle(seed: u64) -> WeightOracle<f64> {
    WeightOracle::new(seed, WeightSpec::Uniform { lo: 0.5, hi: 1.5 }).unwrap()
}

/// Letters for a word that is valid in Full(3)/Pruned(3); DAry/Restricted
/// validity is narrower and enforced by filtering below.
fn full_word_strategy() -> impl Strategy<Value = TreeWord> {
    (0u8..3, proptest::collection::vec(0u8..2, 0..7), any::<bool>()).prop_map(
        |(first, rest, empty)| {
            if empty {
                TreeWord::root()
            } else {
                let mut letters = vec![first];
                letters.extend(rest);
                TreeWord::from_letters(&letters)
            }
        },
    )
}

fn vertex_strategy() -> impl Strategy<Value = Vertex> {
    (full_word_strategy(), -8i64..=8).prop_map(|(w, z)| Vertex::new(w, z))
}

fn topologies() -> Vec<Topology> {
    vec![
        Topology::full(3),
        Topology::dary(3),
        Topology::pruned(3, TreeWord::from_letters(&[0, 0])),
        Topology::restricted(3, TreeWord::from_letters(&[1])),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn adjacency_is_symmetric(v in vertex_strategy()) {
        for topo in topologies() {
            if !topo.contains(&v) {
                continue;
            }
            for (u, _) in topo.neighbors(&v).unwrap() {
                let back = topo.neighbors(&u).unwrap();
                prop_assert!(
                    back.iter().any(|(w, _)| w == &v),
                    "{u} does not list {v} in {topo:?}"
                );
            }
        }
    }

    #[test]
    fn degree_law(v in vertex_strategy()) {
        let full = Topology::full(3);
        prop_assert_eq!(full.neighbors(&v).unwrap().len(), 5); // d + 2
        let dary = Topology::dary(3);
        if dary.contains(&v) {
            let expected = if v.word.is_root() { 4 } else { 5 };
            prop_assert_eq!(dary.neighbors(&v).unwrap().len(), expected);
        }
    }

    #[test]
    fn pruned_and_restricted_membership(v in vertex_strategy()) {
        let v0 = TreeWord::from_letters(&[0, 0]);
        let pruned = Topology::pruned(3, v0.clone());
        if pruned.contains(&v) {
            for (u, _) in pruned.neighbors(&v).unwrap() {
                prop_assert!(!u.word.is_descendant_of(&v0));
            }
        }
        let anchor = TreeWord::from_letters(&[1]);
        let restricted = Topology::restricted(3, anchor.clone());
        if restricted.contains(&v) {
            for (u, _) in restricted.neighbors(&v).unwrap() {
                prop_assert!(u.word.is_descendant_of(&anchor));
            }
        }
    }

    #[test]
    fn vertex_codec_round_trip(v in vertex_strategy()) {
        let text = v.to_string();
        prop_assert_eq!(text.parse::<Vertex>().unwrap(), v);
    }

    #[test]
    fn edge_keys_are_direction_independent(v in vertex_strategy()) {
        let topo = Topology::full(3);
        for (u, key) in topo.neighbors(&v).unwrap() {
            prop_assert_eq!(canonical_edge_key(&v, &u).unwrap(), key.clone());
            prop_assert_eq!(canonical_edge_key(&u, &v).unwrap(), key);
        }
    }
}

/// Distance-level properties use tiny instances so each case is a
/// millisecond-scale exact search.
fn small_vertex_strategy() -> impl Strategy<Value = Vertex> {
    (
        prop_oneof![
            Just(TreeWord::root()),
            (0u8..3).prop_map(|l| TreeWord::from_letters(&[l])),
            (0u8..3, 0u8..2).prop_map(|(a, b)| TreeWord::from_letters(&[a, b])),
        ],
        -3i64..=3,
    )
        .prop_map(|(w, z)| Vertex::new(w, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn triangle_inequality(
        u in small_vertex_strategy(),
        v in small_vertex_strategy(),
        w in small_vertex_strategy(),
        seed in 0u64..1000,
    ) {
        let topo = Topology::full(3);
        let orc = uniform_oracle(seed);
        let opts = SearchOptions::default();
        let duv = geodesic::shortest_path(&topo, &orc, &u, &v, &opts).unwrap().distance;
        let dvw = geodesic::shortest_path(&topo, &orc, &v, &w, &opts).unwrap().distance;
        let duw = geodesic::shortest_path(&topo, &orc, &u, &w, &opts).unwrap().distance;
        prop_assert!(duw <= duv + dvw + 1e-9);
    }

    #[test]
    fn distance_symmetry_and_path_validity(
        s in small_vertex_strategy(),
        t in small_vertex_strategy(),
        seed in 0u64..1000,
    ) {
        let topo = Topology::full(3);
        let orc = uniform_oracle(seed);
        let opts = SearchOptions::default();
        let fwd = geodesic::shortest_path(&topo, &orc, &s, &t, &opts).unwrap();
        let bwd = geodesic::shortest_path(&topo, &orc, &t, &s, &opts).unwrap();
        prop_assert!((fwd.distance - bwd.distance).abs() < 1e-12);

        // path validity invariants
        prop_assert_eq!(fwd.path.first().unwrap(), &s);
        prop_assert_eq!(fwd.path.last().unwrap(), &t);
        prop_assert_eq!(fwd.stats.edge_count, fwd.path.len() - 1);
        prop_assert!(fwd.stats.tree_projection_size >= 1);
        let mut total = 0.0;
        for pair in fwd.path.windows(2) {
            let key = canonical_edge_key(&pair[0], &pair[1]).unwrap();
            total += orc.weight(&key);
        }
        prop_assert!((total - fwd.distance).abs() <= 1e-9 * (1.0 + fwd.distance));

        // upper bound by the canonical feasible route
        let route = geodesic::canonical_route(&s, &t);
        prop_assert!(fwd.distance <= orc.path_weight(&route) + 1e-12);
    }

    #[test]
    fn subgraph_monotonicity(
        s in small_vertex_strategy(),
        t in small_vertex_strategy(),
        seed in 0u64..1000,
    ) {
        let full = Topology::full(3);
        let pruned = Topology::pruned(3, TreeWord::from_letters(&[0, 0]));
        prop_assume!(pruned.contains(&s) && pruned.contains(&t));
        let orc = uniform_oracle(seed);
        let opts = SearchOptions::default();
        let d = geodesic::shortest_path(&full, &orc, &s, &t, &opts).unwrap().distance;
        let dp = geodesic::shortest_path(&pruned, &orc, &s, &t, &opts).unwrap().distance;
        prop_assert!(d <= dp + 1e-12);
    }
}
