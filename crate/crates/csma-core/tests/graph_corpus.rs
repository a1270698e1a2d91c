//! Independent-set machinery against brute-force enumeration, on the
//! reference graphs and on random graphs.

mod common;

use common::*;
use csma_core::{ContentionGraph, SystemState};
use proptest::prelude::*;

#[test]
fn corpus_matches_brute_force() {
    for (name, g) in [
        ("g1", g1()),
        ("g_p5", g_p5()),
        ("g_c5", g_c5()),
        ("g_c6", g_c6()),
        ("g_t1", g_t1()),
        ("g_star", g_star()),
        ("g_t4", g_t4()),
        ("g_t6", g_t6()),
        ("k3", k3()),
        ("single", single()),
    ] {
        assert_eq!(
            g.feasible_states().unwrap(),
            brute_independent_sets(&g),
            "{name}"
        );
        assert_eq!(
            g.maximal_independent_sets().unwrap(),
            brute_maximal_sets(&g),
            "{name}"
        );
        assert_eq!(
            g.maximum_independent_sets().unwrap(),
            brute_maximum_sets(&g),
            "{name}"
        );
    }
}

#[test]
fn fig_graph_maximum_sets_pin_the_inference() {
    // The three maximal sets and two maximum sets that identify g1.
    let bits = |s: &str| SystemState::from_bit_string(s).unwrap();
    assert_eq!(
        g1().maximal_independent_sets().unwrap(),
        vec![bits("0100"), bits("1010"), bits("1001")]
    );
    assert_eq!(
        g1().maximum_independent_sets().unwrap(),
        vec![bits("1010"), bits("1001")]
    );
    assert_eq!(
        g_c6().maximum_independent_sets().unwrap(),
        vec![bits("101010"), bits("010101")]
    );
    assert_eq!(
        g_p5().maximum_independent_sets().unwrap(),
        vec![bits("10101")]
    );
}

#[test]
fn path_maximal_sets_from_brute_force() {
    let bits = |s: &str| SystemState::from_bit_string(s).unwrap();
    let want = vec![bits("01010"), bits("01001"), bits("10010"), bits("10101")];
    let mut want_sorted = want;
    want_sorted.sort_by_key(SystemState::canonical_key);
    assert_eq!(g_p5().maximal_independent_sets().unwrap(), want_sorted);
}

#[test]
fn twelve_link_ring_matches_brute_force() {
    let labels: Vec<String> = (1..=12).map(|i| i.to_string()).collect();
    let edges: Vec<(usize, usize)> = (0..12).map(|i| (i, (i + 1) % 12)).collect();
    let ring = ContentionGraph::new(labels, &edges).unwrap();
    assert_eq!(
        ring.feasible_states().unwrap(),
        brute_independent_sets(&ring)
    );
    assert_eq!(
        ring.maximal_independent_sets().unwrap(),
        brute_maximal_sets(&ring)
    );
    assert_eq!(
        ring.maximum_independent_sets().unwrap(),
        brute_maximum_sets(&ring)
    );
}

#[test]
fn share_sum_equals_maximum_set_cardinality() {
    // Every maximum set has the same size, so the per-link shares add up
    // to exactly that size.
    for g in [
        g1(),
        g_p5(),
        g_c5(),
        g_c6(),
        g_t1(),
        g_star(),
        g_t4(),
        g_t6(),
        k3(),
    ] {
        let size = g.maximum_independent_sets().unwrap()[0].count() as f64;
        let total: f64 = csma_core::boe_throughput(&g).unwrap().values().iter().sum();
        assert!((total - size).abs() < 1e-12);
    }
}

#[test]
fn feasible_states_are_downward_closed() {
    for g in [g1(), g_t6(), g_c5()] {
        let states = g.feasible_states().unwrap();
        for s in &states {
            for i in s.links() {
                assert!(g.is_feasible(s.without(i)), "{s} minus link {i}");
            }
        }
    }
}

#[test]
fn every_maximum_set_is_maximal_and_feasible() {
    for g in [
        g1(),
        g_p5(),
        g_c5(),
        g_c6(),
        g_t1(),
        g_star(),
        g_t4(),
        g_t6(),
    ] {
        let feasible = g.feasible_states().unwrap();
        let maximal = g.maximal_independent_sets().unwrap();
        for s in &maximal {
            assert!(feasible.contains(s));
        }
        for s in g.maximum_independent_sets().unwrap() {
            assert!(maximal.contains(&s));
        }
    }
}

fn arbitrary_graph() -> impl Strategy<Value = ContentionGraph> {
    (1usize..=8).prop_flat_map(|n| {
        let bits = n * (n - 1) / 2;
        proptest::collection::vec(any::<bool>(), bits).prop_map(move |picks| {
            let labels: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
            let mut edges = Vec::new();
            let mut k = 0;
            for a in 0..n {
                for b in (a + 1)..n {
                    if picks[k] {
                        edges.push((a, b));
                    }
                    k += 1;
                }
            }
            ContentionGraph::new(labels, &edges).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn random_graphs_match_brute_force(g in arbitrary_graph()) {
        prop_assert_eq!(g.feasible_states().unwrap(), brute_independent_sets(&g));
        prop_assert_eq!(g.maximal_independent_sets().unwrap(), brute_maximal_sets(&g));
        prop_assert_eq!(g.maximum_independent_sets().unwrap(), brute_maximum_sets(&g));
    }

    #[test]
    fn transition_pairs_differ_by_one_transmitter(g in arbitrary_graph()) {
        for t in g.transition_graph().unwrap() {
            prop_assert_eq!(t.left.count() + 1, t.right.count());
            prop_assert_eq!(t.left.mask() ^ t.right.mask(), 1u64 << t.link);
            prop_assert!(g.connected_states(t.left, t.right).unwrap());
        }
    }

    #[test]
    fn share_estimate_is_permutation_equivariant(
        g in arbitrary_graph(),
        seed in any::<u64>(),
    ) {
        let n = g.len();
        // Derive a permutation from the seed.
        let mut perm: Vec<usize> = (0..n).collect();
        let mut state = seed;
        for i in (1..n).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let j = (state >> 33) as usize % (i + 1);
            perm.swap(i, j);
        }
        let labels: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
        let edges: Vec<(usize, usize)> = g
            .edges()
            .iter()
            .map(|&(a, b)| (perm[a], perm[b]))
            .collect();
        let permuted = ContentionGraph::new(labels, &edges).unwrap();

        let original = csma_core::boe_throughput(&g).unwrap();
        let shuffled = csma_core::boe_throughput(&permuted).unwrap();
        for (i, &target) in perm.iter().enumerate() {
            prop_assert_eq!(original.get(i), shuffled.get(target));
        }
    }
}
