//! Shared graph fixtures and brute-force oracles for the integration and
//! acceptance suites. The oracles enumerate all `2^L` subsets and stay
//! independent of the library's enumeration path.

#![allow(dead_code)]

use csma_core::{ContentionGraph, SystemState};

fn graph(n: usize, edges: &[(usize, usize)]) -> ContentionGraph {
    let labels: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
    ContentionGraph::new(labels, edges).unwrap()
}

/// Four links; the middle link senses everyone, the outer pair is free.
pub fn g1() -> ContentionGraph {
    graph(4, &[(0, 1), (1, 2), (1, 3), (2, 3)])
}

/// Path over five links.
pub fn g_p5() -> ContentionGraph {
    graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4)])
}

/// Five-link ring.
pub fn g_c5() -> ContentionGraph {
    graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)])
}

/// Six-link ring.
pub fn g_c6() -> ContentionGraph {
    graph(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)])
}

/// Triangle with a pendant square: {1-2, 1-3, 2-3, 2-4, 3-4}.
pub fn g_t1() -> ContentionGraph {
    graph(4, &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)])
}

/// Star with center link 1.
pub fn g_star() -> ContentionGraph {
    graph(4, &[(0, 1), (0, 2), (0, 3)])
}

/// g1 plus a fifth link sensing links 3 and 4.
pub fn g_t4() -> ContentionGraph {
    graph(5, &[(0, 1), (1, 2), (1, 3), (2, 3), (2, 4), (3, 4)])
}

/// Five-ring plus a sixth link sensing links 2, 3 and 5.
pub fn g_t6() -> ContentionGraph {
    graph(
        6,
        &[
            (0, 1),
            (1, 2),
            (2, 3),
            (3, 4),
            (4, 0),
            (1, 5),
            (2, 5),
            (4, 5),
        ],
    )
}

pub fn k3() -> ContentionGraph {
    graph(3, &[(0, 1), (0, 2), (1, 2)])
}

pub fn single() -> ContentionGraph {
    graph(1, &[])
}

fn is_independent(g: &ContentionGraph, mask: u64) -> bool {
    for i in 0..g.len() {
        if mask & (1 << i) != 0 && g.neighbors(i) & mask != 0 {
            return false;
        }
    }
    true
}

/// Every independent set, by scanning all subsets, in canonical order.
pub fn brute_independent_sets(g: &ContentionGraph) -> Vec<SystemState> {
    let mut out: Vec<SystemState> = (0u64..(1 << g.len()))
        .filter(|&m| is_independent(g, m))
        .map(|m| SystemState::from_mask(m, g.len()))
        .collect();
    out.sort_by_key(SystemState::canonical_key);
    out
}

/// Independent sets not contained in a larger one, in canonical order.
pub fn brute_maximal_sets(g: &ContentionGraph) -> Vec<SystemState> {
    let sets = brute_independent_sets(g);
    let masks: Vec<u64> = sets.iter().map(SystemState::mask).collect();
    sets.into_iter()
        .filter(|s| {
            !masks
                .iter()
                .any(|&m| m != s.mask() && m & s.mask() == s.mask())
        })
        .collect()
}

/// Maximal sets of largest cardinality, in canonical order.
pub fn brute_maximum_sets(g: &ContentionGraph) -> Vec<SystemState> {
    let maximal = brute_maximal_sets(g);
    let best = maximal.iter().map(SystemState::count).max().unwrap_or(0);
    maximal.into_iter().filter(|s| s.count() == best).collect()
}

/// Per-link share of the maximum sets, the hand-computable estimate.
pub fn brute_share(g: &ContentionGraph) -> Vec<f64> {
    let mis = brute_maximum_sets(g);
    let n = mis.len() as f64;
    (0..g.len())
        .map(|i| mis.iter().filter(|s| s.get(i)).count() as f64 / n)
        .collect()
}

/// Product-form stationary probabilities from first principles: weight
/// each independent set by the product of inverse overheads.
pub fn brute_product_form(g: &ContentionGraph, c: &[f64]) -> Vec<(SystemState, f64)> {
    let sets = brute_independent_sets(g);
    let weights: Vec<f64> = sets
        .iter()
        .map(|s| s.links().map(|i| 1.0 / c[i]).product::<f64>())
        .collect();
    let total: f64 = weights.iter().sum();
    sets.into_iter()
        .zip(weights)
        .map(|(s, w)| (s, w / total))
        .collect()
}

/// Closed-form probability of one stage-expanded state: the marginal
/// product form spread uniformly over stages, times the stage-count draw
/// probabilities. Independent of the library's linear solve.
pub fn staged_closed_form(
    links: usize,
    normalizer: f64,
    spec: &csma_core::StagedSpec,
    state: &csma_core::ExpandedState,
) -> f64 {
    use csma_core::{LinkStage, StageLaw};

    let transmitters = state.transmit_count() as i32;
    let ratio = spec.tx_stage_mean / spec.cd_stage_mean;
    let mut p = normalizer / spec.cd_law.mean().powi(links as i32) * ratio.powi(transmitters);
    let prob_of = |law: &StageLaw, drawn: u32| -> f64 {
        law.support()
            .iter()
            .find(|(n, _)| *n == drawn)
            .map(|(_, q)| *q)
            .expect("drawn count outside law support")
    };
    for stage in state.links() {
        match stage {
            LinkStage::Countdown { drawn, .. } => p *= prob_of(&spec.cd_law, *drawn),
            LinkStage::Transmitting { drawn, .. } => p *= prob_of(&spec.tx_law, *drawn),
        }
    }
    p
}
