//! Exact stationary distribution of the ideal CSMA network.
//!
//! With countdown overhead `c_i` per link, the stationary probability of a
//! feasible state `s` is proportional to the product of `1/c_i` over its
//! transmitting links. The transition graph connects states at Hamming
//! distance one, and each transition's rate depends only on the toggled
//! link, so detailed balance pins this product form uniquely. Weights are
//! accumulated in the log domain so overheads as small as `1e-6` stay
//! well-conditioned.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph::{ContentionGraph, DocumentOverhead, SystemState};
use crate::throughput::ThroughputVector;

/// Per-link countdown overhead `c_i` (mean countdown over mean transmission).
#[derive(Debug, Clone, PartialEq)]
pub struct AccessParams {
    c: Vec<f64>,
}

impl AccessParams {
    /// Uniform overhead for every link.
    pub fn uniform(c: f64, links: usize) -> Result<Self> {
        Self::per_link(vec![c; links])
    }

    /// Per-link overheads; every entry must be strictly positive.
    pub fn per_link(c: Vec<f64>) -> Result<Self> {
        for (index, &value) in c.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositiveOverhead { index, value });
            }
        }
        Ok(Self { c })
    }

    /// Resolves a graph document's `c` field against the graph's labels.
    pub fn from_document(overhead: &DocumentOverhead, graph: &ContentionGraph) -> Result<Self> {
        match overhead {
            DocumentOverhead::Uniform(v) => Self::uniform(*v, graph.len()),
            DocumentOverhead::PerLink(map) => {
                let mut c = Vec::with_capacity(graph.len());
                for label in graph.labels() {
                    let v = map
                        .get(label)
                        .ok_or_else(|| Error::MissingOverhead(label.clone()))?;
                    c.push(*v);
                }
                Self::per_link(c)
            }
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.c
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn get(&self, link: usize) -> f64 {
        self.c[link]
    }

    pub fn is_uniform(&self) -> bool {
        self.c.windows(2).all(|w| w[0] == w[1])
    }
}

/// A probability per feasible state, plus the normalization constant
/// (the probability of the all-idle state).
#[derive(Debug, Clone, PartialEq)]
pub struct StateDistribution {
    states: Vec<SystemState>,
    probs: Vec<f64>,
    index: HashMap<u64, usize>,
    normalizer: f64,
}

impl StateDistribution {
    /// Builds a distribution over the given states. The probabilities are
    /// renormalized to sum to one; the state list must be in canonical order.
    pub fn new(states: Vec<SystemState>, probs: Vec<f64>) -> Result<Self> {
        if states.len() != probs.len() || states.is_empty() {
            return Err(Error::SupportMismatch);
        }
        let total: f64 = probs.iter().sum();
        if !(total.is_finite() && total > 0.0) || probs.iter().any(|p| *p < 0.0) {
            return Err(Error::InvalidInput(
                "probabilities must be nonnegative".into(),
            ));
        }
        let probs: Vec<f64> = probs.into_iter().map(|p| p / total).collect();
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.mask(), i))
            .collect();
        let normalizer = states
            .iter()
            .zip(&probs)
            .find(|(s, _)| s.is_empty())
            .map(|(_, p)| *p)
            .unwrap_or(0.0);
        Ok(Self {
            states,
            probs,
            index,
            normalizer,
        })
    }

    pub fn states(&self) -> &[SystemState] {
        &self.states
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn prob(&self, state: SystemState) -> Option<f64> {
        self.index.get(&state.mask()).map(|&i| self.probs[i])
    }

    /// The probability of the all-idle state (the `B` of the product form).
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn iter(&self) -> impl Iterator<Item = (SystemState, f64)> + '_ {
        self.states.iter().copied().zip(self.probs.iter().copied())
    }
}

/// Stationary distribution of the ideal network: `P_s ∝ Π_{i: s_i=1} 1/c_i`
/// over the feasible states.
pub fn stationary_distribution(
    graph: &ContentionGraph,
    params: &AccessParams,
) -> Result<StateDistribution> {
    if params.len() != graph.len() {
        return Err(Error::OverheadLength {
            got: params.len(),
            want: graph.len(),
        });
    }
    let states = graph.feasible_states()?;
    let log_c: Vec<f64> = params.values().iter().map(|c| c.ln()).collect();
    let log_weights: Vec<f64> = states
        .iter()
        .map(|s| -s.links().map(|i| log_c[i]).sum::<f64>())
        .collect();
    let peak = log_weights.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let weights: Vec<f64> = log_weights.iter().map(|w| (w - peak).exp()).collect();
    StateDistribution::new(states, weights)
}

/// Per-link normalized throughput: the probability that the link transmits.
pub fn link_throughputs(
    dist: &StateDistribution,
    graph: &ContentionGraph,
) -> Result<ThroughputVector> {
    let feasible = graph.feasible_states()?;
    if dist.states() != feasible.as_slice() {
        return Err(Error::SupportMismatch);
    }
    let mut x = vec![0.0; graph.len()];
    for (state, p) in dist.iter() {
        for i in state.links() {
            x[i] += p;
        }
    }
    Ok(ThroughputVector::new(x))
}

/// The exact `c → 0` limit of the link throughputs: a uniform distribution
/// over the maximum independent sets, summed per link. Equals
/// [`crate::boe::boe_throughput`] by construction.
pub fn boe_limit(graph: &ContentionGraph) -> Result<ThroughputVector> {
    let mis = graph.maximum_independent_sets()?;
    let n = mis.len() as f64;
    let values = (0..graph.len())
        .map(|i| mis.iter().filter(|s| s.get(i)).count() as f64 / n)
        .collect();
    Ok(ThroughputVector::new(values))
}

/// Result of the conditional-independence check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MrfReport {
    pub holds: bool,
    pub max_violation: f64,
    pub tolerance: f64,
}

/// Checks that each link's transmit bit, conditioned on the rest of the
/// network, depends only on its neighbors.
///
/// For every link `i`, feasible assignments of the other links are grouped
/// by their restriction to `i`'s neighborhood; within a group the
/// conditional probability of `s_i = 1` must agree. Groups whose
/// conditioning event has probability zero are skipped.
pub fn mrf_check(
    dist: &StateDistribution,
    graph: &ContentionGraph,
    tolerance: f64,
) -> Result<MrfReport> {
    let feasible = graph.feasible_states()?;
    if dist.states() != feasible.as_slice() {
        return Err(Error::SupportMismatch);
    }
    let mut max_violation: f64 = 0.0;
    for i in 0..graph.len() {
        let bit = 1u64 << i;
        let neighborhood = graph.neighbors(i);
        // Joint mass of (s_i, assignment of the other links).
        let mut joint: HashMap<u64, [f64; 2]> = HashMap::new();
        for (state, p) in dist.iter() {
            let rest = state.mask() & !bit;
            let slot = joint.entry(rest).or_insert([0.0, 0.0]);
            slot[usize::from(state.get(i))] += p;
        }
        // Conditionals grouped by the neighborhood restriction.
        let mut groups: HashMap<u64, (f64, f64)> = HashMap::new();
        for (rest, [p0, p1]) in joint {
            let denom = p0 + p1;
            if denom <= 0.0 {
                continue;
            }
            let conditional = p1 / denom;
            let entry = groups
                .entry(rest & neighborhood)
                .or_insert((f64::INFINITY, f64::NEG_INFINITY));
            entry.0 = entry.0.min(conditional);
            entry.1 = entry.1.max(conditional);
        }
        for (_, (lo, hi)) in groups {
            if hi > lo {
                max_violation = max_violation.max(hi - lo);
            }
        }
    }
    Ok(MrfReport {
        holds: max_violation <= tolerance,
        max_violation,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig_graph() -> ContentionGraph {
        ContentionGraph::new(vec!["1", "2", "3", "4"], &[(0, 1), (1, 2), (1, 3), (2, 3)]).unwrap()
    }

    #[test]
    fn uniform_c_one_is_uniform_over_feasible_states() {
        let g = fig_graph();
        let dist = stationary_distribution(&g, &AccessParams::uniform(1.0, 4).unwrap()).unwrap();
        assert_eq!(dist.len(), 7);
        for (_, p) in dist.iter() {
            assert!((p - 1.0 / 7.0).abs() < 1e-15);
        }
    }

    #[test]
    fn heterogeneous_weights_match_direct_product() {
        // c = (1, 0.012, 0.024, 0.024); unnormalized weights over the
        // canonical order (0000, 1000, 0100, 0010, 0001, 1010, 1001) are
        // (1, 1, 83.33, 41.67, 41.67, 41.67, 41.67), total 252.
        let g = fig_graph();
        let params = AccessParams::per_link(vec![1.0, 0.012, 0.024, 0.024]).unwrap();
        let dist = stationary_distribution(&g, &params).unwrap();
        let want = [
            1.0,
            1.0,
            1.0 / 0.012,
            1.0 / 0.024,
            1.0 / 0.024,
            1.0 / 0.024,
            1.0 / 0.024,
        ];
        let total: f64 = want.iter().sum();
        assert!((total - 252.0).abs() < 1e-9);
        for (got, want) in dist.probs().iter().zip(want.iter()) {
            assert!((got - want / total).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_positive_overhead() {
        assert!(matches!(
            AccessParams::uniform(0.0, 2),
            Err(Error::NonPositiveOverhead { .. })
        ));
        assert!(matches!(
            AccessParams::per_link(vec![1.0, -0.5]),
            Err(Error::NonPositiveOverhead { index: 1, .. })
        ));
    }

    #[test]
    fn tiny_overhead_stays_normalized() {
        let g = fig_graph();
        let dist = stationary_distribution(&g, &AccessParams::uniform(1e-6, 4).unwrap()).unwrap();
        let total: f64 = dist.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        // Nearly all mass on the two maximum independent sets.
        let p_max: f64 = dist
            .iter()
            .filter(|(s, _)| s.count() == 2)
            .map(|(_, p)| p)
            .sum();
        assert!(p_max > 1.0 - 1e-5);
    }

    #[test]
    fn single_vertex_throughput() {
        let g = ContentionGraph::new(vec!["x"], &[]).unwrap();
        let dist = stationary_distribution(&g, &AccessParams::uniform(0.186, 1).unwrap()).unwrap();
        let x = link_throughputs(&dist, &g).unwrap();
        assert!((x.get(0) - 1.0 / 1.186).abs() < 1e-12);
    }

    #[test]
    fn limit_matches_share_estimate_exactly() {
        for g in [
            fig_graph(),
            ContentionGraph::new(vec!["a", "b", "c"], &[(0, 1), (0, 2), (1, 2)]).unwrap(),
        ] {
            let limit = boe_limit(&g).unwrap();
            let share = crate::boe::boe_throughput(&g).unwrap();
            assert_eq!(limit.values(), share.values());
        }
    }

    #[test]
    fn detailed_balance_ratio_is_inverse_overhead() {
        let g = fig_graph();
        let params = AccessParams::per_link(vec![0.7, 0.012, 0.3, 0.05]).unwrap();
        let dist = stationary_distribution(&g, &params).unwrap();
        for t in g.transition_graph().unwrap() {
            let ratio = dist.prob(t.right).unwrap() / dist.prob(t.left).unwrap();
            let want = 1.0 / params.get(t.link);
            assert!((ratio / want - 1.0).abs() < 1e-12, "link {}", t.link);
        }
    }

    #[test]
    fn mrf_holds_on_product_form_and_fails_when_perturbed() {
        let g = fig_graph();
        let dist = stationary_distribution(&g, &AccessParams::uniform(0.186, 4).unwrap()).unwrap();
        let report = mrf_check(&dist, &g, 1e-12).unwrap();
        assert!(report.holds, "violation {}", report.max_violation);

        // Doubling one two-transmitter state's mass breaks the factorization.
        let mut probs = dist.probs().to_vec();
        let idx_1010 = dist
            .states()
            .iter()
            .position(|s| s.to_string() == "1010")
            .unwrap();
        probs[idx_1010] *= 2.0;
        let perturbed = StateDistribution::new(dist.states().to_vec(), probs).unwrap();
        let report = mrf_check(&perturbed, &g, 1e-12).unwrap();
        assert!(!report.holds);
        assert!(report.max_violation > 1e-3);
    }

    #[test]
    fn support_mismatch_is_an_error() {
        let g = fig_graph();
        let other = ContentionGraph::new(vec!["a", "b"], &[(0, 1)]).unwrap();
        let dist =
            stationary_distribution(&other, &AccessParams::uniform(1.0, 2).unwrap()).unwrap();
        assert!(matches!(
            link_throughputs(&dist, &g),
            Err(Error::SupportMismatch)
        ));
    }
}
