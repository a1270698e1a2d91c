//! Stage-expanded continuous-time chain.
//!
//! Countdown and transmission times built from exponential stages (Erlang
//! durations, or mixtures over the stage count) make the full system a
//! finite CTMC: per link the state carries its transmit bit, the drawn
//! stage count and the remaining stage. A frozen link's stage simply holds
//! while any neighbor transmits. Solving the stationary linear system and
//! marginalizing over the stage detail must reproduce the product-form
//! distribution at the matched overhead — insensitivity made executable.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exact::StateDistribution;
use crate::graph::{ContentionGraph, SystemState};

/// Default cap on the expanded state-space size (dense solve).
pub const DEFAULT_EXPANDED_CAP: usize = 2048;

/// How the number of exponential stages in a duration is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum StageLaw {
    /// Every duration uses exactly this many stages.
    Fixed(u32),
    /// The stage count is drawn from a finite law `(count, probability)`.
    Mixture(Vec<(u32, f64)>),
}

impl StageLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            StageLaw::Fixed(0) => Err(Error::InvalidStagedSpec(
                "stage count must be at least 1".into(),
            )),
            StageLaw::Fixed(_) => Ok(()),
            StageLaw::Mixture(parts) => {
                if parts.is_empty() {
                    return Err(Error::InvalidStagedSpec("empty stage mixture".into()));
                }
                let mut total = 0.0;
                for &(count, p) in parts {
                    if count == 0 {
                        return Err(Error::InvalidStagedSpec(
                            "stage count must be at least 1".into(),
                        ));
                    }
                    if !(p.is_finite() && p > 0.0) {
                        return Err(Error::InvalidStagedSpec(format!(
                            "stage probability {p} must be positive"
                        )));
                    }
                    total += p;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidStagedSpec(format!(
                        "stage probabilities sum to {total}, expected 1"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Support as `(stage count, probability)` pairs.
    pub fn support(&self) -> Vec<(u32, f64)> {
        match self {
            StageLaw::Fixed(n) => vec![(*n, 1.0)],
            StageLaw::Mixture(parts) => parts.clone(),
        }
    }

    /// Expected stage count.
    pub fn mean(&self) -> f64 {
        self.support().iter().map(|&(n, p)| n as f64 * p).sum()
    }
}

/// Stage structure of the countdown and transmission laws.
#[derive(Debug, Clone, PartialEq)]
pub struct StagedSpec {
    pub cd_law: StageLaw,
    pub tx_law: StageLaw,
    /// Mean of one countdown stage.
    pub cd_stage_mean: f64,
    /// Mean of one transmission stage.
    pub tx_stage_mean: f64,
}

impl StagedSpec {
    pub fn new(
        cd_law: StageLaw,
        tx_law: StageLaw,
        cd_stage_mean: f64,
        tx_stage_mean: f64,
    ) -> Result<Self> {
        let spec = Self {
            cd_law,
            tx_law,
            cd_stage_mean,
            tx_stage_mean,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.cd_law.validate()?;
        self.tx_law.validate()?;
        for (name, v) in [
            ("countdown", self.cd_stage_mean),
            ("transmission", self.tx_stage_mean),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidStagedSpec(format!(
                    "{name} stage mean {v} must be positive"
                )));
            }
        }
        Ok(())
    }

    /// Mean countdown time.
    pub fn cd_mean(&self) -> f64 {
        self.cd_stage_mean * self.cd_law.mean()
    }

    /// Mean transmission time.
    pub fn tx_mean(&self) -> f64 {
        self.tx_stage_mean * self.tx_law.mean()
    }

    /// Countdown overhead implied by the stage structure.
    pub fn overhead(&self) -> f64 {
        self.cd_mean() / self.tx_mean()
    }
}

/// Per-link component of an expanded state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LinkStage {
    /// Counting down (active or frozen): `remaining` of `drawn` stages left.
    Countdown { drawn: u32, remaining: u32 },
    /// Transmitting: `remaining` of `drawn` stages left.
    Transmitting { drawn: u32, remaining: u32 },
}

/// One state of the stage-expanded chain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExpandedState {
    links: Vec<LinkStage>,
}

impl ExpandedState {
    pub fn links(&self) -> &[LinkStage] {
        &self.links
    }

    /// Transmit-bit projection of this state.
    pub fn system_state(&self) -> SystemState {
        let mut mask = 0u64;
        for (i, stage) in self.links.iter().enumerate() {
            if matches!(stage, LinkStage::Transmitting { .. }) {
                mask |= 1 << i;
            }
        }
        SystemState::from_mask(mask, self.links.len())
    }

    pub fn transmit_count(&self) -> u32 {
        self.links
            .iter()
            .filter(|s| matches!(s, LinkStage::Transmitting { .. }))
            .count() as u32
    }
}

impl std::fmt::Display for ExpandedState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, stage) in self.links.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            match stage {
                LinkStage::Countdown { drawn, remaining } => write!(f, "c{remaining}/{drawn}")?,
                LinkStage::Transmitting { drawn, remaining } => write!(f, "t{remaining}/{drawn}")?,
            }
        }
        Ok(())
    }
}

/// Result of the stationary solve of the expanded chain.
#[derive(Debug, Clone)]
pub struct StagedResult {
    pub states: Vec<ExpandedState>,
    pub probs: Vec<f64>,
    /// Marginal over the transmit bits, aligned to the graph's canonical
    /// feasible-state order.
    pub marginal: StateDistribution,
    /// Max absolute entry of `πQ` plus the normalization defect.
    pub residual: f64,
    pub used_power_iteration: bool,
}

impl StagedResult {
    pub fn prob(&self, state: &ExpandedState) -> Option<f64> {
        self.states
            .iter()
            .position(|s| s == state)
            .map(|i| self.probs[i])
    }
}

/// Builds and solves the stage-expanded chain under the default cap.
pub fn staged_stationary(graph: &ContentionGraph, spec: &StagedSpec) -> Result<StagedResult> {
    staged_stationary_capped(graph, spec, DEFAULT_EXPANDED_CAP)
}

pub fn staged_stationary_capped(
    graph: &ContentionGraph,
    spec: &StagedSpec,
    cap: usize,
) -> Result<StagedResult> {
    spec.validate()?;
    let feasible = graph.feasible_states()?;
    let states = enumerate_expanded(graph, spec, &feasible, cap)?;
    let index: HashMap<&ExpandedState, usize> =
        states.iter().enumerate().map(|(i, s)| (s, i)).collect();

    let n = states.len();
    let cd_rate = 1.0 / spec.cd_stage_mean;
    let tx_rate = 1.0 / spec.tx_stage_mean;
    let cd_support = spec.cd_law.support();
    let tx_support = spec.tx_law.support();

    let mut q = DMatrix::<f64>::zeros(n, n);
    for (row, state) in states.iter().enumerate() {
        let mask = state.system_state().mask();
        let mut total_out = 0.0;
        let mut push = |target: ExpandedState, rate: f64, total_out: &mut f64| {
            let col = *index.get(&target).expect("transition target enumerated");
            q[(row, col)] += rate;
            *total_out += rate;
        };
        for (i, stage) in state.links.iter().enumerate() {
            match *stage {
                LinkStage::Transmitting { drawn, remaining } => {
                    if remaining >= 2 {
                        let mut next = state.clone();
                        next.links[i] = LinkStage::Transmitting {
                            drawn,
                            remaining: remaining - 1,
                        };
                        push(next, tx_rate, &mut total_out);
                    } else {
                        // Transmission ends; a fresh countdown stage count is drawn.
                        for &(y, p) in &cd_support {
                            let mut next = state.clone();
                            next.links[i] = LinkStage::Countdown {
                                drawn: y,
                                remaining: y,
                            };
                            push(next, p * tx_rate, &mut total_out);
                        }
                    }
                }
                LinkStage::Countdown { drawn, remaining } => {
                    // Frozen while any neighbor transmits: no transitions.
                    if graph.neighbors(i) & mask != 0 {
                        continue;
                    }
                    if remaining >= 2 {
                        let mut next = state.clone();
                        next.links[i] = LinkStage::Countdown {
                            drawn,
                            remaining: remaining - 1,
                        };
                        push(next, cd_rate, &mut total_out);
                    } else {
                        // Countdown ends; a fresh transmission stage count is drawn.
                        for &(z, p) in &tx_support {
                            let mut next = state.clone();
                            next.links[i] = LinkStage::Transmitting {
                                drawn: z,
                                remaining: z,
                            };
                            push(next, p * cd_rate, &mut total_out);
                        }
                    }
                }
            }
        }
        q[(row, row)] -= total_out;
    }

    let (probs, used_power_iteration) = solve_stationary(&q)?;
    let residual = stationary_residual(&q, &probs);
    if residual > 1e-8 {
        return Err(Error::SolveFailed { residual });
    }

    // Marginal over transmit bits in canonical feasible-state order.
    let mut marginal_probs = vec![0.0; feasible.len()];
    let feasible_index: HashMap<u64, usize> = feasible
        .iter()
        .enumerate()
        .map(|(i, s)| (s.mask(), i))
        .collect();
    for (state, &p) in states.iter().zip(&probs) {
        marginal_probs[feasible_index[&state.system_state().mask()]] += p;
    }
    let marginal = StateDistribution::new(feasible, marginal_probs)?;

    Ok(StagedResult {
        states,
        probs,
        marginal,
        residual,
        used_power_iteration,
    })
}

fn enumerate_expanded(
    graph: &ContentionGraph,
    spec: &StagedSpec,
    feasible: &[SystemState],
    cap: usize,
) -> Result<Vec<ExpandedState>> {
    let cd_support = spec.cd_law.support();
    let tx_support = spec.tx_law.support();
    let mut link_options: Vec<[Vec<LinkStage>; 2]> = Vec::with_capacity(graph.len());
    for _ in 0..graph.len() {
        let mut off = Vec::new();
        for &(y, _) in &cd_support {
            for remaining in 1..=y {
                off.push(LinkStage::Countdown {
                    drawn: y,
                    remaining,
                });
            }
        }
        let mut on = Vec::new();
        for &(z, _) in &tx_support {
            for remaining in 1..=z {
                on.push(LinkStage::Transmitting {
                    drawn: z,
                    remaining,
                });
            }
        }
        link_options.push([off, on]);
    }

    let mut states = Vec::new();
    let mut current = Vec::with_capacity(graph.len());
    for s in feasible {
        build_product(s, 0, &link_options, &mut current, &mut states, cap)?;
    }
    Ok(states)
}

fn build_product(
    s: &SystemState,
    link: usize,
    options: &[[Vec<LinkStage>; 2]],
    current: &mut Vec<LinkStage>,
    out: &mut Vec<ExpandedState>,
    cap: usize,
) -> Result<()> {
    if link == options.len() {
        if out.len() >= cap {
            return Err(Error::TooLarge { cap });
        }
        out.push(ExpandedState {
            links: current.clone(),
        });
        return Ok(());
    }
    for stage in &options[link][usize::from(s.get(link))] {
        current.push(*stage);
        build_product(s, link + 1, options, current, out, cap)?;
        current.pop();
    }
    Ok(())
}

/// Solves `πQ = 0`, `Σπ = 1` by LU with one balance equation replaced by
/// normalization; falls back to power iteration on the uniformized chain
/// when the direct residual exceeds `1e-10`.
fn solve_stationary(q: &DMatrix<f64>) -> Result<(Vec<f64>, bool)> {
    let n = q.nrows();
    let mut a = q.transpose();
    for col in 0..n {
        a[(n - 1, col)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;

    let direct = a
        .lu()
        .solve(&b)
        .map(|v| v.iter().copied().collect::<Vec<f64>>());
    if let Some(pi) = direct {
        if pi.iter().all(|p| *p >= -1e-12) {
            let total: f64 = pi.iter().sum();
            let pi: Vec<f64> = pi.iter().map(|p| p.max(0.0) / total).collect();
            if stationary_residual(q, &pi) <= 1e-10 {
                return Ok((pi, false));
            }
        }
    }

    // Uniformized power iteration: π ← π (I + Q/Λ).
    let lambda = (0..n).map(|i| -q[(i, i)]).fold(0.0f64, f64::max) * 1.05 + 1e-12;
    let mut pi = DVector::<f64>::from_element(n, 1.0 / n as f64);
    let p = DMatrix::<f64>::identity(n, n) + q.transpose() / lambda;
    for _ in 0..2_000_000 {
        let next = &p * &pi;
        let delta = (&next - &pi).amax();
        pi = next;
        let total: f64 = pi.iter().sum();
        pi /= total;
        if delta < 1e-15 {
            break;
        }
    }
    let pi: Vec<f64> = pi.iter().copied().collect();
    let residual = stationary_residual(q, &pi);
    if residual > 1e-8 {
        return Err(Error::SolveFailed { residual });
    }
    Ok((pi, true))
}

fn stationary_residual(q: &DMatrix<f64>, pi: &[f64]) -> f64 {
    let n = q.nrows();
    let mut worst: f64 = (pi.iter().sum::<f64>() - 1.0).abs();
    for col in 0..n {
        let mut flow = 0.0;
        for row in 0..n {
            flow += pi[row] * q[(row, col)];
        }
        worst = worst.max(flow.abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{stationary_distribution, AccessParams};

    fn fig_graph() -> ContentionGraph {
        ContentionGraph::new(vec!["1", "2", "3", "4"], &[(0, 1), (1, 2), (1, 3), (2, 3)]).unwrap()
    }

    #[test]
    fn single_stage_reduces_to_product_form() {
        let g = fig_graph();
        let spec = StagedSpec::new(StageLaw::Fixed(1), StageLaw::Fixed(1), 0.186, 1.0).unwrap();
        let result = staged_stationary(&g, &spec).unwrap();
        assert_eq!(result.states.len(), 7);
        let exact = stationary_distribution(&g, &AccessParams::uniform(0.186, 4).unwrap()).unwrap();
        for (s, p) in exact.iter() {
            let got = result.marginal.prob(s).unwrap();
            assert!((got - p).abs() < 1e-12, "{s}: {got} vs {p}");
        }
    }

    #[test]
    fn two_stage_marginal_matches_product_form() {
        let g = fig_graph();
        let spec = StagedSpec::new(StageLaw::Fixed(2), StageLaw::Fixed(2), 0.093, 0.5).unwrap();
        assert!((spec.overhead() - 0.186).abs() < 1e-12);
        let result = staged_stationary(&g, &spec).unwrap();
        assert_eq!(result.states.len(), 112);
        assert!(result.residual < 1e-10);
        let exact = stationary_distribution(&g, &AccessParams::uniform(0.186, 4).unwrap()).unwrap();
        for (s, p) in exact.iter() {
            let got = result.marginal.prob(s).unwrap();
            assert!((got - p).abs() < 1e-10, "{s}: {got} vs {p}");
        }
    }

    #[test]
    fn mixture_closed_form_per_expanded_state() {
        // Stage-count mixture over the countdown: each expanded state's
        // probability factorizes over the drawn counts.
        let g = fig_graph();
        let spec = StagedSpec::new(
            StageLaw::Mixture(vec![(1, 0.5), (3, 0.5)]),
            StageLaw::Fixed(1),
            0.093,
            1.0,
        )
        .unwrap();
        assert!((spec.overhead() - 0.186).abs() < 1e-12);
        let result = staged_stationary(&g, &spec).unwrap();
        let exact = stationary_distribution(&g, &AccessParams::uniform(0.186, 4).unwrap()).unwrap();
        let b = exact.normalizer();
        let e_y = spec.cd_law.mean();
        let ratio = spec.tx_stage_mean / spec.cd_stage_mean;
        let cd_support = spec.cd_law.support();
        let cd_prob = |drawn: u32| {
            cd_support
                .iter()
                .find(|(n, _)| *n == drawn)
                .map(|(_, p)| *p)
                .expect("drawn count in support")
        };
        for (state, &p) in result.states.iter().zip(&result.probs) {
            let t = state.transmit_count();
            let mut want = b / e_y.powi(g.len() as i32) * ratio.powi(t as i32);
            for stage in state.links() {
                match stage {
                    LinkStage::Countdown { drawn, .. } => want *= cd_prob(*drawn),
                    LinkStage::Transmitting { .. } => {}
                }
            }
            assert!((p - want).abs() < 1e-10, "{state}: {p} vs {want}");
        }
    }

    #[test]
    fn cap_is_enforced() {
        let g = fig_graph();
        let spec = StagedSpec::new(StageLaw::Fixed(4), StageLaw::Fixed(4), 0.0465, 0.25).unwrap();
        assert!(matches!(
            staged_stationary_capped(&g, &spec, 100),
            Err(Error::TooLarge { cap: 100 })
        ));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(StagedSpec::new(StageLaw::Fixed(0), StageLaw::Fixed(1), 1.0, 1.0).is_err());
        assert!(StagedSpec::new(StageLaw::Fixed(1), StageLaw::Fixed(1), 0.0, 1.0).is_err());
        assert!(StageLaw::Mixture(vec![(1, 0.4), (3, 0.4)])
            .validate()
            .is_err());
        assert!(StageLaw::Mixture(vec![]).validate().is_err());
    }
}
