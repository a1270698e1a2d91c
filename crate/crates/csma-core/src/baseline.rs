//! Inclusion–exclusion airtime-balance baseline.
//!
//! Each link balances the airtime it observes: its own countdown and
//! transmission plus its neighbors' transmissions fill the window, except
//! that two mutually non-adjacent neighbors may transmit concurrently.
//! That pairwise overlap is approximated as `x_j x_k / (1 - x_i)`, the
//! product of the neighbors' airtimes confined to the fraction where the
//! observer is silent. Per observer `i`:
//!
//! `c x_i + x_i + Σ_{j∈N_i} x_j − Σ_{j,k∈N_i, j≁k} x_j x_k / (1 − x_i) = 1`
//!
//! The system is solved by damped fixed-point iteration. Higher-order
//! intersection terms are dropped; the truncation keeps the method a
//! comparison baseline rather than an exact solver.

use crate::error::{Error, Result};
use crate::graph::ContentionGraph;
use crate::throughput::ThroughputVector;

/// Solver parameters for the airtime-balance system (uniform overhead).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IeConfig {
    pub c: f64,
    pub damping: f64,
    pub tol: f64,
    pub max_iter: u32,
}

impl IeConfig {
    pub fn new(c: f64) -> Self {
        Self {
            c,
            damping: 0.5,
            tol: 1e-10,
            max_iter: 100_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::InvalidInput(format!(
                "overhead {} must be positive",
                self.c
            )));
        }
        if !(self.damping.is_finite() && self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "damping {} must lie in (0, 1]",
                self.damping
            )));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "tolerance {} must be positive",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Non-adjacent unordered neighbor pairs of each observer.
fn overlap_pairs(graph: &ContentionGraph, observer: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    let nbrs: Vec<usize> = (0..graph.len())
        .filter(|&j| graph.adjacent(observer, j))
        .collect();
    for (a, &j) in nbrs.iter().enumerate() {
        for &k in &nbrs[a + 1..] {
            if !graph.adjacent(j, k) {
                pairs.push((j, k));
            }
        }
    }
    pairs
}

/// Residual of the airtime-balance equation at `x`, one entry per observer.
pub fn ie_residual(graph: &ContentionGraph, x: &[f64], config: &IeConfig) -> Result<Vec<f64>> {
    config.validate()?;
    if x.len() != graph.len() {
        return Err(Error::InvalidInput(format!(
            "point has {} entries, graph has {} links",
            x.len(),
            graph.len()
        )));
    }
    for (index, &value) in x.iter().enumerate() {
        if !(0.0..1.0).contains(&value) {
            return Err(Error::InvalidPoint { index, value });
        }
    }
    let mut residuals = Vec::with_capacity(graph.len());
    for i in 0..graph.len() {
        let neighbor_sum: f64 = (0..graph.len())
            .filter(|&j| graph.adjacent(i, j))
            .map(|j| x[j])
            .sum();
        let overlap: f64 = overlap_pairs(graph, i)
            .iter()
            .map(|&(j, k)| x[j] * x[k] / (1.0 - x[i]))
            .sum();
        residuals.push(config.c * x[i] + x[i] + neighbor_sum - overlap - 1.0);
    }
    Ok(residuals)
}

/// Outcome of the damped fixed-point iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointSolution {
    pub x: ThroughputVector,
    pub iterations: u32,
    pub converged: bool,
    pub residual_inf: f64,
    pub config: IeConfig,
}

/// Iterates `x_i ← (1 − Σ_{j∈N_i} x_j + overlap_i) / (1 + c)` under damping
/// until the residual drops below tolerance. Non-convergence is reported,
/// never raised.
pub fn solve_fixed_point(
    graph: &ContentionGraph,
    config: &IeConfig,
    start: Option<&[f64]>,
) -> Result<FixedPointSolution> {
    config.validate()?;
    let links = graph.len();
    let max_degree = (0..links)
        .map(|i| graph.neighbors(i).count_ones())
        .max()
        .unwrap_or(0) as f64;
    let mut x: Vec<f64> = match start {
        Some(x0) => {
            if x0.len() != links {
                return Err(Error::InvalidInput(format!(
                    "start point has {} entries, graph has {links} links",
                    x0.len()
                )));
            }
            x0.to_vec()
        }
        None => vec![1.0 / (1.0 + config.c + max_degree); links],
    };
    for (index, &value) in x.iter().enumerate() {
        if !(0.0..1.0).contains(&value) {
            return Err(Error::InvalidPoint { index, value });
        }
    }

    let pairs: Vec<Vec<(usize, usize)>> = (0..links).map(|i| overlap_pairs(graph, i)).collect();
    let mut residual_inf = f64::INFINITY;
    let mut iterations = 0;
    while iterations < config.max_iter {
        iterations += 1;
        let mut next = x.clone();
        for i in 0..links {
            let neighbor_sum: f64 = (0..links)
                .filter(|&j| graph.adjacent(i, j))
                .map(|j| x[j])
                .sum();
            let overlap: f64 = pairs[i]
                .iter()
                .map(|&(j, k)| x[j] * x[k] / (1.0 - x[i]))
                .sum();
            let update = (1.0 - neighbor_sum + overlap) / (1.0 + config.c);
            let candidate = x[i] + config.damping * (update - x[i]);
            next[i] = candidate.clamp(0.0, 1.0 - 1e-12);
        }
        x = next;
        residual_inf = ie_residual(graph, &x, config)?
            .iter()
            .map(|r| r.abs())
            .fold(0.0, f64::max);
        if residual_inf < config.tol {
            break;
        }
    }

    Ok(FixedPointSolution {
        x: ThroughputVector::new(x),
        iterations,
        converged: residual_inf < config.tol,
        residual_inf,
        config: *config,
    })
}
