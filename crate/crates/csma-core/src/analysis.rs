//! Cross-method comparison, starvation and island-state reports, and
//! per-link overhead calibration.

use crate::baseline::{solve_fixed_point, IeConfig};
use crate::boe::boe_throughput;
use crate::error::{Error, Result};
use crate::exact::{link_throughputs, stationary_distribution, AccessParams};
use crate::graph::{ContentionGraph, SystemState};
use crate::sim::{simulate_forward, SimConfig};
use crate::throughput::ThroughputVector;

/// Per-method link throughputs with deviations against the exact chain.
/// A method that fails contributes an error note instead of a column.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub labels: Vec<String>,
    pub exact: Option<Vec<f64>>,
    pub boe: Option<Vec<f64>>,
    pub simulation: Option<Vec<f64>>,
    pub baseline: Option<Vec<f64>>,
    pub boe_deviation: Option<f64>,
    pub simulation_deviation: Option<f64>,
    pub baseline_deviation: Option<f64>,
    pub baseline_converged: Option<bool>,
    pub errors: Vec<String>,
    pub overhead: Vec<f64>,
    pub seed: u64,
    pub events: u64,
}

fn max_abs_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Runs the four methods and tabulates deviations against the exact chain.
pub fn compare_methods(
    graph: &ContentionGraph,
    params: &AccessParams,
    sim_config: &SimConfig,
) -> ComparisonReport {
    let mut errors = Vec::new();

    let exact = match stationary_distribution(graph, params)
        .and_then(|dist| link_throughputs(&dist, graph))
    {
        Ok(tv) => Some(tv.into_vec()),
        Err(e) => {
            errors.push(format!("exact: {e}"));
            None
        }
    };

    let boe = match boe_throughput(graph) {
        Ok(tv) => Some(tv.into_vec()),
        Err(e) => {
            errors.push(format!("boe: {e}"));
            None
        }
    };

    let (simulation, events) = match simulate_forward(graph, sim_config) {
        Ok(run) => (
            Some(run.stats.link_throughputs(graph.len())),
            run.stats.event_count,
        ),
        Err(e) => {
            errors.push(format!("simulation: {e}"));
            (None, 0)
        }
    };

    let (baseline, baseline_converged) = if params.is_uniform() {
        match solve_fixed_point(graph, &IeConfig::new(params.get(0)), None) {
            Ok(solution) => {
                if !solution.converged {
                    errors.push(format!(
                        "baseline: did not converge (residual {:.3e})",
                        solution.residual_inf
                    ));
                }
                (Some(solution.x.into_vec()), Some(solution.converged))
            }
            Err(e) => {
                errors.push(format!("baseline: {e}"));
                (None, None)
            }
        }
    } else {
        errors.push("baseline: requires a uniform overhead".into());
        (None, None)
    };

    let deviation = |column: &Option<Vec<f64>>| match (column, &exact) {
        (Some(col), Some(ex)) => Some(max_abs_dev(col, ex)),
        _ => None,
    };

    ComparisonReport {
        labels: graph.labels().to_vec(),
        boe_deviation: deviation(&boe),
        simulation_deviation: deviation(&simulation),
        baseline_deviation: deviation(&baseline),
        exact,
        boe,
        simulation,
        baseline,
        baseline_converged,
        errors,
        overhead: params.values().to_vec(),
        seed: sim_config.seed,
        events,
    }
}

/// Labels of links whose normalized throughput falls below `threshold`.
pub fn starvation_report(
    tv: &ThroughputVector,
    threshold: f64,
    graph: &ContentionGraph,
) -> Result<Vec<String>> {
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::InvalidInput(format!(
            "starvation threshold {threshold} must lie in [0, 1)"
        )));
    }
    if tv.len() != graph.len() {
        return Err(Error::InvalidInput(
            "throughput vector length mismatch".into(),
        ));
    }
    Ok(graph
        .labels()
        .iter()
        .enumerate()
        .filter(|&(i, _)| tv.get(i) < threshold)
        .map(|(_, label)| label.clone())
        .collect())
}

/// Default Hamming-distance bar for flagging island states.
pub const DEFAULT_ISLAND_BAR: u32 = 4;

/// Pairwise Hamming distances among the maximum independent sets. When some
/// set's nearest other set is far away, moving between them requires many
/// coordinated state changes and happens rarely at small overhead — a
/// temporal-starvation risk even with fair long-run averages.
#[derive(Debug, Clone, PartialEq)]
pub struct IslandReport {
    pub mis: Vec<SystemState>,
    pub distances: Vec<Vec<u32>>,
    /// Largest distance from any set to its nearest other set (0 with a
    /// single set).
    pub max_min_distance: u32,
    pub flagged: bool,
    pub bar: u32,
}

pub fn island_report(graph: &ContentionGraph, bar: u32) -> Result<IslandReport> {
    let mis = graph.maximum_independent_sets()?;
    let n = mis.len();
    let mut distances = vec![vec![0u32; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = mis[i].hamming(&mis[j]);
            distances[i][j] = d;
            distances[j][i] = d;
        }
    }
    let max_min_distance = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| distances[i][j])
                .min()
                .unwrap_or(0)
        })
        .max()
        .unwrap_or(0);
    Ok(IslandReport {
        mis,
        distances,
        max_min_distance,
        flagged: max_min_distance >= bar,
        bar,
    })
}

/// Result of the per-link overhead search.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub params: AccessParams,
    pub achieved: ThroughputVector,
    pub residual_inf: f64,
    pub converged: bool,
    pub evaluations: u64,
}

/// Searches per-link overheads `c_i ≥ c_floor` whose exact link throughputs
/// approach `target` in the max norm, keeping the smallest overhead at the
/// floor. Best-effort: the achieved residual is reported honestly.
pub fn calibrate_c(
    graph: &ContentionGraph,
    target: &[f64],
    c_floor: f64,
) -> Result<CalibrationResult> {
    if target.len() != graph.len() {
        return Err(Error::InvalidInput("target vector length mismatch".into()));
    }
    if !(c_floor.is_finite() && c_floor > 0.0) {
        return Err(Error::InvalidInput(format!(
            "overhead floor {c_floor} must be positive"
        )));
    }
    if target
        .iter()
        .any(|&t| !(t.is_finite() && t > 0.0) || t >= 1.0)
    {
        return Err(Error::InvalidInput(
            "target throughputs must lie in (0, 1)".into(),
        ));
    }

    let links = graph.len();
    let mut evaluations = 0u64;
    let mut objective = |c: &[f64]| -> Result<(f64, Vec<f64>)> {
        evaluations += 1;
        let params = AccessParams::per_link(c.to_vec())?;
        let x = link_throughputs(&stationary_distribution(graph, &params)?, graph)?;
        let dev = x
            .values()
            .iter()
            .zip(target)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Ok((dev, x.into_vec()))
    };

    let mut c = vec![c_floor; links];
    let (mut best, mut achieved) = objective(&c)?;

    // Multiplicative ratio steps (throughput falls as the overhead grows),
    // then a coordinate polish over a factor ladder.
    for _ in 0..240 {
        let mut candidate = c.clone();
        for i in 0..links {
            let ratio = (achieved[i] / target[i]).clamp(0.05, 20.0);
            candidate[i] = (c[i] * ratio.powf(0.7)).max(c_floor);
        }
        let (dev, x) = objective(&candidate)?;
        if dev < best - 1e-15 {
            best = dev;
            achieved = x;
            c = candidate;
        } else {
            break;
        }
    }

    let ladder = [4.0, 2.0, std::f64::consts::SQRT_2, 2f64.powf(0.25), 1.05];
    let mut converged = false;
    for _ in 0..200 {
        let mut improved = false;
        for i in 0..links {
            for &factor in &ladder {
                for proposal in [c[i] * factor, c[i] / factor] {
                    let proposal = proposal.max(c_floor);
                    if proposal == c[i] {
                        continue;
                    }
                    let mut candidate = c.clone();
                    candidate[i] = proposal;
                    let (dev, x) = objective(&candidate)?;
                    if dev < best - 1e-15 {
                        best = dev;
                        achieved = x;
                        c = candidate;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            converged = true;
            break;
        }
    }

    // Keep the smallest overhead pinned to the floor.
    let min_c = c.iter().copied().fold(f64::INFINITY, f64::min);
    if min_c > c_floor {
        let scaled: Vec<f64> = c.iter().map(|v| v * c_floor / min_c).collect();
        let (dev, x) = objective(&scaled)?;
        c = scaled;
        best = dev;
        achieved = x;
    }

    Ok(CalibrationResult {
        params: AccessParams::per_link(c)?,
        achieved: ThroughputVector::new(achieved),
        residual_inf: best,
        converged,
        evaluations,
    })
}
