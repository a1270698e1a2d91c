//! Event-driven simulation of interacting on-off processes with
//! freeze/resume countdown, plus the reverse-time replay and the
//! empirical estimators built on a run's statistics.
//!
//! A link is either transmitting, actively counting down, or frozen
//! (holding its remaining countdown while a neighbor transmits). When a
//! countdown reaches zero the link transmits for a fresh drawn duration
//! and freezes every actively-counting neighbor; when a transmission ends
//! the link draws a fresh countdown and neighbors whose last transmitting
//! neighbor just stopped resume from their saved remaining countdown.
//!
//! Time is kept in integer ticks of 2^-32 time units. Drawn durations are
//! quantized once, at generation; every later addition and subtraction is
//! exact, so running the event logic backward from the end snapshot with
//! the reversed draw sequences reproduces the forward trace tick for tick.
//! (The quantization error, at most 2^-33 of a time unit per draw, is far
//! below any statistical tolerance used here.)
//!
//! Simultaneous events are possible only for discrete duration laws; they
//! are broken by ascending link index (descending in the reverse walk,
//! which restores the forward order) and counted in the statistics.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dist::DurationDistribution;
use crate::error::{Error, Result};
use crate::graph::ContentionGraph;

/// Ticks per time unit (2^32).
pub const TICKS_PER_UNIT: f64 = 4_294_967_296.0;

pub fn ticks_to_time(ticks: u64) -> f64 {
    ticks as f64 / TICKS_PER_UNIT
}

pub fn time_to_ticks(time: f64) -> u64 {
    (time * TICKS_PER_UNIT).round() as u64
}

fn duration_ticks(time: f64) -> u64 {
    time_to_ticks(time).max(1)
}

/// When a run stops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Process exactly this many events.
    MaxEvents(u64),
    /// Process every event strictly before this time.
    MaxTime(f64),
}

/// How much of the run to discard before accumulating statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WarmupRule {
    /// At least `10 * links` transitions and 1% of the stop budget.
    Auto,
    /// Discard exactly this many events.
    Events(u64),
}

/// Configuration of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub countdown: DurationDistribution,
    pub transmission: DurationDistribution,
    pub stop: StopRule,
    pub seed: u64,
    pub warmup: WarmupRule,
    /// Record the full event trace (needed for the reverse-replay check).
    pub record_trace: bool,
    /// Cap on retained residual samples per link and category.
    pub residual_cap: usize,
}

impl SimConfig {
    pub fn new(
        countdown: DurationDistribution,
        transmission: DurationDistribution,
        stop: StopRule,
        seed: u64,
    ) -> Self {
        Self {
            countdown,
            transmission,
            stop,
            seed,
            warmup: WarmupRule::Auto,
            record_trace: false,
            residual_cap: 250_000,
        }
    }
}

/// One state flip of the trace: link `link` turned on or off at `tick`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEvent {
    pub tick: u64,
    pub link: usize,
    pub turned_on: bool,
}

/// Residual-time samples collected for one link at other links' transition
/// epochs, in time units. `unfreeze` additionally tags the remaining
/// countdown observed at the epochs where the link left the frozen state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResidualSamples {
    pub countdown: Vec<f64>,
    pub transmission: Vec<f64>,
    pub unfreeze: Vec<f64>,
}

/// Accumulated statistics of a run (after warm-up).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStats {
    /// Observation window length in time units.
    pub total_time: f64,
    /// Events processed over the whole run, including warm-up.
    pub event_count: u64,
    /// Events that shared their tick with another pending event.
    pub tie_events: u64,
    /// Time spent in each visited state, keyed by state mask.
    pub occupancy: HashMap<u64, f64>,
    /// Directed transition counts `n_{ss'}`, keyed by `(from, to)` masks.
    pub transition_counts: HashMap<(u64, u64), u64>,
    pub residuals: Vec<ResidualSamples>,
    /// Time discarded before the observation window.
    pub warmup_time: f64,
}

impl TraceStats {
    /// Fraction of the observation window spent with each link on.
    pub fn link_throughputs(&self, links: usize) -> Vec<f64> {
        let mut x = vec![0.0; links];
        if self.total_time <= 0.0 {
            return x;
        }
        for (&mask, &time) in &self.occupancy {
            for (i, slot) in x.iter_mut().enumerate() {
                if mask & (1 << i) != 0 {
                    *slot += time;
                }
            }
        }
        for slot in &mut x {
            *slot /= self.total_time;
        }
        x
    }

    pub fn occupancy_fraction(&self, mask: u64) -> f64 {
        if self.total_time <= 0.0 {
            return 0.0;
        }
        self.occupancy.get(&mask).copied().unwrap_or(0.0) / self.total_time
    }

    /// Pools two runs' statistics (independent seeds of the same setup).
    pub fn merge(&mut self, other: &TraceStats) {
        self.total_time += other.total_time;
        self.event_count += other.event_count;
        self.tie_events += other.tie_events;
        self.warmup_time += other.warmup_time;
        for (&k, &v) in &other.occupancy {
            *self.occupancy.entry(k).or_default() += v;
        }
        for (&k, &v) in &other.transition_counts {
            *self.transition_counts.entry(k).or_default() += v;
        }
        if self.residuals.len() == other.residuals.len() {
            for (a, b) in self.residuals.iter_mut().zip(&other.residuals) {
                a.countdown.extend_from_slice(&b.countdown);
                a.transmission.extend_from_slice(&b.transmission);
                a.unfreeze.extend_from_slice(&b.unfreeze);
            }
        }
    }
}

/// A link's runtime at a snapshot instant. Remaining times are in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkRuntime {
    Transmitting { remaining: u64 },
    ActiveCountdown { remaining: u64 },
    FrozenCountdown { remaining: u64 },
}

impl LinkRuntime {
    pub fn remaining_time(&self) -> f64 {
        match self {
            LinkRuntime::Transmitting { remaining }
            | LinkRuntime::ActiveCountdown { remaining }
            | LinkRuntime::FrozenCountdown { remaining } => ticks_to_time(*remaining),
        }
    }

    pub fn is_transmitting(&self) -> bool {
        matches!(self, LinkRuntime::Transmitting { .. })
    }
}

/// A completed forward run: statistics, the end snapshot, and the per-link
/// draw sequences in the order they were consumed (ticks).
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardRun {
    pub stats: TraceStats,
    pub snapshot: Vec<LinkRuntime>,
    pub end_tick: u64,
    pub draws: Vec<Vec<u64>>,
    pub trace: Option<Vec<TraceEvent>>,
}

impl ForwardRun {
    pub fn end_time(&self) -> f64 {
        ticks_to_time(self.end_tick)
    }

    /// Per-link draw sequences reversed, ready for [`simulate_reverse`].
    pub fn reversed_draws(&self) -> Vec<Vec<u64>> {
        self.draws
            .iter()
            .map(|seq| seq.iter().rev().copied().collect())
            .collect()
    }
}

/// A completed reverse replay. The trace is in forward (ascending) order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReverseRun {
    pub stats: TraceStats,
    pub trace: Vec<TraceEvent>,
}

#[derive(Debug, Clone, Copy)]
enum Phase {
    Tx { end: u64 },
    Active { end: u64 },
    Frozen { remaining: u64 },
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn link_rng(seed: u64, link: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(link as u64 + 1)))
}

/// Runs the forward event-driven simulation.
pub fn simulate_forward(graph: &ContentionGraph, config: &SimConfig) -> Result<ForwardRun> {
    config.countdown.validate()?;
    config.transmission.validate()?;
    let links = graph.len();
    let horizon = match config.stop {
        StopRule::MaxTime(t) => {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::InvalidInput(format!("bad time horizon {t}")));
            }
            Some(time_to_ticks(t))
        }
        StopRule::MaxEvents(0) => {
            return Err(Error::InvalidInput("event budget must be positive".into()))
        }
        StopRule::MaxEvents(_) => None,
    };

    let mut rngs: Vec<ChaCha8Rng> = (0..links).map(|i| link_rng(config.seed, i)).collect();
    let mut draws: Vec<Vec<u64>> = vec![Vec::new(); links];
    let mut phases: Vec<Phase> = Vec::with_capacity(links);
    for i in 0..links {
        let d = duration_ticks(config.countdown.sample(&mut rngs[i]));
        draws[i].push(d);
        phases.push(Phase::Active { end: d });
    }

    let mut state: u64 = 0;
    let mut trace: Vec<TraceEvent> = Vec::new();
    let mut occupancy: HashMap<u64, u128> = HashMap::new();
    let mut transitions: HashMap<(u64, u64), u64> = HashMap::new();
    let mut residual_ticks: Vec<[Vec<u64>; 3]> = vec![Default::default(); links];
    let mut events: u64 = 0;
    let mut ties: u64 = 0;
    let mut warmed = false;
    let mut stats_start: u64 = 0;
    let mut last: u64 = 0;
    let end_tick;

    let min_transitions = 10 * links as u64;
    loop {
        // Next event: smallest scheduled tick, lowest link index on ties.
        let mut best: Option<(u64, usize)> = None;
        for (i, phase) in phases.iter().enumerate() {
            let end = match phase {
                Phase::Tx { end } | Phase::Active { end } => *end,
                Phase::Frozen { .. } => continue,
            };
            if best.is_none_or(|(t, _)| end < t) {
                best = Some((end, i));
            }
        }
        let (t, i) = best.expect("at least one link is always scheduled");
        if let Some(h) = horizon {
            if t >= h {
                end_tick = h;
                break;
            }
        }
        let pending_at_t = phases
            .iter()
            .filter(|p| matches!(p, Phase::Tx { end } | Phase::Active { end } if *end == t))
            .count();
        if pending_at_t > 1 {
            ties += 1;
        }

        if warmed {
            *occupancy.entry(state).or_default() += (t - last) as u128;
            // Residual times of the other links at this transition epoch.
            for (k, phase) in phases.iter().enumerate() {
                if k == i {
                    continue;
                }
                match phase {
                    Phase::Active { end } => {
                        let bucket = &mut residual_ticks[k][0];
                        if bucket.len() < config.residual_cap {
                            bucket.push(end - t);
                        }
                    }
                    Phase::Tx { end } => {
                        let bucket = &mut residual_ticks[k][1];
                        if bucket.len() < config.residual_cap {
                            bucket.push(end - t);
                        }
                    }
                    Phase::Frozen { .. } => {}
                }
            }
        }
        last = t;

        let bit = 1u64 << i;
        match phases[i] {
            Phase::Active { .. } => {
                // Countdown reached zero: transmit, freeze counting neighbors.
                let next_state = state | bit;
                if warmed {
                    *transitions.entry((state, next_state)).or_default() += 1;
                }
                if config.record_trace {
                    trace.push(TraceEvent {
                        tick: t,
                        link: i,
                        turned_on: true,
                    });
                }
                state = next_state;
                let d = duration_ticks(config.transmission.sample(&mut rngs[i]));
                draws[i].push(d);
                phases[i] = Phase::Tx { end: t + d };
                let mut nbrs = graph.neighbors(i);
                while nbrs != 0 {
                    let j = nbrs.trailing_zeros() as usize;
                    nbrs &= nbrs - 1;
                    if let Phase::Active { end } = phases[j] {
                        phases[j] = Phase::Frozen { remaining: end - t };
                    }
                }
            }
            Phase::Tx { .. } => {
                // Transmission ended: fresh countdown, resume freed neighbors.
                let next_state = state & !bit;
                if warmed {
                    *transitions.entry((state, next_state)).or_default() += 1;
                }
                if config.record_trace {
                    trace.push(TraceEvent {
                        tick: t,
                        link: i,
                        turned_on: false,
                    });
                }
                state = next_state;
                let d = duration_ticks(config.countdown.sample(&mut rngs[i]));
                draws[i].push(d);
                // A neighbor can be mid-transmission here only through a tie.
                if graph.neighbors(i) & state != 0 {
                    phases[i] = Phase::Frozen { remaining: d };
                } else {
                    phases[i] = Phase::Active { end: t + d };
                }
                let mut nbrs = graph.neighbors(i);
                while nbrs != 0 {
                    let j = nbrs.trailing_zeros() as usize;
                    nbrs &= nbrs - 1;
                    if let Phase::Frozen { remaining } = phases[j] {
                        if graph.neighbors(j) & state == 0 {
                            phases[j] = Phase::Active { end: t + remaining };
                            if warmed {
                                let buckets = &mut residual_ticks[j];
                                if buckets[0].len() < config.residual_cap {
                                    buckets[0].push(remaining);
                                }
                                if buckets[2].len() < config.residual_cap {
                                    buckets[2].push(remaining);
                                }
                            }
                        }
                    }
                }
            }
            Phase::Frozen { .. } => unreachable!("frozen links have no scheduled event"),
        }

        events += 1;
        if !warmed {
            let ready = match config.warmup {
                WarmupRule::Events(w) => events >= w,
                WarmupRule::Auto => match (config.stop, horizon) {
                    (StopRule::MaxEvents(n), _) => events >= min_transitions.max(n / 100),
                    (StopRule::MaxTime(_), Some(h)) => events >= min_transitions && t >= h / 100,
                    (StopRule::MaxTime(_), None) => unreachable!(),
                },
            };
            if ready {
                warmed = true;
                stats_start = t;
                last = t;
            }
        }
        if let StopRule::MaxEvents(n) = config.stop {
            if events >= n {
                end_tick = t;
                break;
            }
        }
    }

    if warmed {
        *occupancy.entry(state).or_default() += (end_tick - last) as u128;
    } else {
        stats_start = end_tick;
    }

    let snapshot: Vec<LinkRuntime> = phases
        .iter()
        .map(|phase| match *phase {
            Phase::Tx { end } => LinkRuntime::Transmitting {
                remaining: end - end_tick,
            },
            Phase::Active { end } => LinkRuntime::ActiveCountdown {
                remaining: end - end_tick,
            },
            Phase::Frozen { remaining } => LinkRuntime::FrozenCountdown { remaining },
        })
        .collect();

    let stats = TraceStats {
        total_time: ticks_to_time(end_tick - stats_start),
        event_count: events,
        tie_events: ties,
        occupancy: occupancy
            .into_iter()
            .map(|(k, v)| (k, v as f64 / TICKS_PER_UNIT))
            .collect(),
        transition_counts: transitions,
        residuals: residual_ticks
            .into_iter()
            .map(|[cd, tx, unfreeze]| ResidualSamples {
                countdown: cd.into_iter().map(ticks_to_time).collect(),
                transmission: tx.into_iter().map(ticks_to_time).collect(),
                unfreeze: unfreeze.into_iter().map(ticks_to_time).collect(),
            })
            .collect(),
        warmup_time: ticks_to_time(stats_start),
    };

    Ok(ForwardRun {
        stats,
        snapshot,
        end_tick,
        draws,
        trace: config.record_trace.then_some(trace),
    })
}

#[derive(Debug, Clone, Copy)]
enum RevPhase {
    /// Transmitting below the current clock; event at the transmission's
    /// forward start epoch.
    Tx { start: u64 },
    /// Actively counting below the current clock; event at the countdown's
    /// forward start epoch.
    Active { target: u64 },
    /// Frozen below the current clock; `remaining` backward countdown.
    Frozen { remaining: u64 },
}

/// Replays a run backward from its end snapshot.
///
/// `reversed_draws` are the forward per-link draw sequences reversed (most
/// recent first, the in-flight draw leading). Fed the end snapshot of a
/// forward run, the replay reproduces the forward trace exactly, tick for
/// tick; the returned trace is already in forward order.
pub fn simulate_reverse(
    graph: &ContentionGraph,
    snapshot: &[LinkRuntime],
    reversed_draws: &[Vec<u64>],
    horizon_tick: u64,
) -> Result<ReverseRun> {
    let links = graph.len();
    if snapshot.len() != links || reversed_draws.len() != links {
        return Err(Error::InconsistentSnapshot(format!(
            "expected {links} links, got {} runtimes and {} draw sequences",
            snapshot.len(),
            reversed_draws.len()
        )));
    }

    let mut state: u64 = 0;
    for (i, runtime) in snapshot.iter().enumerate() {
        if runtime.is_transmitting() {
            state |= 1 << i;
        }
    }
    for (i, runtime) in snapshot.iter().enumerate() {
        let sensed = graph.neighbors(i) & state != 0;
        match runtime {
            LinkRuntime::Transmitting { .. } if sensed => {
                return Err(Error::InconsistentSnapshot(format!(
                    "link {i} transmits alongside a neighbor"
                )));
            }
            LinkRuntime::ActiveCountdown { .. } if sensed => {
                return Err(Error::InconsistentSnapshot(format!(
                    "link {i} counts down while a neighbor transmits"
                )));
            }
            LinkRuntime::FrozenCountdown { .. } if !sensed => {
                return Err(Error::InconsistentSnapshot(format!(
                    "link {i} is frozen with no transmitting neighbor"
                )));
            }
            _ => {}
        }
    }

    let mut cursors = vec![0usize; links];
    let pop = |i: usize, cursors: &mut Vec<usize>| -> Result<u64> {
        let draw = reversed_draws[i]
            .get(cursors[i])
            .copied()
            .ok_or(Error::ExhaustedDraws { link: i })?;
        cursors[i] += 1;
        Ok(draw)
    };

    let mut phases: Vec<RevPhase> = Vec::with_capacity(links);
    for (i, runtime) in snapshot.iter().enumerate() {
        let (remaining, transmitting, frozen) = match *runtime {
            LinkRuntime::Transmitting { remaining } => (remaining, true, false),
            LinkRuntime::ActiveCountdown { remaining } => (remaining, false, false),
            LinkRuntime::FrozenCountdown { remaining } => (remaining, false, true),
        };
        let draw = pop(i, &mut cursors)?;
        let elapsed = draw.checked_sub(remaining).ok_or_else(|| {
            Error::InconsistentSnapshot(format!(
                "link {i} remaining time exceeds its in-flight draw"
            ))
        })?;
        if elapsed > horizon_tick {
            return Err(Error::InconsistentSnapshot(format!(
                "link {i} elapsed time exceeds the horizon"
            )));
        }
        phases.push(if transmitting {
            RevPhase::Tx {
                start: horizon_tick - elapsed,
            }
        } else if frozen {
            RevPhase::Frozen { remaining: elapsed }
        } else {
            RevPhase::Active {
                target: horizon_tick - elapsed,
            }
        });
    }

    let corrupt = |i: usize| {
        Error::InconsistentSnapshot(format!("link {i} draw sequence inconsistent with horizon"))
    };

    let mut clock = horizon_tick;
    let mut trace: Vec<TraceEvent> = Vec::new();
    let mut occupancy: HashMap<u64, u128> = HashMap::new();
    let mut transitions: HashMap<(u64, u64), u64> = HashMap::new();
    let mut events: u64 = 0;
    loop {
        // Largest scheduled epoch in (0, horizon]; highest link index on
        // ties — the exact inverse of the forward ordering. An epoch equal
        // to the horizon occurs only when the forward run stopped on an
        // event budget, right at a processed event; it is undone first.
        let mut best: Option<(u64, usize)> = None;
        for (i, phase) in phases.iter().enumerate() {
            let epoch = match phase {
                RevPhase::Tx { start } => *start,
                RevPhase::Active { target } => *target,
                RevPhase::Frozen { .. } => continue,
            };
            if epoch == 0 || epoch > horizon_tick {
                continue;
            }
            if best.is_none_or(|(e, _)| epoch >= e) {
                best = Some((epoch, i));
            }
        }
        let Some((e, i)) = best else { break };

        *occupancy.entry(state).or_default() += (clock - e) as u128;
        clock = e;

        let bit = 1u64 << i;
        match phases[i] {
            RevPhase::Tx { .. } => {
                // Forward transmission start: below this epoch the link is
                // counting down toward that start.
                trace.push(TraceEvent {
                    tick: e,
                    link: i,
                    turned_on: true,
                });
                let above = state;
                state &= !bit;
                *transitions.entry((state, above)).or_default() += 1;
                let d = pop(i, &mut cursors)?;
                if graph.neighbors(i) & state != 0 {
                    phases[i] = RevPhase::Frozen { remaining: d };
                } else {
                    phases[i] = RevPhase::Active {
                        target: e.checked_sub(d).ok_or_else(|| corrupt(i))?,
                    };
                }
                // One fewer transmitter below the epoch: neighbors of i may
                // resume their backward countdown.
                let mut nbrs = graph.neighbors(i);
                while nbrs != 0 {
                    let j = nbrs.trailing_zeros() as usize;
                    nbrs &= nbrs - 1;
                    if let RevPhase::Frozen { remaining } = phases[j] {
                        if graph.neighbors(j) & state == 0 {
                            phases[j] = RevPhase::Active {
                                target: e.checked_sub(remaining).ok_or_else(|| corrupt(j))?,
                            };
                        }
                    }
                }
            }
            RevPhase::Active { .. } => {
                // Forward countdown start, i.e. the end of the previous
                // transmission: below this epoch the link is transmitting.
                trace.push(TraceEvent {
                    tick: e,
                    link: i,
                    turned_on: false,
                });
                let above = state;
                state |= bit;
                *transitions.entry((state, above)).or_default() += 1;
                let d = pop(i, &mut cursors)?;
                phases[i] = RevPhase::Tx {
                    start: e.checked_sub(d).ok_or_else(|| corrupt(i))?,
                };
                // A transmitter appears below the epoch: counting neighbors
                // freeze with their backward remaining.
                let mut nbrs = graph.neighbors(i);
                while nbrs != 0 {
                    let j = nbrs.trailing_zeros() as usize;
                    nbrs &= nbrs - 1;
                    if let RevPhase::Active { target } = phases[j] {
                        phases[j] = RevPhase::Frozen {
                            remaining: e - target,
                        };
                    }
                }
            }
            RevPhase::Frozen { .. } => unreachable!("frozen links are never selected"),
        }
        events += 1;
    }

    *occupancy.entry(state).or_default() += clock as u128;
    trace.reverse();

    let stats = TraceStats {
        total_time: ticks_to_time(horizon_tick),
        event_count: events,
        tie_events: 0,
        occupancy: occupancy
            .into_iter()
            .map(|(k, v)| (k, v as f64 / TICKS_PER_UNIT))
            .collect(),
        transition_counts: transitions,
        residuals: vec![ResidualSamples::default(); links],
        warmup_time: 0.0,
    };
    Ok(ReverseRun { stats, trace })
}

/// Replays `run` backward and reports whether the traces agree exactly.
pub fn reverse_identity_check(graph: &ContentionGraph, run: &ForwardRun) -> Result<bool> {
    let forward = run
        .trace
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("forward run recorded no trace".into()))?;
    let reverse = simulate_reverse(graph, &run.snapshot, &run.reversed_draws(), run.end_tick)?;
    Ok(forward == &reverse.trace)
}

/// Empirical transition rates `p_{ss'} = n_{ss'} / T_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalRates {
    pub rates: HashMap<(u64, u64), f64>,
    /// Pairs omitted because the source state has no recorded occupancy.
    pub skipped: Vec<(u64, u64)>,
}

pub fn empirical_rates(stats: &TraceStats) -> EmpiricalRates {
    let mut rates = HashMap::new();
    let mut skipped = Vec::new();
    for (&(from, to), &count) in &stats.transition_counts {
        match stats.occupancy.get(&from) {
            Some(&time) if time > 0.0 => {
                rates.insert((from, to), count as f64 / time);
            }
            _ => skipped.push((from, to)),
        }
    }
    skipped.sort_unstable();
    EmpiricalRates { rates, skipped }
}

/// Count imbalance of one connected pair (left has fewer transmitters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairImbalance {
    pub left: u64,
    pub right: u64,
    pub up_count: u64,
    pub down_count: u64,
    pub imbalance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReversibilityReport {
    pub pairs: Vec<PairImbalance>,
    pub max_pair_imbalance: f64,
}

/// Compares each pair's up and down transition counts. For a reversible
/// trajectory the two differ only by wandering along cycles, so the
/// normalized imbalance shrinks with the run length.
pub fn reversibility_check(stats: &TraceStats) -> ReversibilityReport {
    let mut keys: Vec<(u64, u64)> = stats
        .transition_counts
        .keys()
        .map(|&(a, b)| {
            if a.count_ones() <= b.count_ones() {
                (a, b)
            } else {
                (b, a)
            }
        })
        .collect();
    keys.sort_unstable();
    keys.dedup();

    let mut pairs = Vec::with_capacity(keys.len());
    let mut max_imbalance: f64 = 0.0;
    for (left, right) in keys {
        let up = stats
            .transition_counts
            .get(&(left, right))
            .copied()
            .unwrap_or(0);
        let down = stats
            .transition_counts
            .get(&(right, left))
            .copied()
            .unwrap_or(0);
        let imbalance = up.abs_diff(down) as f64 / up.max(1) as f64;
        max_imbalance = max_imbalance.max(imbalance);
        pairs.push(PairImbalance {
            left,
            right,
            up_count: up,
            down_count: down,
            imbalance,
        });
    }
    ReversibilityReport {
        pairs,
        max_pair_imbalance: max_imbalance,
    }
}

/// Minimum samples per link for the residual check to count as informed.
pub const RESIDUAL_MIN_SAMPLES: usize = 1000;

/// One link's Kolmogorov–Smirnov statistics as `(samples, statistic)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkResidualKs {
    pub link: usize,
    pub countdown: Option<(usize, f64)>,
    pub transmission: Option<(usize, f64)>,
    pub unfreeze: Option<(usize, f64)>,
}

/// Residual-time invariance report. Headline statistics are the worst
/// per-link KS values among links with enough samples; a link under the
/// minimum contributes `None` in the per-link detail.
///
/// A link that senses every other link is never observed mid-transmission:
/// its neighbors are all frozen while it transmits, so no other link has a
/// transition epoch then. `insufficient_data` therefore flags a category
/// only when no link at all reaches the minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub ks_countdown: f64,
    pub ks_transmission: f64,
    pub ks_unfreeze: Option<f64>,
    pub insufficient_data: bool,
    pub per_link: Vec<LinkResidualKs>,
}

/// One-sample KS statistic against a CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = sorted.len() as f64;
    let mut worst: f64 = 0.0;
    for (i, x) in sorted.iter().enumerate() {
        let f = cdf(*x);
        worst = worst.max((f - i as f64 / n).abs());
        worst = worst.max(((i + 1) as f64 / n - f).abs());
    }
    worst
}

/// Compares the sampled residual times against the equilibrium residual
/// laws of the configured countdown and transmission distributions.
pub fn residual_invariance_check(
    stats: &TraceStats,
    countdown: &DurationDistribution,
    transmission: &DurationDistribution,
) -> ResidualReport {
    let mut per_link = Vec::with_capacity(stats.residuals.len());
    let mut ks_cd: f64 = 0.0;
    let mut ks_tx: f64 = 0.0;
    let mut ks_unfreeze: Option<f64> = None;
    let mut cd_informed = false;
    let mut tx_informed = false;

    for (link, samples) in stats.residuals.iter().enumerate() {
        let eval = |data: &[f64], dist: &DurationDistribution| -> Option<(usize, f64)> {
            if data.len() >= RESIDUAL_MIN_SAMPLES {
                Some((data.len(), ks_statistic(data, |t| dist.residual_cdf(t))))
            } else {
                None
            }
        };
        let cd = eval(&samples.countdown, countdown);
        let tx = eval(&samples.transmission, transmission);
        let unfreeze = eval(&samples.unfreeze, countdown);
        if let Some((_, k)) = cd {
            ks_cd = ks_cd.max(k);
            cd_informed = true;
        }
        if let Some((_, k)) = tx {
            ks_tx = ks_tx.max(k);
            tx_informed = true;
        }
        if let Some((_, k)) = unfreeze {
            ks_unfreeze = Some(ks_unfreeze.map_or(k, |prev: f64| prev.max(k)));
        }
        per_link.push(LinkResidualKs {
            link,
            countdown: cd,
            transmission: tx,
            unfreeze,
        });
    }

    ResidualReport {
        ks_countdown: ks_cd,
        ks_transmission: ks_tx,
        ks_unfreeze,
        insufficient_data: !cd_informed || !tx_informed,
        per_link,
    }
}
