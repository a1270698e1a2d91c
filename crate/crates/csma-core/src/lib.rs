//! Per-link throughput distributions of ideal CSMA networks over a
//! contention graph, computed four ways that cross-validate each other:
//!
//! - a quick airtime-share estimate from maximum-independent-set counting
//!   ([`boe`]);
//! - the exact product-form stationary distribution of the idealized
//!   network, with per-link countdown overheads ([`exact`]) and its
//!   stage-expanded oracle ([`staged`]);
//! - a deterministic event-driven simulation of interacting on-off
//!   processes with freeze/resume countdown, including exact reverse-time
//!   replay ([`sim`]);
//! - an inclusion–exclusion airtime-balance fixed point ([`baseline`]).
//!
//! [`analysis`] compares the methods and reports starved links, island
//! states and calibrated per-link overheads.

pub mod analysis;
pub mod baseline;
pub mod boe;
pub mod dist;
pub mod error;
pub mod exact;
pub mod graph;
pub mod sim;
pub mod staged;
pub mod throughput;

pub use analysis::{
    calibrate_c, compare_methods, island_report, starvation_report, CalibrationResult,
    ComparisonReport, IslandReport, DEFAULT_ISLAND_BAR,
};
pub use baseline::{ie_residual, solve_fixed_point, FixedPointSolution, IeConfig};
pub use boe::{boe_throughput, to_bps, RatePreset};
pub use dist::DurationDistribution;
pub use error::{Error, Result};
pub use exact::{
    boe_limit, link_throughputs, mrf_check, stationary_distribution, AccessParams, MrfReport,
    StateDistribution,
};
pub use graph::{
    parse_graph, ContentionGraph, DocumentOverhead, ParsedDocument, StateTransition, SystemState,
    DEFAULT_STATE_CAP,
};
pub use sim::{
    empirical_rates, residual_invariance_check, reverse_identity_check, reversibility_check,
    simulate_forward, simulate_reverse, ForwardRun, LinkRuntime, ResidualReport, ReverseRun,
    ReversibilityReport, SimConfig, StopRule, TraceEvent, TraceStats, WarmupRule,
};
pub use staged::{staged_stationary, ExpandedState, LinkStage, StageLaw, StagedResult, StagedSpec};
pub use throughput::ThroughputVector;
