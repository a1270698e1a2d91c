//! Command-line surface binding the throughput engines to files and
//! streams. Each invocation reads one graph document, runs one engine and
//! writes exactly one result document to stdout.
//!
//! Exit status: 0 on success, 1 on input errors, 2 when a numerical
//! method reports non-convergence (partial results are still printed).

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use csma_core::{
    boe_throughput, calibrate_c, compare_methods, island_report, link_throughputs, parse_graph,
    residual_invariance_check, reverse_identity_check, reversibility_check, simulate_forward,
    solve_fixed_point, staged_stationary, starvation_report, stationary_distribution, to_bps,
    AccessParams, ContentionGraph, DocumentOverhead, DurationDistribution, IeConfig, RatePreset,
    SimConfig, StageLaw, StagedSpec, StateDistribution, StopRule, SystemState, WarmupRule,
    DEFAULT_ISLAND_BAR,
};
use output::{fmt, num, Document, Format, Section};

#[derive(Parser)]
#[command(
    name = "csma",
    about = "Per-link throughput distributions of ideal CSMA networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Graph document (JSON: links, edges, optional c)
    #[arg(short = 'g', long = "graph")]
    graph: PathBuf,
    /// Output format
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Airtime shares from maximum-independent-set counting
    Boe {
        #[command(flatten)]
        common: Common,
        /// Starvation threshold for the starved-link list
        #[arg(long, default_value_t = 0.05)]
        threshold: f64,
        /// Built-in single-link rate preset (802.11b-udp, 802.11a-udp, 802.11b-tcp)
        #[arg(long)]
        preset: Option<String>,
        /// Custom single-link rate in bits per second
        #[arg(long, conflicts_with = "preset")]
        single_link_bps: Option<f64>,
    },
    /// Exact product-form stationary distribution and link throughputs
    Exact {
        #[command(flatten)]
        common: Common,
        /// Uniform countdown overhead (overrides the document's c)
        #[arg(long, allow_negative_numbers = true)]
        c: Option<f64>,
    },
    /// Event-driven simulation of the on-off processes
    Sim {
        #[command(flatten)]
        common: Common,
        /// Countdown duration law (exp:M, uni:LO,HI, det:V, erlang:K,M, mix:...)
        #[arg(long, default_value = "exp:0.186")]
        cd: String,
        /// Transmission duration law
        #[arg(long, default_value = "exp:1")]
        tx: String,
        /// Event budget (e.g. 1e6)
        #[arg(long, value_parser = parse_count, conflicts_with = "time")]
        events: Option<u64>,
        /// Time horizon in transmission-mean units
        #[arg(long)]
        time: Option<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Warm-up events to discard (default: automatic)
        #[arg(long)]
        warmup: Option<u64>,
        /// Also replay the run backward and report the identity check
        #[arg(long)]
        reverse_check: bool,
        /// Include residual-time and reversibility diagnostics
        #[arg(long)]
        diagnostics: bool,
    },
    /// Stage-expanded chain solved as a linear system
    Staged {
        #[command(flatten)]
        common: Common,
        /// Countdown overhead (transmission mean is normalized to 1)
        #[arg(long, allow_negative_numbers = true)]
        c: Option<f64>,
        /// Countdown stages per duration
        #[arg(long, default_value_t = 1)]
        stages_cd: u32,
        /// Transmission stages per duration
        #[arg(long, default_value_t = 1)]
        stages_tx: u32,
        /// Countdown stage-count mixture, e.g. 1:0.5,3:0.5
        #[arg(long, conflicts_with = "stages_cd")]
        mix_cd: Option<String>,
        /// Transmission stage-count mixture
        #[arg(long, conflicts_with = "stages_tx")]
        mix_tx: Option<String>,
    },
    /// Inclusion-exclusion airtime-balance fixed point
    Baseline {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        c: Option<f64>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 0.5)]
        damping: f64,
        #[arg(long, default_value_t = 100_000, value_parser = parse_count)]
        max_iter: u64,
    },
    /// Run all four methods and tabulate deviations against exact
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        c: Option<f64>,
        #[arg(long, default_value = "exp:0.186")]
        cd: String,
        #[arg(long, default_value = "exp:1")]
        tx: String,
        #[arg(long, default_value = "1e6", value_parser = parse_count)]
        events: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Maximum-set Hamming-distance analysis (temporal starvation risk)
    Islands {
        #[command(flatten)]
        common: Common,
        /// Distance bar above which islands are flagged
        #[arg(long, default_value_t = DEFAULT_ISLAND_BAR)]
        bar: u32,
    },
    /// Search per-link overheads approaching target throughputs
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// Comma-separated per-link target throughputs
        #[arg(long)]
        target: String,
        /// Smallest allowed overhead; the minimum sits at this floor
        #[arg(long, default_value_t = 0.012)]
        c_floor: f64,
    },
}

fn parse_count(text: &str) -> Result<u64, String> {
    let value: f64 = text
        .parse()
        .map_err(|_| format!("`{text}` is not a number"))?;
    if value.is_nan() || value < 1.0 || value.fract().abs() > 1e-9 {
        return Err(format!("`{text}` is not a positive whole count"));
    }
    Ok(value as u64)
}

#[derive(Debug)]
enum CliError {
    Input(String),
    NonConvergence,
}

impl From<csma_core::Error> for CliError {
    fn from(e: csma_core::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(CliError::NonConvergence) => ExitCode::from(2),
    }
}

fn load_graph(common: &Common) -> Result<(ContentionGraph, Option<DocumentOverhead>), CliError> {
    let text = std::fs::read_to_string(&common.graph)
        .map_err(|e| CliError::Input(format!("{}: {e}", common.graph.display())))?;
    let parsed = parse_graph(&text)?;
    Ok((parsed.graph, parsed.overhead))
}

/// Command-line `--c` wins over the document's `c` field, with a warning.
fn resolve_overhead(
    cli_c: Option<f64>,
    doc: Option<DocumentOverhead>,
    graph: &ContentionGraph,
    default_c: f64,
) -> Result<AccessParams, CliError> {
    match (cli_c, doc) {
        (Some(c), Some(_)) => {
            eprintln!("warning: --c overrides the graph document's c field");
            Ok(AccessParams::uniform(c, graph.len())?)
        }
        (Some(c), None) => Ok(AccessParams::uniform(c, graph.len())?),
        (None, Some(doc)) => Ok(AccessParams::from_document(&doc, graph)?),
        (None, None) => Ok(AccessParams::uniform(default_c, graph.len())?),
    }
}

fn check_probabilities(probs: &[f64]) -> Result<(), CliError> {
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        eprintln!("error: probabilities sum to {total}, refusing to emit");
        return Err(CliError::NonConvergence);
    }
    Ok(())
}

fn state_map(dist: &StateDistribution) -> Map<String, Value> {
    dist.iter().map(|(s, p)| (s.to_string(), num(p))).collect()
}

fn label_map(labels: &[String], values: &[f64]) -> Map<String, Value> {
    labels
        .iter()
        .zip(values)
        .map(|(l, v)| (l.clone(), num(*v)))
        .collect()
}

fn vector_section(title: &str, labels: &[String], values: &[f64]) -> Section {
    Section {
        title: title.to_string(),
        header: vec!["link".into(), "value".into()],
        rows: labels
            .iter()
            .zip(values)
            .map(|(l, v)| vec![l.clone(), fmt(*v)])
            .collect(),
    }
}

fn distribution_section(title: &str, dist: &StateDistribution) -> Section {
    Section {
        title: title.to_string(),
        header: vec!["state".into(), "probability".into()],
        rows: dist
            .iter()
            .map(|(s, p)| vec![s.to_string(), fmt(p)])
            .collect(),
    }
}

fn overhead_json(params: &AccessParams) -> Value {
    if params.is_uniform() {
        num(params.get(0))
    } else {
        Value::Array(params.values().iter().map(|&c| num(c)).collect())
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Boe {
            common,
            threshold,
            preset,
            single_link_bps,
        } => {
            let (graph, _) = load_graph(&common)?;
            let tv = boe_throughput(&graph)?;
            let mis = graph.maximum_independent_sets()?;
            let starved = starvation_report(&tv, threshold, &graph)?;

            let rate = match (&preset, single_link_bps) {
                (Some(name), _) => Some(
                    RatePreset::by_name(name)
                        .ok_or_else(|| CliError::Input(format!("unknown preset `{name}`")))?,
                ),
                (None, Some(bps)) => Some(RatePreset::new("custom", bps)),
                (None, None) => None,
            };

            let mut doc = json!({
                "command": "boe",
                "config": {
                    "graph": common.graph.display().to_string(),
                    "threshold": num(threshold),
                },
                "link_throughput": label_map(graph.labels(), tv.values()),
                "mis_count": mis.len(),
                "starved": starved,
            });
            let mut config = vec![
                ("graph".to_string(), common.graph.display().to_string()),
                ("threshold".to_string(), fmt(threshold)),
            ];
            let mut sections = vec![vector_section(
                "normalized link throughput",
                graph.labels(),
                tv.values(),
            )];
            if let Some(rate) = rate {
                let bps = to_bps(&tv, &rate);
                doc["config"]["single_link_bps"] = num(rate.single_link_bps);
                doc["config"]["preset"] = Value::from(rate.name.clone());
                doc["bps"] = Value::Object(label_map(graph.labels(), &bps));
                config.push(("preset".into(), rate.name.clone()));
                config.push(("single_link_bps".into(), fmt(rate.single_link_bps)));
                sections.push(vector_section("throughput (bps)", graph.labels(), &bps));
            }
            sections.push(Section {
                title: "summary".into(),
                header: vec!["key".into(), "value".into()],
                rows: vec![
                    vec!["mis_count".into(), mis.len().to_string()],
                    vec!["starved".into(), starved.join(" ")],
                ],
            });
            emit(
                common.format,
                Document {
                    json: doc,
                    config,
                    sections,
                },
            )
        }

        Command::Exact { common, c } => {
            let (graph, doc_c) = load_graph(&common)?;
            let params = resolve_overhead(c, doc_c, &graph, 0.186)?;
            let dist = stationary_distribution(&graph, &params)?;
            check_probabilities(dist.probs())?;
            let x = link_throughputs(&dist, &graph)?;

            let doc = json!({
                "command": "exact",
                "config": {
                    "graph": common.graph.display().to_string(),
                    "c": overhead_json(&params),
                },
                "states": Value::Object(state_map(&dist)),
                "normalizer": num(dist.normalizer()),
                "link_throughput": label_map(graph.labels(), x.values()),
            });
            let config = vec![
                ("graph".to_string(), common.graph.display().to_string()),
                ("c".to_string(), overhead_text(&params)),
            ];
            let sections = vec![
                distribution_section("stationary distribution", &dist),
                vector_section("normalized link throughput", graph.labels(), x.values()),
            ];
            emit(
                common.format,
                Document {
                    json: doc,
                    config,
                    sections,
                },
            )
        }

        Command::Sim {
            common,
            cd,
            tx,
            events,
            time,
            seed,
            warmup,
            reverse_check,
            diagnostics,
        } => {
            let (graph, _) = load_graph(&common)?;
            let countdown = DurationDistribution::parse(&cd)?;
            let transmission = DurationDistribution::parse(&tx)?;
            let stop = match (events, time) {
                (Some(n), None) => StopRule::MaxEvents(n),
                (None, Some(t)) => StopRule::MaxTime(t),
                (None, None) => StopRule::MaxEvents(100_000),
                (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
            };
            let mut config = SimConfig::new(countdown, transmission, stop, seed);
            if let Some(w) = warmup {
                config.warmup = WarmupRule::Events(w);
            }
            config.record_trace = reverse_check;

            let run = simulate_forward(&graph, &config)?;
            let x = run.stats.link_throughputs(graph.len());

            let mut occupancy: Vec<(SystemState, f64)> = run
                .stats
                .occupancy
                .iter()
                .map(|(&mask, &t)| {
                    (
                        SystemState::from_mask(mask, graph.len()),
                        t / run.stats.total_time,
                    )
                })
                .collect();
            occupancy.sort_by_key(|(s, _)| s.canonical_key());
            if !occupancy.is_empty() {
                check_probabilities(&occupancy.iter().map(|(_, p)| *p).collect::<Vec<_>>())?;
            }

            let stop_text = match stop {
                StopRule::MaxEvents(n) => format!("events={n}"),
                StopRule::MaxTime(t) => format!("time={t}"),
            };
            let mut doc = json!({
                "command": "sim",
                "config": {
                    "graph": common.graph.display().to_string(),
                    "cd": config.countdown.to_string(),
                    "tx": config.transmission.to_string(),
                    "stop": stop_text,
                    "seed": seed,
                },
                "occupancy": occupancy
                    .iter()
                    .map(|(s, p)| (s.to_string(), num(*p)))
                    .collect::<Map<String, Value>>(),
                "link_throughput": label_map(graph.labels(), &x),
                "events": run.stats.event_count,
                "tie_events": run.stats.tie_events,
                "total_time": num(run.stats.total_time),
                "warmup_time": num(run.stats.warmup_time),
            });
            let mut cfg = vec![
                ("graph".to_string(), common.graph.display().to_string()),
                ("cd".to_string(), config.countdown.to_string()),
                ("tx".to_string(), config.transmission.to_string()),
                ("stop".to_string(), stop_text.clone()),
                ("seed".to_string(), seed.to_string()),
            ];
            let mut sections = vec![
                Section {
                    title: "state occupancy".into(),
                    header: vec!["state".into(), "fraction".into()],
                    rows: occupancy
                        .iter()
                        .map(|(s, p)| vec![s.to_string(), fmt(*p)])
                        .collect(),
                },
                vector_section("normalized link throughput", graph.labels(), &x),
            ];

            if reverse_check {
                let identical = reverse_identity_check(&graph, &run)?;
                doc["reverse_identity"] = Value::Bool(identical);
                cfg.push(("reverse_check".into(), "true".into()));
                sections.push(Section {
                    title: "reverse replay".into(),
                    header: vec!["check".into(), "result".into()],
                    rows: vec![vec!["identical_trace".into(), identical.to_string()]],
                });
            }
            if diagnostics {
                let reversibility = reversibility_check(&run.stats);
                let residual =
                    residual_invariance_check(&run.stats, &config.countdown, &config.transmission);
                doc["max_pair_imbalance"] = num(reversibility.max_pair_imbalance);
                doc["ks_countdown"] = num(residual.ks_countdown);
                doc["ks_transmission"] = num(residual.ks_transmission);
                doc["ks_unfreeze"] = residual.ks_unfreeze.map(num).unwrap_or(Value::Null);
                doc["residuals_insufficient"] = Value::Bool(residual.insufficient_data);
                sections.push(Section {
                    title: "diagnostics".into(),
                    header: vec!["statistic".into(), "value".into()],
                    rows: vec![
                        vec![
                            "max_pair_imbalance".into(),
                            fmt(reversibility.max_pair_imbalance),
                        ],
                        vec!["ks_countdown".into(), fmt(residual.ks_countdown)],
                        vec!["ks_transmission".into(), fmt(residual.ks_transmission)],
                        vec![
                            "ks_unfreeze".into(),
                            residual
                                .ks_unfreeze
                                .map(fmt)
                                .unwrap_or_else(|| "n/a".into()),
                        ],
                    ],
                });
            }
            emit(
                common.format,
                Document {
                    json: doc,
                    config: cfg,
                    sections,
                },
            )
        }

        Command::Staged {
            common,
            c,
            stages_cd,
            stages_tx,
            mix_cd,
            mix_tx,
        } => {
            let (graph, doc_c) = load_graph(&common)?;
            let params = resolve_overhead(c, doc_c, &graph, 0.186)?;
            if !params.is_uniform() {
                return Err(CliError::Input(
                    "the staged chain takes a uniform overhead".into(),
                ));
            }
            let overhead = params.get(0);
            let cd_law = match mix_cd {
                Some(spec) => parse_stage_mixture(&spec)?,
                None => StageLaw::Fixed(stages_cd),
            };
            let tx_law = match mix_tx {
                Some(spec) => parse_stage_mixture(&spec)?,
                None => StageLaw::Fixed(stages_tx),
            };
            // Transmission mean normalized to 1; countdown mean equals c.
            let spec = StagedSpec::new(
                cd_law.clone(),
                tx_law.clone(),
                overhead / cd_law.mean(),
                1.0 / tx_law.mean(),
            )?;
            let result = staged_stationary(&graph, &spec)?;
            check_probabilities(&result.probs)?;
            let x = link_throughputs(&result.marginal, &graph)?;

            let doc = json!({
                "command": "staged",
                "config": {
                    "graph": common.graph.display().to_string(),
                    "c": num(overhead),
                    "cd_law": stage_law_text(&spec.cd_law),
                    "tx_law": stage_law_text(&spec.tx_law),
                    "cd_stage_mean": num(spec.cd_stage_mean),
                    "tx_stage_mean": num(spec.tx_stage_mean),
                },
                "expanded_states": result.states.len(),
                "marginal": Value::Object(state_map(&result.marginal)),
                "link_throughput": label_map(graph.labels(), x.values()),
                "solve_residual": num(result.residual),
                "used_power_iteration": result.used_power_iteration,
            });
            let config = vec![
                ("graph".to_string(), common.graph.display().to_string()),
                ("c".to_string(), fmt(overhead)),
                ("cd_law".to_string(), stage_law_text(&spec.cd_law)),
                ("tx_law".to_string(), stage_law_text(&spec.tx_law)),
            ];
            let sections = vec![
                distribution_section("marginal distribution", &result.marginal),
                vector_section("normalized link throughput", graph.labels(), x.values()),
            ];
            emit(
                common.format,
                Document {
                    json: doc,
                    config,
                    sections,
                },
            )
        }

        Command::Baseline {
            common,
            c,
            tol,
            damping,
            max_iter,
        } => {
            let (graph, doc_c) = load_graph(&common)?;
            let params = resolve_overhead(c, doc_c, &graph, 0.186)?;
            if !params.is_uniform() {
                return Err(CliError::Input(
                    "the baseline takes a uniform overhead".into(),
                ));
            }
            let config = IeConfig {
                c: params.get(0),
                damping,
                tol,
                max_iter: max_iter.min(u32::MAX as u64) as u32,
            };
            let solution = solve_fixed_point(&graph, &config, None)?;

            let doc = json!({
                "command": "baseline",
                "config": {
                    "graph": common.graph.display().to_string(),
                    "c": num(config.c),
                    "tol": num(config.tol),
                    "damping": num(config.damping),
                    "max_iter": config.max_iter,
                },
                "link_throughput": label_map(graph.labels(), solution.x.values()),
                "iterations": solution.iterations,
                "converged": solution.converged,
                "residual": num(solution.residual_inf),
            });
            let cfg = vec![
                ("graph".to_string(), common.graph.display().to_string()),
                ("c".to_string(), fmt(config.c)),
                ("tol".to_string(), fmt(config.tol)),
                ("damping".to_string(), fmt(config.damping)),
                ("max_iter".to_string(), config.max_iter.to_string()),
            ];
            let sections = vec![
                vector_section(
                    "normalized link throughput",
                    graph.labels(),
                    solution.x.values(),
                ),
                Section {
                    title: "solver".into(),
                    header: vec!["key".into(), "value".into()],
                    rows: vec![
                        vec!["iterations".into(), solution.iterations.to_string()],
                        vec!["converged".into(), solution.converged.to_string()],
                        vec!["residual".into(), fmt(solution.residual_inf)],
                    ],
                },
            ];
            let converged = solution.converged;
            emit(
                common.format,
                Document {
                    json: doc,
                    config: cfg,
                    sections,
                },
            )?;
            if converged {
                Ok(())
            } else {
                Err(CliError::NonConvergence)
            }
        }

        Command::Compare {
            common,
            c,
            cd,
            tx,
            events,
            seed,
        } => {
            let (graph, doc_c) = load_graph(&common)?;
            let params = resolve_overhead(c, doc_c, &graph, 0.186)?;
            let sim = SimConfig::new(
                DurationDistribution::parse(&cd)?,
                DurationDistribution::parse(&tx)?,
                StopRule::MaxEvents(events),
                seed,
            );
            let report = compare_methods(&graph, &params, &sim);

            let column = |values: &Option<Vec<f64>>| -> Value {
                values
                    .as_ref()
                    .map(|v| Value::Array(v.iter().map(|&x| num(x)).collect()))
                    .unwrap_or(Value::Null)
            };
            let deviation = |d: &Option<f64>| d.map(num).unwrap_or(Value::Null);
            let doc = json!({
                "command": "compare",
                "config": {
                    "graph": common.graph.display().to_string(),
                    "c": overhead_json(&params),
                    "cd": sim.countdown.to_string(),
                    "tx": sim.transmission.to_string(),
                    "events": events,
                    "seed": seed,
                },
                "labels": report.labels,
                "exact": column(&report.exact),
                "boe": column(&report.boe),
                "simulation": column(&report.simulation),
                "baseline": column(&report.baseline),
                "boe_deviation": deviation(&report.boe_deviation),
                "simulation_deviation": deviation(&report.simulation_deviation),
                "baseline_deviation": deviation(&report.baseline_deviation),
                "errors": report.errors,
            });
            let cfg = vec![
                ("graph".to_string(), common.graph.display().to_string()),
                ("c".to_string(), overhead_text(&params)),
                ("cd".to_string(), sim.countdown.to_string()),
                ("tx".to_string(), sim.transmission.to_string()),
                ("events".to_string(), events.to_string()),
                ("seed".to_string(), seed.to_string()),
            ];
            let cell = |values: &Option<Vec<f64>>, i: usize| -> String {
                values
                    .as_ref()
                    .map(|v| fmt(v[i]))
                    .unwrap_or_else(|| "-".into())
            };
            let mut rows = Vec::new();
            for (i, label) in graph.labels().iter().enumerate() {
                rows.push(vec![
                    label.clone(),
                    cell(&report.exact, i),
                    cell(&report.boe, i),
                    cell(&report.simulation, i),
                    cell(&report.baseline, i),
                ]);
            }
            let mut sections = vec![Section {
                title: "per-link normalized throughput by method".into(),
                header: vec![
                    "link".into(),
                    "exact".into(),
                    "boe".into(),
                    "simulation".into(),
                    "baseline".into(),
                ],
                rows,
            }];
            let dev_cell = |d: &Option<f64>| d.map(fmt).unwrap_or_else(|| "-".into());
            sections.push(Section {
                title: "max deviation from exact".into(),
                header: vec!["method".into(), "deviation".into()],
                rows: vec![
                    vec!["boe".into(), dev_cell(&report.boe_deviation)],
                    vec!["simulation".into(), dev_cell(&report.simulation_deviation)],
                    vec!["baseline".into(), dev_cell(&report.baseline_deviation)],
                ],
            });
            emit(
                common.format,
                Document {
                    json: doc,
                    config: cfg,
                    sections,
                },
            )
        }

        Command::Islands { common, bar } => {
            let (graph, _) = load_graph(&common)?;
            let report = island_report(&graph, bar)?;
            let doc = json!({
                "command": "islands",
                "config": {
                    "graph": common.graph.display().to_string(),
                    "bar": bar,
                },
                "mis": report.mis.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
                "distances": report.distances,
                "max_min_distance": report.max_min_distance,
                "flagged": report.flagged,
            });
            let cfg = vec![
                ("graph".to_string(), common.graph.display().to_string()),
                ("bar".to_string(), bar.to_string()),
            ];
            let mut rows = Vec::new();
            for (i, s) in report.mis.iter().enumerate() {
                let mut row = vec![s.to_string()];
                row.extend(report.distances[i].iter().map(|d| d.to_string()));
                rows.push(row);
            }
            let mut header = vec!["mis".to_string()];
            header.extend(report.mis.iter().map(|s| s.to_string()));
            let sections = vec![
                Section {
                    title: "pairwise Hamming distances".into(),
                    header,
                    rows,
                },
                Section {
                    title: "summary".into(),
                    header: vec!["key".into(), "value".into()],
                    rows: vec![
                        vec![
                            "max_min_distance".into(),
                            report.max_min_distance.to_string(),
                        ],
                        vec!["flagged".into(), report.flagged.to_string()],
                    ],
                },
            ];
            emit(
                common.format,
                Document {
                    json: doc,
                    config: cfg,
                    sections,
                },
            )
        }

        Command::Calibrate {
            common,
            target,
            c_floor,
        } => {
            let (graph, _) = load_graph(&common)?;
            let target: Vec<f64> = target
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| CliError::Input(format!("bad target entry `{t}`")))
                })
                .collect::<Result<_, _>>()?;
            let result = calibrate_c(&graph, &target, c_floor)?;

            let doc = json!({
                "command": "calibrate",
                "config": {
                    "graph": common.graph.display().to_string(),
                    "target": target.iter().map(|&t| num(t)).collect::<Vec<_>>(),
                    "c_floor": num(c_floor),
                },
                "c": label_map(graph.labels(), result.params.values()),
                "achieved": label_map(graph.labels(), result.achieved.values()),
                "residual": num(result.residual_inf),
                "converged": result.converged,
                "evaluations": result.evaluations,
            });
            let cfg = vec![
                ("graph".to_string(), common.graph.display().to_string()),
                (
                    "target".to_string(),
                    target.iter().map(|t| fmt(*t)).collect::<Vec<_>>().join(","),
                ),
                ("c_floor".to_string(), fmt(c_floor)),
            ];
            let sections = vec![
                vector_section(
                    "calibrated overhead",
                    graph.labels(),
                    result.params.values(),
                ),
                vector_section(
                    "achieved throughput",
                    graph.labels(),
                    result.achieved.values(),
                ),
                Section {
                    title: "search".into(),
                    header: vec!["key".into(), "value".into()],
                    rows: vec![
                        vec!["residual".into(), fmt(result.residual_inf)],
                        vec!["converged".into(), result.converged.to_string()],
                        vec!["evaluations".into(), result.evaluations.to_string()],
                    ],
                },
            ];
            let converged = result.converged;
            emit(
                common.format,
                Document {
                    json: doc,
                    config: cfg,
                    sections,
                },
            )?;
            if converged {
                Ok(())
            } else {
                Err(CliError::NonConvergence)
            }
        }
    }
}

fn overhead_text(params: &AccessParams) -> String {
    if params.is_uniform() {
        fmt(params.get(0))
    } else {
        params
            .values()
            .iter()
            .map(|&c| fmt(c))
            .collect::<Vec<_>>()
            .join(",")
    }
}

fn stage_law_text(law: &StageLaw) -> String {
    match law {
        StageLaw::Fixed(n) => n.to_string(),
        StageLaw::Mixture(parts) => parts
            .iter()
            .map(|(n, p)| format!("{n}:{}", fmt(*p)))
            .collect::<Vec<_>>()
            .join(","),
    }
}

/// Parses `1:0.5,3:0.5` into a stage-count mixture.
fn parse_stage_mixture(text: &str) -> Result<StageLaw, CliError> {
    let mut parts = Vec::new();
    for piece in text.split(',') {
        let (count, prob) = piece
            .split_once(':')
            .ok_or_else(|| CliError::Input(format!("bad mixture component `{piece}`")))?;
        let count: u32 = count
            .trim()
            .parse()
            .map_err(|_| CliError::Input(format!("bad stage count `{count}`")))?;
        let prob: f64 = prob
            .trim()
            .parse()
            .map_err(|_| CliError::Input(format!("bad probability `{prob}`")))?;
        parts.push((count, prob));
    }
    let law = StageLaw::Mixture(parts);
    law.validate()?;
    Ok(law)
}

fn emit(format: Format, document: Document) -> Result<(), CliError> {
    print!("{}", document.render(format));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig12_rounds_and_round_trips() {
        use output::sig12;
        assert_eq!(sig12(0.5), 0.5);
        assert_eq!(sig12(0.0), 0.0);
        let x = 0.066_940_282_636_176_88;
        let rounded = sig12(x);
        assert!((rounded - x).abs() < 1e-13);
        assert_eq!(sig12(rounded), rounded);
    }

    #[test]
    fn count_parser_accepts_scientific() {
        assert_eq!(parse_count("1e6").unwrap(), 1_000_000);
        assert_eq!(parse_count("250").unwrap(), 250);
        assert!(parse_count("0").is_err());
        assert!(parse_count("abc").is_err());
    }

    #[test]
    fn stage_mixture_parser() {
        let law = parse_stage_mixture("1:0.5,3:0.5").unwrap();
        assert_eq!(law.mean(), 2.0);
        assert!(parse_stage_mixture("1:0.4,3:0.4").is_err());
        assert!(parse_stage_mixture("nonsense").is_err());
    }
}
