//! Command-line front end: run scenarios, analyze traces, run
//! fault-tolerance sweeps, list built-ins.
//!
//! Exit codes: 0 success, 1 runtime failure (I/O), 2 usage or
//! validation failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use gptpsim::metrics::{
    analyze_trace, csv_string, faults_tolerated, infer_gms, parse_csv, MetricsError,
    DEFAULT_EPSILON,
};
use gptpsim::runner::{gm_fault_family, ring_link_fault_family, run_scenario_with_epsilon};
use gptpsim::scenario::{
    builtin, builtin_description, parse_scenario, ScenarioConfig, BUILTIN_NAMES,
};
use gptpsim::time::{Duration, SimTime};

#[derive(Parser)]
#[command(
    name = "gptpsim",
    about = "Deterministic gPTP time-synchronization simulator for automotive Ethernet rings",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario; writes trace.csv, summary.json, events.log.
    Run {
        /// Built-in scenario name (see `gptpsim list`).
        #[arg(long, conflicts_with = "scenario")]
        builtin: Option<String>,
        /// Scenario file path.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Seed override (falls back to GPTPSIM_SEED, then the
        /// scenario's own seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory, created if absent.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Duration override, e.g. `20s`.
        #[arg(long)]
        duration: Option<String>,
        /// Convergence epsilon for the summary, e.g. `1us`.
        #[arg(long)]
        epsilon: Option<String>,
    },
    /// Analyze a trace.csv: convergence, offsets, divergence slopes.
    Analyze {
        #[arg(long)]
        trace: PathBuf,
        /// Convergence epsilon, e.g. `1us`.
        #[arg(long)]
        epsilon: Option<String>,
    },
    /// Exhaustive fault-tolerance sweep over a fault family.
    Sweep {
        #[arg(long, conflicts_with = "scenario")]
        builtin: Option<String>,
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Which fault family to sweep.
        #[arg(long, value_enum)]
        family: Family,
        /// Injection time for every candidate fault.
        #[arg(long, default_value = "4s")]
        at: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epsilon: Option<String>,
    },
    /// List built-in scenarios.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    /// One clock failure per grandmaster node.
    GmClocks,
    /// One link failure per bridge-to-bridge ring link.
    RingLinks,
}

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            builtin,
            scenario,
            seed,
            out,
            duration,
            epsilon,
        } => cmd_run(builtin, scenario, seed, out, duration, epsilon),
        Command::Analyze { trace, epsilon } => cmd_analyze(&trace, epsilon),
        Command::Sweep {
            builtin,
            scenario,
            family,
            at,
            seed,
            epsilon,
        } => cmd_sweep(builtin, scenario, family, at, seed, epsilon),
        Command::List => cmd_list(),
    }
}

fn fail_usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn fail_runtime(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_RUNTIME)
}

fn env_seed() -> Option<u64> {
    std::env::var("GPTPSIM_SEED")
        .ok()
        .and_then(|v| v.parse().ok())
}

/// Loads a scenario from a builtin name or file and applies overrides.
fn load_scenario(
    builtin_name: Option<String>,
    path: Option<PathBuf>,
    seed: Option<u64>,
    duration: Option<String>,
) -> Result<ScenarioConfig, ExitCode> {
    let mut cfg = match (builtin_name, path) {
        (Some(name), None) => builtin(&name).ok_or_else(|| {
            fail_usage(format_args!(
                "unknown builtin {name:?}; available: {}",
                BUILTIN_NAMES.join(", ")
            ))
        })?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| fail_runtime(format_args!("cannot read {}: {e}", path.display())))?;
            parse_scenario(&text).map_err(|errs| {
                for err in &errs {
                    eprintln!("{}: {err}", path.display());
                }
                ExitCode::from(EXIT_USAGE)
            })?
        }
        _ => {
            return Err(fail_usage(
                "exactly one of --builtin or --scenario is required",
            ))
        }
    };
    if let Some(seed) = seed.or_else(env_seed) {
        cfg.seed = seed;
    }
    if let Some(text) = duration {
        cfg.duration = text
            .parse::<SimTime>()
            .map_err(|e| fail_usage(format_args!("invalid duration: {e}")))?;
    }
    Ok(cfg)
}

fn parse_epsilon(epsilon: Option<String>) -> Result<Duration, ExitCode> {
    match epsilon {
        Some(text) => text
            .parse::<Duration>()
            .map_err(|e| fail_usage(format_args!("invalid epsilon: {e}"))),
        None => Ok(DEFAULT_EPSILON),
    }
}

fn cmd_run(
    builtin_name: Option<String>,
    scenario: Option<PathBuf>,
    seed: Option<u64>,
    out_dir: PathBuf,
    duration: Option<String>,
    epsilon: Option<String>,
) -> ExitCode {
    let cfg = match load_scenario(builtin_name, scenario, seed, duration) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    let epsilon = match parse_epsilon(epsilon) {
        Ok(e) => e,
        Err(code) => return code,
    };

    let output = match run_scenario_with_epsilon(&cfg, epsilon) {
        Ok(output) => output,
        Err(errs) => {
            for err in &errs {
                eprintln!("error: {err}");
            }
            return ExitCode::from(EXIT_USAGE);
        }
    };

    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        return fail_runtime(format_args!("cannot create {}: {e}", out_dir.display()));
    }
    let write = |name: &str, contents: String| -> Result<(), ExitCode> {
        let path = out_dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| fail_runtime(format_args!("cannot write {}: {e}", path.display())))
    };
    if let Err(code) = write("trace.csv", csv_string(&output.trace))
        .and_then(|_| write("summary.json", output.summary.to_json()))
        .and_then(|_| write("events.log", output.log.to_text()))
    {
        return code;
    }

    let converged = output
        .summary
        .clocks
        .iter()
        .filter(|c| c.convergence_time_ns.is_some())
        .count();
    println!(
        "{}: seed {}, simulated {}, {} events, {}/{} clocks converged (epsilon {})",
        output.summary.scenario,
        output.summary.seed,
        SimTime::from_ns(output.summary.duration_ns),
        output.summary.events_processed,
        converged,
        output.summary.clocks.len(),
        epsilon,
    );
    println!(
        "wrote {}, {}, {}",
        out_dir.join("trace.csv").display(),
        out_dir.join("summary.json").display(),
        out_dir.join("events.log").display()
    );
    ExitCode::SUCCESS
}

fn cmd_analyze(trace_path: &Path, epsilon: Option<String>) -> ExitCode {
    let epsilon = match parse_epsilon(epsilon) {
        Ok(e) => e,
        Err(code) => return code,
    };
    let text = match std::fs::read_to_string(trace_path) {
        Ok(text) => text,
        Err(e) => return fail_runtime(format_args!("cannot read {}: {e}", trace_path.display())),
    };
    let records = match parse_csv(&text) {
        Ok(records) => records,
        Err(e) => return fail_usage(e),
    };
    if records.is_empty() {
        return fail_usage(MetricsError::EmptyTrace);
    }

    let gms = infer_gms(&records);
    let analysis = analyze_trace(&records, &gms, epsilon);
    println!("trace: {} records, epsilon {epsilon}", records.len());
    for (domain, gm) in &gms {
        println!("domain {domain}: grandmaster {gm}");
    }
    for clock in &analysis.clocks {
        let is_gm = gms.get(&clock.domain).is_some_and(|gm| *gm == clock.node);
        if is_gm {
            println!(
                "{} d{}: grandmaster, peak-to-peak {} ns",
                clock.node, clock.domain, clock.peak_to_peak_ns
            );
        } else {
            match clock.convergence_time_ns {
                Some(t) => println!(
                    "{} d{}: converged at {}, max offset vs GM {} ns, peak-to-peak {} ns, \
                     {} syncs applied",
                    clock.node,
                    clock.domain,
                    SimTime::from_ns(t),
                    clock.max_abs_offset_vs_gm_ns.unwrap_or(0),
                    clock.peak_to_peak_ns,
                    clock.applied_sync_count,
                ),
                None => {
                    let slope = clock
                        .divergence_slope_ppm
                        .map(|s| format!("{s:.3} ppm"))
                        .unwrap_or_else(|| "n/a".to_string());
                    println!(
                        "{} d{}: not converged, divergence slope {}, peak-to-peak {} ns, \
                         {} syncs applied",
                        clock.node,
                        clock.domain,
                        slope,
                        clock.peak_to_peak_ns,
                        clock.applied_sync_count,
                    );
                }
            }
        }
    }
    let converged = analysis
        .clocks
        .iter()
        .filter(|c| c.convergence_time_ns.is_some())
        .count();
    println!("{converged}/{} clocks converged", analysis.clocks.len());
    ExitCode::SUCCESS
}

fn cmd_sweep(
    builtin_name: Option<String>,
    scenario: Option<PathBuf>,
    family: Family,
    at: String,
    seed: Option<u64>,
    epsilon: Option<String>,
) -> ExitCode {
    let cfg = match load_scenario(builtin_name, scenario, seed, None) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    let epsilon = match parse_epsilon(epsilon) {
        Ok(e) => e,
        Err(code) => return code,
    };
    let at = match at.parse::<SimTime>() {
        Ok(at) => at,
        Err(e) => return fail_usage(format_args!("invalid --at: {e}")),
    };
    if at > cfg.duration {
        return fail_usage(format_args!(
            "--at {at} is beyond the scenario duration {}",
            cfg.duration
        ));
    }

    let candidates = match family {
        Family::GmClocks => gm_fault_family(&cfg, at),
        Family::RingLinks => ring_link_fault_family(&cfg, at),
    };
    if candidates.is_empty() {
        return fail_usage("fault family is empty for this scenario");
    }
    println!(
        "sweeping {} candidate faults on {} (epsilon {epsilon}, injected at {at})",
        candidates.len(),
        cfg.name
    );
    for fault in &candidates {
        println!("  candidate: {}", gptpsim::metrics::fault_label(fault));
    }

    let sweep = faults_tolerated(&cfg, &candidates, epsilon, |c| {
        run_scenario_with_epsilon(c, epsilon)
            .expect("base scenario validated")
            .summary
    });
    println!(
        "max tolerated faults: k = {} ({} subsets simulated)",
        sweep.max_tolerated, sweep.subsets_run
    );
    match &sweep.witness {
        Some(witness) => println!(
            "failing {}-subset: {} (stranded: {})",
            witness.faults.len(),
            witness.faults.join(" + "),
            witness.stranded.join(", ")
        ),
        None => println!("no failing subset: the whole family is tolerated"),
    }
    ExitCode::SUCCESS
}

fn cmd_list() -> ExitCode {
    for name in BUILTIN_NAMES {
        println!("{name:<12} {}", builtin_description(name));
    }
    ExitCode::SUCCESS
}
