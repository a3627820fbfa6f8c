//! Trace capture and analysis: per-(node, domain) clock-diff traces,
//! convergence time, steady-state bands, divergence slope for unsynced
//! clocks, CSV emission, and the exhaustive fault-tolerance sweep.
//!
//! Convergence is measured relative to the domain grandmaster's own
//! diff, not absolute zero: the grandmaster itself drifts from true
//! time, and synchronized slaves track its curve.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{FaultEvent, ScenarioConfig};
use crate::time::Duration;

/// Why a trace record was emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceCause {
    Sample,
    PreSync,
    PostSync,
}

impl TraceCause {
    pub fn label(self) -> &'static str {
        match self {
            TraceCause::Sample => "sample",
            TraceCause::PreSync => "pre_sync",
            TraceCause::PostSync => "post_sync",
        }
    }

    pub fn parse(text: &str) -> Option<TraceCause> {
        match text {
            "sample" => Some(TraceCause::Sample),
            "pre_sync" => Some(TraceCause::PreSync),
            "post_sync" => Some(TraceCause::PostSync),
            _ => None,
        }
    }
}

/// One sampled point of a domain clock: the y-axis of every result plot
/// is `diff_ns = clock_time_ns - time_ns`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub time_ns: u64,
    pub node: String,
    pub domain: u8,
    pub clock_time_ns: i64,
    pub diff_ns: i64,
    pub cause: TraceCause,
}

pub const CSV_HEADER: &str = "time_ns,node,domain,clock_time_ns,diff_ns,cause";

/// Renders records as CSV, byte-deterministic for a given record list.
pub fn csv_string(records: &[TraceRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.time_ns,
            r.node,
            r.domain,
            r.clock_time_ns,
            r.diff_ns,
            r.cause.label()
        ));
    }
    out
}

pub fn emit_csv(records: &[TraceRecord], path: &std::path::Path) -> std::io::Result<()> {
    std::fs::write(path, csv_string(records))
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("line {line}: malformed trace CSV: {reason}")]
    MalformedCsv { line: usize, reason: String },
    #[error("empty trace")]
    EmptyTrace,
    #[error("too few samples in window: {found} < {required}")]
    TooFewSamples { found: usize, required: usize },
}

/// Parses trace CSV back into records; exact inverse of [`csv_string`].
pub fn parse_csv(text: &str) -> Result<Vec<TraceRecord>, MetricsError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        Some((_, other)) => {
            return Err(MetricsError::MalformedCsv {
                line: 1,
                reason: format!("bad header {other:?}"),
            })
        }
        None => return Err(MetricsError::EmptyTrace),
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let err = |reason: String| MetricsError::MalformedCsv {
            line: idx + 1,
            reason,
        };
        if fields.len() != 6 {
            return Err(err(format!("expected 6 fields, found {}", fields.len())));
        }
        records.push(TraceRecord {
            time_ns: fields[0]
                .parse()
                .map_err(|_| err(format!("bad time {:?}", fields[0])))?,
            node: fields[1].to_string(),
            domain: fields[2]
                .parse()
                .map_err(|_| err(format!("bad domain {:?}", fields[2])))?,
            clock_time_ns: fields[3]
                .parse()
                .map_err(|_| err(format!("bad clock time {:?}", fields[3])))?,
            diff_ns: fields[4]
                .parse()
                .map_err(|_| err(format!("bad diff {:?}", fields[4])))?,
            cause: TraceCause::parse(fields[5])
                .ok_or_else(|| err(format!("bad cause {:?}", fields[5])))?,
        });
    }
    Ok(records)
}

/// `sample`-cause points of one (node, domain) clock, time-ordered.
pub fn sample_series(records: &[TraceRecord], node: &str, domain: u8) -> Vec<(u64, i64)> {
    records
        .iter()
        .filter(|r| r.cause == TraceCause::Sample && r.node == node && r.domain == domain)
        .map(|r| (r.time_ns, r.diff_ns))
        .collect()
}

/// Distinct (node, domain) pairs with sample records, in trace order.
pub fn sampled_clocks(records: &[TraceRecord]) -> Vec<(String, u8)> {
    let mut seen = Vec::new();
    for r in records {
        if r.cause == TraceCause::Sample {
            let key = (r.node.clone(), r.domain);
            if !seen.contains(&key) {
                seen.push(key);
            }
        }
    }
    seen
}

/// Earliest sample instant after which |diff - gm_diff| stays within
/// `epsilon` for the remainder of the common sampling window. `None`
/// when the clock never settles.
pub fn convergence_time(
    series: &[(u64, i64)],
    gm_series: &[(u64, i64)],
    epsilon: Duration,
) -> Result<Option<u64>, MetricsError> {
    if series.is_empty() || gm_series.is_empty() {
        return Err(MetricsError::EmptyTrace);
    }
    let paired = pair_by_time(series, gm_series);
    if paired.is_empty() {
        return Err(MetricsError::EmptyTrace);
    }
    let eps = epsilon.ns();
    let mut converged_from = None;
    for &(t, diff, gm_diff) in &paired {
        if (diff - gm_diff).abs() <= eps {
            converged_from.get_or_insert(t);
        } else {
            converged_from = None;
        }
    }
    Ok(converged_from)
}

/// Pairs two sample series on equal timestamps (both are emitted on the
/// same sampling ticks; one may end early, e.g. a failed grandmaster).
fn pair_by_time(a: &[(u64, i64)], b: &[(u64, i64)]) -> Vec<(u64, i64, i64)> {
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    let mut ib = 0;
    for &(t, va) in a {
        while ib < b.len() && b[ib].0 < t {
            ib += 1;
        }
        if ib < b.len() && b[ib].0 == t {
            out.push((t, va, b[ib].1));
        }
    }
    out
}

/// Least-squares slope of diff vs time over `[window_start, window_end]`
/// sample times, in ppm. Requires at least 10 samples in the window.
pub fn divergence_slope(
    series: &[(u64, i64)],
    window_start: u64,
    window_end: u64,
) -> Result<f64, MetricsError> {
    let points: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| (window_start..=window_end).contains(t))
        .map(|&(t, d)| (t as f64, d as f64))
        .collect();
    if points.len() < 10 {
        return Err(MetricsError::TooFewSamples {
            found: points.len(),
            required: 10,
        });
    }
    let n = points.len() as f64;
    let mean_t = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_d = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (t, d) in &points {
        cov += (t - mean_t) * (d - mean_d);
        var += (t - mean_t) * (t - mean_t);
    }
    // ns per ns -> ppm
    Ok(cov / var * 1e6)
}

/// Cumulative frame and sync bookkeeping for one run, reconciled
/// one-for-one with the event log.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunCounters {
    pub frames_sent: u64,
    pub frames_delivered: u64,
    pub frames_dropped_link_down: u64,
    pub frames_filtered_blackhole: u64,
    pub frames_to_failed_node: u64,
    pub sync_applied: u64,
    pub sync_orphan_follow_up: u64,
    pub sync_stale_seq: u64,
    pub sync_missing_link_delay: u64,
    pub sync_on_non_slave_port: u64,
    pub pdelay_completed: u64,
    pub pdelay_discarded: u64,
}

/// Per-(node, domain) summary statistics. Steady-state figures cover
/// only the window after convergence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClockSummary {
    pub node: String,
    pub domain: u8,
    pub convergence_time_ns: Option<u64>,
    /// max |diff - gm_diff| over samples after convergence.
    pub max_abs_offset_vs_gm_ns: Option<i64>,
    /// Peak-to-peak of the raw diff trace after convergence (whole run
    /// when the clock never converged).
    pub peak_to_peak_ns: i64,
    pub applied_sync_count: u64,
    /// Sync-class frames destined for this clock that a black hole
    /// filtered upstream.
    pub filtered_sync_frames: u64,
    /// Sync-class frames destined for this clock lost to a dead link.
    pub dropped_sync_frames: u64,
    /// Fitted drift rate for clocks that never converged.
    pub divergence_slope_ppm: Option<f64>,
    /// Sim time of the last applied correction, if any.
    pub last_sync_ns: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PortPdelaySummary {
    pub node: String,
    pub port: String,
    pub mean_link_delay_ns: Option<i64>,
    pub neighbor_rate_ratio: f64,
    pub exchanges_completed: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub seed: u64,
    pub duration_ns: u64,
    pub events_processed: u64,
    pub epsilon_ns: i64,
    pub counters: RunCounters,
    pub clocks: Vec<ClockSummary>,
    pub pdelay: Vec<PortPdelaySummary>,
}

impl RunSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    pub fn clock(&self, node: &str, domain: u8) -> Option<&ClockSummary> {
        self.clocks
            .iter()
            .find(|c| c.node == node && c.domain == domain)
    }
}

/// Default convergence band: generous relative to the ~100 ns residuals
/// of the paper-figure parameter set, tight against real divergence.
pub const DEFAULT_EPSILON: Duration = Duration::from_us(1);

/// Per-(node, domain) analysis of a finished trace against each domain
/// grandmaster's own series.
pub struct TraceAnalysis {
    pub clocks: Vec<ClockSummary>,
}

/// Analyzes sample records. `gm_of_domain` maps a domain id to the
/// grandmaster node name; `applied` and `last_sync` carry per-clock sync
/// bookkeeping when the caller has it (runner-side), empty otherwise
/// (CSV-side analysis re-derives applied counts from post_sync records).
pub fn analyze_trace(
    records: &[TraceRecord],
    gm_of_domain: &BTreeMap<u8, String>,
    epsilon: Duration,
) -> TraceAnalysis {
    let mut clocks = Vec::new();
    for (node, domain) in sampled_clocks(records) {
        let series = sample_series(records, &node, domain);
        let gm_series = gm_of_domain
            .get(&domain)
            .map(|gm| sample_series(records, gm, domain))
            .unwrap_or_default();
        let convergence = if gm_series.is_empty() {
            None
        } else {
            convergence_time(&series, &gm_series, epsilon).unwrap_or(None)
        };

        let window: Vec<&(u64, i64)> = match convergence {
            Some(t0) => series.iter().filter(|(t, _)| *t >= t0).collect(),
            None => series.iter().collect(),
        };
        let peak_to_peak = match (
            window.iter().map(|p| p.1).max(),
            window.iter().map(|p| p.1).min(),
        ) {
            (Some(max), Some(min)) => max - min,
            _ => 0,
        };
        let max_abs_vs_gm = convergence.map(|t0| {
            pair_by_time(&series, &gm_series)
                .iter()
                .filter(|(t, _, _)| *t >= t0)
                .map(|(_, d, g)| (d - g).abs())
                .max()
                .unwrap_or(0)
        });

        let divergence = if convergence.is_none() && series.len() >= 10 {
            let t_end = series.last().map(|p| p.0).unwrap_or(0);
            let t_mid = series[series.len() / 4].0;
            divergence_slope(&series, t_mid, t_end).ok()
        } else {
            None
        };

        let (applied, last_sync) = sync_stats(records, &node, domain);

        clocks.push(ClockSummary {
            node,
            domain,
            convergence_time_ns: convergence,
            max_abs_offset_vs_gm_ns: max_abs_vs_gm,
            peak_to_peak_ns: peak_to_peak,
            applied_sync_count: applied,
            filtered_sync_frames: 0,
            dropped_sync_frames: 0,
            divergence_slope_ppm: divergence,
            last_sync_ns: last_sync,
        });
    }
    TraceAnalysis { clocks }
}

fn sync_stats(records: &[TraceRecord], node: &str, domain: u8) -> (u64, Option<u64>) {
    let mut count = 0;
    let mut last = None;
    for r in records {
        if r.cause == TraceCause::PostSync && r.node == node && r.domain == domain {
            count += 1;
            last = Some(r.time_ns);
        }
    }
    (count, last)
}

/// Infers each domain's grandmaster from a bare trace: the one node that
/// is sampled in the domain but never receives a sync correction.
pub fn infer_gms(records: &[TraceRecord]) -> BTreeMap<u8, String> {
    let mut out = BTreeMap::new();
    for (node, domain) in sampled_clocks(records) {
        let (applied, _) = sync_stats(records, &node, domain);
        if applied == 0 {
            out.entry(domain).or_insert(node);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Fault-tolerance sweep
// ---------------------------------------------------------------------------

/// Verdict for one fault subset: every pure-slave ECU must be converged
/// in at least one domain that is still live for it (a correction
/// applied within the final two sync intervals of the run).
#[derive(Debug, Clone, Serialize)]
pub struct SubsetVerdict {
    pub faults: Vec<String>,
    pub ok: bool,
    /// ECUs left without a live converged domain.
    pub stranded: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FaultSweep {
    /// Largest k such that every k-subset of the family passes.
    pub max_tolerated: usize,
    /// A failing (k+1)-subset when one exists.
    pub witness: Option<SubsetVerdict>,
    pub subsets_run: usize,
}

/// Exhaustively sweeps all subsets of `family` (desk scale: <= 8
/// candidate faults), running `run` on `base` plus each subset.
pub fn faults_tolerated<F>(
    base: &ScenarioConfig,
    family: &[FaultEvent],
    epsilon: Duration,
    mut run: F,
) -> FaultSweep
where
    F: FnMut(&ScenarioConfig) -> RunSummary,
{
    assert!(
        family.len() <= 8,
        "sweep family too large for exhaustive enumeration"
    );
    let ecus = base.slave_end_stations();
    let liveness_window = Duration::from_ns(2 * base.engine.sync_interval.ns());
    let live_after = base
        .duration
        .ns()
        .saturating_sub(liveness_window.ns() as u64);

    let mut subsets_run = 0;
    let mut verdict_for = |mask: u32| -> SubsetVerdict {
        let mut cfg = base.clone();
        let mut names = Vec::new();
        for (i, fault) in family.iter().enumerate() {
            if mask & (1 << i) != 0 {
                cfg.events.push(fault.clone());
                names.push(fault_label(fault));
            }
        }
        let summary = run(&cfg);
        let mut stranded = Vec::new();
        for ecu in &ecus {
            let covered = summary.clocks.iter().any(|c| {
                c.node == *ecu
                    && c.convergence_time_ns.is_some()
                    && c.last_sync_ns.is_some_and(|t| t >= live_after)
            });
            if !covered {
                stranded.push(ecu.clone());
            }
        }
        SubsetVerdict {
            faults: names,
            ok: stranded.is_empty(),
            stranded,
        }
    };

    let n = family.len();
    let mut witness = None;
    let mut max_tolerated = n;
    'sizes: for k in 1..=n {
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != k {
                continue;
            }
            subsets_run += 1;
            let verdict = verdict_for(mask);
            if !verdict.ok {
                max_tolerated = k - 1;
                witness = Some(verdict);
                break 'sizes;
            }
        }
    }
    let _ = epsilon; // epsilon is applied by the runner when summarizing
    FaultSweep {
        max_tolerated,
        witness,
        subsets_run,
    }
}

pub fn fault_label(fault: &FaultEvent) -> String {
    match &fault.kind {
        crate::scenario::FaultKind::ClockFailure { node } => format!("clock_failure({node})"),
        crate::scenario::FaultKind::LinkFailure { link } => format!("link_failure({link})"),
        crate::scenario::FaultKind::BlackHole { node, port, .. } => {
            format!("blackhole({node}.{port})")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: u64, node: &str, d: u8, diff: i64, cause: TraceCause) -> TraceRecord {
        TraceRecord {
            time_ns: t,
            node: node.into(),
            domain: d,
            clock_time_ns: t as i64 + diff,
            diff_ns: diff,
            cause,
        }
    }

    #[test]
    fn csv_roundtrip_is_lossless() {
        let records = vec![
            rec(0, "a", 0, 0, TraceCause::Sample),
            rec(10, "a", 0, -5, TraceCause::PreSync),
            rec(10, "a", 0, 1, TraceCause::PostSync),
            rec(20, "b", 3, 42, TraceCause::Sample),
        ];
        let text = csv_string(&records);
        assert_eq!(parse_csv(&text).unwrap(), records);
    }

    #[test]
    fn empty_records_give_header_only() {
        let text = csv_string(&[]);
        assert_eq!(text, format!("{CSV_HEADER}\n"));
        assert_eq!(parse_csv(&text).unwrap(), vec![]);
    }

    #[test]
    fn one_record_gives_two_lines() {
        let text = csv_string(&[rec(5, "n", 1, 7, TraceCause::Sample)]);
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(matches!(
            parse_csv("not,a,header\n"),
            Err(MetricsError::MalformedCsv { line: 1, .. })
        ));
        let bad = format!("{CSV_HEADER}\n1,a,0,zzz,0,sample\n");
        assert!(matches!(
            parse_csv(&bad),
            Err(MetricsError::MalformedCsv { line: 2, .. })
        ));
    }

    #[test]
    fn identical_traces_converge_at_first_sample() {
        let series: Vec<(u64, i64)> = (0..100).map(|k| (k * 10, 50)).collect();
        let t = convergence_time(&series, &series, Duration::from_ns(1)).unwrap();
        assert_eq!(t, Some(0));
    }

    #[test]
    fn diverging_trace_never_converges() {
        // 100 ppm away from a flat reference.
        let series: Vec<(u64, i64)> = (0..2000u64)
            .map(|k| {
                let t = k * 10_000_000;
                (t, (t as f64 * 100e-6) as i64)
            })
            .collect();
        let gm: Vec<(u64, i64)> = series.iter().map(|&(t, _)| (t, 0)).collect();
        let t = convergence_time(&series, &gm, Duration::from_us(1)).unwrap();
        assert_eq!(t, None);
    }

    #[test]
    fn convergence_after_initial_transient() {
        let mut series = Vec::new();
        for k in 0..100u64 {
            let t = k * 10;
            let diff = if k < 20 {
                1_000_000 - (k as i64) * 50_000
            } else {
                3
            };
            series.push((t, diff));
        }
        let gm: Vec<(u64, i64)> = series.iter().map(|&(t, _)| (t, 0)).collect();
        let t = convergence_time(&series, &gm, Duration::from_ns(100)).unwrap();
        assert_eq!(t, Some(200));
    }

    #[test]
    fn empty_trace_is_an_error() {
        assert_eq!(
            convergence_time(&[], &[(0, 0)], Duration::from_ns(1)),
            Err(MetricsError::EmptyTrace)
        );
    }

    #[test]
    fn slope_of_constant_drift_trace() {
        // +100 ppm: diff grows 100 ns per ms.
        let series: Vec<(u64, i64)> = (0..100).map(|k| (k * 1_000_000, k as i64 * 100)).collect();
        let slope = divergence_slope(&series, 0, u64::MAX).unwrap();
        assert!((slope - 100.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn slope_of_flat_trace_is_zero() {
        let series: Vec<(u64, i64)> = (0..50).map(|k| (k * 1000, 7)).collect();
        let slope = divergence_slope(&series, 0, u64::MAX).unwrap();
        assert_eq!(slope, 0.0);
    }

    #[test]
    fn slope_requires_ten_samples() {
        let series: Vec<(u64, i64)> = (0..5).map(|k| (k, 0)).collect();
        assert!(matches!(
            divergence_slope(&series, 0, u64::MAX),
            Err(MetricsError::TooFewSamples {
                found: 5,
                required: 10
            })
        ));
    }

    #[test]
    fn gm_inference_picks_uncorrected_node() {
        let records = vec![
            rec(0, "gm", 0, 3, TraceCause::Sample),
            rec(0, "slave", 0, 9, TraceCause::Sample),
            rec(5, "slave", 0, 9, TraceCause::PreSync),
            rec(5, "slave", 0, 3, TraceCause::PostSync),
        ];
        let gms = infer_gms(&records);
        assert_eq!(gms.get(&0).map(String::as_str), Some("gm"));
    }
}
