//! Drifting hardware oscillators and per-domain disciplined clocks.
//!
//! An [`Oscillator`] is a piecewise-affine map from ground-truth
//! simulation time to a node's free-running local time. Segment rates are
//! held as integer parts-per-trillion offsets from nominal so that local
//! time is computed exactly in integer nanoseconds; the residuals this
//! simulator measures are far below a nanosecond of float error budget.
//!
//! A [`DomainClock`] layers an affine correction on top of the raw local
//! time, one per (node, time domain). Sync corrections step the clock so
//! that domain time equals the master's estimate at the correction
//! instant; between corrections the clock runs at the oscillator rate
//! (optionally scaled by a syntonization ratio).

use crate::sim::RngStream;
use crate::time::{Duration, SimTime, NS_PER_SEC};

const PPT_PER_UNIT: i128 = 1_000_000_000_000; // parts-per-trillion scale

/// How an oscillator's rate deviates from nominal.
#[derive(Debug, Clone, PartialEq)]
pub enum DriftModel {
    /// Ideal oscillator: local time equals simulation time.
    None,
    /// Fixed rate offset in parts per million.
    Constant { rate_ppm: f64 },
    /// Every `step_interval`, the rate is redrawn uniformly within
    /// `±step_bound` of nominal, where `step_bound` is expressed as local
    /// time gained-or-lost per second. The time offset then performs a
    /// random walk.
    RandomWalk {
        step_bound: Duration,
        step_interval: Duration,
    },
}

impl DriftModel {
    /// Largest possible |rate − 1| for this model, as a dimensionless
    /// ratio. Used by band-width assertions.
    pub fn rate_bound(&self) -> f64 {
        match self {
            DriftModel::None => 0.0,
            DriftModel::Constant { rate_ppm } => rate_ppm.abs() * 1e-6,
            DriftModel::RandomWalk { step_bound, .. } => {
                step_bound.ns().abs() as f64 / NS_PER_SEC as f64
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    start: SimTime,
    /// Rate offset from nominal in parts per trillion.
    rate_ppt: i64,
    local_at_start: Duration,
}

impl Segment {
    fn local_at(&self, t: SimTime) -> Duration {
        let elapsed = t.elapsed_since(self.start).ns();
        debug_assert!(elapsed >= 0);
        let extra = (elapsed as i128 * self.rate_ppt as i128).div_euclid(PPT_PER_UNIT);
        Duration::from_ns(self.local_at_start.ns() + elapsed + extra as i64)
    }
}

/// A free-running drifting hardware clock.
#[derive(Debug, Clone)]
pub struct Oscillator {
    drift: DriftModel,
    rng: RngStream,
    segments: Vec<Segment>,
    /// Simulation time up to which segments are materialized
    /// (inclusive). Infinite for non-random models.
    covered_until: SimTime,
}

impl Oscillator {
    pub fn new(drift: DriftModel, rng: RngStream) -> Self {
        let mut osc = Oscillator {
            drift,
            rng,
            segments: Vec::new(),
            covered_until: SimTime::ZERO,
        };
        match osc.drift {
            DriftModel::None => {
                osc.segments.push(Segment {
                    start: SimTime::ZERO,
                    rate_ppt: 0,
                    local_at_start: Duration::ZERO,
                });
                osc.covered_until = SimTime::from_ns(u64::MAX);
            }
            DriftModel::Constant { rate_ppm } => {
                osc.segments.push(Segment {
                    start: SimTime::ZERO,
                    rate_ppt: (rate_ppm * 1e6).round() as i64,
                    local_at_start: Duration::ZERO,
                });
                osc.covered_until = SimTime::from_ns(u64::MAX);
            }
            DriftModel::RandomWalk { .. } => {}
        }
        osc
    }

    pub fn drift(&self) -> &DriftModel {
        &self.drift
    }

    /// Materializes drift segments so local time is defined up to and
    /// including `until`. Returns the total segment count.
    pub fn advance_drift(&mut self, until: SimTime) -> usize {
        if let DriftModel::RandomWalk {
            step_bound,
            step_interval,
        } = self.drift
        {
            let bound = step_bound.ns() as f64; // ns gained/lost per second
            while self.covered_until < until || self.segments.is_empty() {
                let draw = self.rng.draw_uniform(-bound, bound).expect("valid range");
                // ns-per-second offset -> parts per trillion
                let rate_ppt = (draw * 1e3).round() as i64;
                let start = self.covered_until;
                let local_at_start = match self.segments.last() {
                    Some(prev) => prev.local_at(start),
                    None => Duration::ZERO,
                };
                self.segments.push(Segment {
                    start,
                    rate_ppt,
                    local_at_start,
                });
                self.covered_until = start + step_interval;
            }
        }
        self.segments.len()
    }

    /// Raw local clock reading at simulation time `t`. Segments must
    /// already be materialized up to `t` (see [`Oscillator::advance_drift`]).
    pub fn local_time(&self, t: SimTime) -> Duration {
        assert!(
            t <= self.covered_until && !self.segments.is_empty(),
            "oscillator drift not materialized up to {t}"
        );
        let idx = match self.segments.binary_search_by(|s| s.start.cmp(&t)) {
            Ok(i) => i,
            Err(0) => unreachable!("first segment starts at time zero"),
            Err(i) => i - 1,
        };
        self.segments[idx].local_at(t)
    }

    /// Convenience: materialize then read.
    pub fn local_time_at(&mut self, t: SimTime) -> Duration {
        self.advance_drift(t);
        self.local_time(t)
    }

    /// Rate offset from nominal (ppt) of the segment active at `t`.
    pub fn rate_ppt_at(&self, t: SimTime) -> i64 {
        let idx = match self.segments.binary_search_by(|s| s.start.cmp(&t)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        self.segments[idx].rate_ppt
    }
}

/// Per-(node, domain) disciplined software clock: an affine correction
/// over the node's raw local time.
#[derive(Debug, Clone)]
pub struct DomainClock {
    origin_local: Duration,
    origin_domain: Duration,
    rate_ratio: f64,
    last_sync: Option<(SimTime, u16)>,
}

impl Default for DomainClock {
    fn default() -> Self {
        Self::identity()
    }
}

impl DomainClock {
    /// Before the first sync the map is the identity: domain time equals
    /// raw local time. Grandmasters keep the identity map forever.
    pub fn identity() -> Self {
        DomainClock {
            origin_local: Duration::ZERO,
            origin_domain: Duration::ZERO,
            rate_ratio: 1.0,
            last_sync: None,
        }
    }

    pub fn last_sync(&self) -> Option<(SimTime, u16)> {
        self.last_sync
    }

    pub fn rate_ratio(&self) -> f64 {
        self.rate_ratio
    }

    /// Domain time corresponding to raw local reading `local`.
    pub fn domain_time(&self, local: Duration) -> Duration {
        let elapsed = local - self.origin_local;
        if self.rate_ratio == 1.0 {
            self.origin_domain + elapsed
        } else {
            let scaled = (elapsed.ns() as f64 * self.rate_ratio).round() as i64;
            self.origin_domain + Duration::from_ns(scaled)
        }
    }

    /// Steps the clock so that domain time at local reading `at_local`
    /// equals `master_estimate` exactly, and adopts `rate_ratio` for the
    /// span until the next correction. Returns the (pre, post) domain
    /// times at the correction instant for tracing.
    pub fn apply_correction(
        &mut self,
        master_estimate: Duration,
        at_local: Duration,
        rate_ratio: f64,
        at_sim: SimTime,
        seq: u16,
    ) -> (Duration, Duration) {
        assert!(rate_ratio > 0.0, "rate_ratio must be positive");
        let pre = self.domain_time(at_local);
        self.origin_local = at_local;
        self.origin_domain = master_estimate;
        self.rate_ratio = rate_ratio;
        self.last_sync = Some((at_sim, seq));
        (pre, master_estimate)
    }
}

/// Difference between a clock's domain time and ground-truth simulation
/// time at one instant — the quantity every result trace plots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClockDiff {
    pub sim_time: SimTime,
    pub diff: Duration,
}

/// Diff of a (clock, oscillator) pair at `t`. The oscillator must be
/// materialized up to `t`.
pub fn clock_diff(clk: &DomainClock, osc: &Oscillator, t: SimTime) -> ClockDiff {
    let domain = clk.domain_time(osc.local_time(t));
    ClockDiff {
        sim_time: t,
        diff: domain - t.as_duration(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::NS_PER_MS;

    fn walk(step_ns: i64, interval: Duration, seed: u64, id: &str) -> Oscillator {
        Oscillator::new(
            DriftModel::RandomWalk {
                step_bound: Duration::from_ns(step_ns),
                step_interval: interval,
            },
            RngStream::new(seed, id),
        )
    }

    #[test]
    fn no_drift_is_identity() {
        let mut osc = Oscillator::new(DriftModel::None, RngStream::new(1, "x"));
        assert_eq!(
            osc.local_time_at(SimTime::from_secs(5)),
            Duration::from_secs(5)
        );
        assert_eq!(osc.advance_drift(SimTime::from_secs(60)), 1);
    }

    #[test]
    fn constant_100ppm_gains_200us_over_2s() {
        // rate 1.0001: +100 us per second.
        let mut osc = Oscillator::new(
            DriftModel::Constant { rate_ppm: 100.0 },
            RngStream::new(1, "x"),
        );
        assert_eq!(
            osc.local_time_at(SimTime::from_secs(2)),
            Duration::from_secs(2) + Duration::from_us(200)
        );
    }

    #[test]
    fn random_walk_segment_count_matches_elapsed_intervals() {
        let mut osc = walk(100_000, Duration::from_secs(1), 9, "n");
        assert_eq!(osc.advance_drift(SimTime::from_secs(10)), 10);
        // Re-advancing to the same horizon adds nothing.
        assert_eq!(osc.advance_drift(SimTime::from_secs(10)), 10);
    }

    #[test]
    fn random_walk_equals_sum_of_per_second_rates() {
        let mut osc = walk(100_000, Duration::from_secs(1), 4, "sum");
        osc.advance_drift(SimTime::from_secs(10));
        let mut expected = 0i128;
        for k in 0..10 {
            let rate = osc.rate_ppt_at(SimTime::from_ns(k * NS_PER_SEC as u64)) as i128;
            // one full second at this rate
            expected += NS_PER_SEC as i128 + (NS_PER_SEC as i128 * rate).div_euclid(PPT_PER_UNIT);
        }
        let got = osc.local_time(SimTime::from_secs(10)).ns() as i128;
        assert!(
            (got - expected).abs() <= 10,
            "got {got}, expected {expected}"
        );
    }

    #[test]
    fn random_walk_matches_per_ns_accumulation_oracle() {
        // Brute-force oracle: accumulate local time nanosecond by
        // nanosecond in pico-resolution across a 10 ms window spanning a
        // segment boundary, and compare to the closed-form evaluation.
        let mut osc = walk(100_000, Duration::from_secs(1), 11, "oracle");
        osc.advance_drift(SimTime::from_secs(2));

        let window_start = SimTime::from_ns(995_000_000); // 5 ms before the 1 s boundary
        let window_len = 10 * NS_PER_MS as u64;

        let mut acc_pico = osc.local_time(window_start).ns() as i128 * PPT_PER_UNIT;
        for off in 0..window_len {
            let t = SimTime::from_ns(window_start.ns() + off);
            let rate = osc.rate_ppt_at(t) as i128;
            acc_pico += PPT_PER_UNIT + rate;
            let t_next = SimTime::from_ns(t.ns() + 1);
            let got = osc.local_time(t_next).ns() as i128;
            let oracle = acc_pico.div_euclid(PPT_PER_UNIT);
            assert!(
                (got - oracle).abs() <= 1,
                "divergence at offset {off}: got {got}, oracle {oracle}"
            );
        }
    }

    #[test]
    fn same_seed_different_streams_draw_different_rates() {
        let mut a = walk(100_000, Duration::from_secs(1), 5, "node_a");
        let mut b = walk(100_000, Duration::from_secs(1), 5, "node_b");
        a.advance_drift(SimTime::from_secs(10));
        b.advance_drift(SimTime::from_secs(10));
        let differs = (0..10).any(|k| {
            let t = SimTime::from_secs(k);
            a.rate_ppt_at(t) != b.rate_ppt_at(t)
        });
        assert!(differs);
    }

    #[test]
    fn rates_confined_to_step_bound() {
        let mut osc = walk(500, Duration::from_secs(1), 17, "bound");
        osc.advance_drift(SimTime::from_secs(100));
        for k in 0..100 {
            let rate = osc.rate_ppt_at(SimTime::from_secs(k));
            assert!(
                rate.abs() <= 500_000,
                "rate {rate} ppt exceeds 500 ns/s bound"
            );
        }
    }

    #[test]
    fn local_time_is_monotone() {
        let mut osc = walk(100_000, Duration::from_secs(1), 23, "mono");
        osc.advance_drift(SimTime::from_secs(3));
        let mut prev = osc.local_time(SimTime::ZERO);
        for k in 1..30_000u64 {
            let t = SimTime::from_ns(k * 100_000); // 0.1 ms steps
            let cur = osc.local_time(t);
            assert!(cur > prev, "local time not strictly increasing at {t}");
            prev = cur;
        }
    }

    #[test]
    fn identity_domain_clock_tracks_local() {
        let clk = DomainClock::identity();
        let mut osc = Oscillator::new(DriftModel::None, RngStream::new(1, "x"));
        let t = SimTime::from_secs(3);
        let local = osc.local_time_at(t);
        assert_eq!(clk.domain_time(local), Duration::from_secs(3));
        assert_eq!(clock_diff(&clk, &osc, t).diff, Duration::ZERO);
    }

    #[test]
    fn affine_offset_map() {
        let mut clk = DomainClock::identity();
        clk.apply_correction(
            Duration::from_secs(1) + Duration::from_ns(500),
            Duration::from_secs(1),
            1.0,
            SimTime::from_secs(1),
            0,
        );
        assert_eq!(
            clk.domain_time(Duration::from_secs(2)),
            Duration::from_secs(2) + Duration::from_ns(500)
        );
    }

    #[test]
    fn correction_steps_exactly_to_estimate() {
        let mut clk = DomainClock::identity();
        // Clock reads 5.000010 s locally; master estimate says 5.000000 s.
        let (pre, post) = clk.apply_correction(
            Duration::from_secs(5),
            Duration::from_secs(5) + Duration::from_us(10),
            1.0,
            SimTime::from_secs(5),
            1,
        );
        assert_eq!(pre, Duration::from_secs(5) + Duration::from_us(10));
        assert_eq!(post, Duration::from_secs(5));
        assert_eq!(
            clk.domain_time(Duration::from_secs(5) + Duration::from_us(10)),
            Duration::from_secs(5)
        );
    }

    #[test]
    fn correction_on_already_correct_clock_is_noop() {
        let mut clk = DomainClock::identity();
        let (pre, post) = clk.apply_correction(
            Duration::from_secs(2),
            Duration::from_secs(2),
            1.0,
            SimTime::from_secs(2),
            0,
        );
        assert_eq!(pre, post);
        assert_eq!(
            clk.domain_time(Duration::from_secs(3)),
            Duration::from_secs(3)
        );
    }

    #[test]
    fn sawtooth_against_closed_form() {
        // Slave at constant +100 ppm, ideal master (true time), step
        // corrections every 125 ms. Peak |diff| right before each
        // correction must equal relative rate x interval.
        let mut osc = Oscillator::new(
            DriftModel::Constant { rate_ppm: 100.0 },
            RngStream::new(1, "slave"),
        );
        let mut clk = DomainClock::identity();
        let interval = Duration::from_ms(125);
        let expected_peak = (100e-6 * interval.ns() as f64).round() as i64; // 12_500 ns

        let mut t = SimTime::ZERO;
        for seq in 0..160u16 {
            t = t + interval;
            let local = osc.local_time_at(t);
            let pre = clk.domain_time(local) - t.as_duration();
            if seq > 0 {
                assert!(
                    (pre.ns() - expected_peak).abs() <= 1,
                    "sawtooth peak {} != {}",
                    pre.ns(),
                    expected_peak
                );
            }
            // Ideal correction: master domain time == true time.
            clk.apply_correction(t.as_duration(), local, 1.0, t, seq);
            let post = clock_diff(&clk, &osc, t);
            assert_eq!(post.diff, Duration::ZERO);
        }
    }

    #[test]
    fn diff_slope_between_corrections_matches_rate() {
        // d(diff)/dt == oscillator rate - 1 within 1 ns over a >= 1 ms window.
        let mut osc = Oscillator::new(
            DriftModel::Constant { rate_ppm: -40.0 },
            RngStream::new(1, "s"),
        );
        let clk = DomainClock::identity();
        let t0 = SimTime::from_ms(10);
        let t1 = SimTime::from_ms(20);
        osc.advance_drift(t1);
        let d0 = clock_diff(&clk, &osc, t0).diff;
        let d1 = clock_diff(&clk, &osc, t1).diff;
        let slope = (d1 - d0).ns() as f64 / (t1 - t0).ns() as f64;
        assert!((slope - (-40e-6)).abs() < 1e-7, "slope {slope}");
    }
}
