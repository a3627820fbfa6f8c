//! gPTP protocol state and arithmetic: two-step Sync/Follow_Up
//! dissemination, correction-field accumulation, peer-delay measurement,
//! and neighbor rate ratio estimation.
//!
//! Roles are static for a whole run (no best-master election): each
//! (port, domain) is master, slave, or passive, fixed by the scenario.
//! The per-node state machines here are plain data driven by the
//! simulation runner; the pure protocol formulas are free functions so
//! they can be checked against hand-computed values.

use crate::net::{DomainId, PortId};
use crate::time::{Duration, SimTime};

/// Payload of one gPTP frame. Structured values, not octet-exact PDUs.
#[derive(Debug, Clone, PartialEq)]
pub enum GptpMessage {
    Sync {
        domain: DomainId,
        seq: u16,
    },
    FollowUp {
        domain: DomainId,
        seq: u16,
        /// Grandmaster domain time at the original Sync's egress.
        precise_origin: Duration,
        /// Accumulated link delays and bridge residence times upstream.
        correction: Duration,
        /// Cumulative grandmaster-to-sender frequency ratio (1.0 when
        /// rate-ratio accumulation is disabled).
        rate_ratio: f64,
    },
    PdelayReq {
        seq: u16,
    },
    PdelayResp {
        seq: u16,
        /// Responder local time at request ingress.
        t2: Duration,
    },
    PdelayRespFollowUp {
        seq: u16,
        /// Responder local time at response egress.
        t3: Duration,
    },
}

/// Message class, used for black-hole filter sets and frame sizing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MsgClass {
    Sync,
    FollowUp,
    PdelayReq,
    PdelayResp,
    PdelayRespFollowUp,
}

impl MsgClass {
    pub const ALL: [MsgClass; 5] = [
        MsgClass::Sync,
        MsgClass::FollowUp,
        MsgClass::PdelayReq,
        MsgClass::PdelayResp,
        MsgClass::PdelayRespFollowUp,
    ];

    pub fn label(self) -> &'static str {
        match self {
            MsgClass::Sync => "sync",
            MsgClass::FollowUp => "follow_up",
            MsgClass::PdelayReq => "pdelay_req",
            MsgClass::PdelayResp => "pdelay_resp",
            MsgClass::PdelayRespFollowUp => "pdelay_resp_follow_up",
        }
    }

    pub fn parse(text: &str) -> Option<MsgClass> {
        MsgClass::ALL.into_iter().find(|c| c.label() == text)
    }
}

impl GptpMessage {
    pub fn class(&self) -> MsgClass {
        match self {
            GptpMessage::Sync { .. } => MsgClass::Sync,
            GptpMessage::FollowUp { .. } => MsgClass::FollowUp,
            GptpMessage::PdelayReq { .. } => MsgClass::PdelayReq,
            GptpMessage::PdelayResp { .. } => MsgClass::PdelayResp,
            GptpMessage::PdelayRespFollowUp { .. } => MsgClass::PdelayRespFollowUp,
        }
    }

    pub fn domain(&self) -> Option<DomainId> {
        match self {
            GptpMessage::Sync { domain, .. } | GptpMessage::FollowUp { domain, .. } => {
                Some(*domain)
            }
            _ => None,
        }
    }

    pub fn seq(&self) -> u16 {
        match self {
            GptpMessage::Sync { seq, .. }
            | GptpMessage::FollowUp { seq, .. }
            | GptpMessage::PdelayReq { seq }
            | GptpMessage::PdelayResp { seq, .. }
            | GptpMessage::PdelayRespFollowUp { seq, .. } => *seq,
        }
    }
}

/// A set of message classes, e.g. what a black-holing switch discards.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MsgClassSet(u8);

impl MsgClassSet {
    pub const EMPTY: MsgClassSet = MsgClassSet(0);

    /// The default black-hole filter: synchronization messages only.
    pub fn sync_pair() -> MsgClassSet {
        MsgClassSet::EMPTY
            .with(MsgClass::Sync)
            .with(MsgClass::FollowUp)
    }

    pub fn with(self, class: MsgClass) -> MsgClassSet {
        MsgClassSet(self.0 | 1 << class as u8)
    }

    pub fn contains(self, class: MsgClass) -> bool {
        self.0 & (1 << class as u8) != 0
    }

    pub fn iter(self) -> impl Iterator<Item = MsgClass> {
        MsgClass::ALL.into_iter().filter(move |c| self.contains(*c))
    }
}

/// Static role of a port within one time domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PortRole {
    Master,
    Slave,
    /// Receives nothing, sends nothing; breaks the ring loop.
    #[default]
    Passive,
    Disabled,
}

impl PortRole {
    pub fn label(self) -> &'static str {
        match self {
            PortRole::Master => "master",
            PortRole::Slave => "slave",
            PortRole::Passive => "passive",
            PortRole::Disabled => "disabled",
        }
    }

    pub fn parse(text: &str) -> Option<PortRole> {
        match text {
            "master" => Some(PortRole::Master),
            "slave" => Some(PortRole::Slave),
            "passive" => Some(PortRole::Passive),
            "disabled" => Some(PortRole::Disabled),
            _ => None,
        }
    }
}

/// Per-node, per-domain sync state machine.
#[derive(Debug, Default)]
pub struct DomainState {
    /// Next Sync sequence number this node sends as master (shared
    /// across all its master ports in the domain).
    pub next_seq: u16,
    /// Sync received on the slave port, awaiting its Follow_Up.
    pub pending: Option<PendingSync>,
    pub last_applied_seq: Option<u16>,
    /// Bridge state: where the pending Sync was re-sent, for residence
    /// time computation when the Follow_Up is relayed.
    pub relay: Option<RelayState>,
}

#[derive(Debug, Clone, Copy)]
pub struct PendingSync {
    pub seq: u16,
    pub ingress_local: Duration,
    pub ingress_sim: SimTime,
}

#[derive(Debug, Clone)]
pub struct RelayState {
    pub seq: u16,
    pub ingress_local: Duration,
    /// (egress port, local time of relayed Sync start-of-frame).
    pub sync_egress: Vec<(PortId, Duration)>,
}

/// Per-port peer-delay measurement state.
#[derive(Debug, Clone)]
pub struct PdelayState {
    pub next_seq: u16,
    pub outstanding: Option<PdelayOutstanding>,
    /// (seq, t2, t4) after PdelayResp, awaiting PdelayRespFollowUp.
    pub awaiting_follow_up: Option<(u16, Duration, Duration)>,
    pub mean_link_delay: Option<Duration>,
    pub nrr: f64,
    pub nrr_clamped: bool,
    /// Previous exchange's (t3, t4) for neighbor-rate-ratio estimation.
    pub prev_resp: Option<(Duration, Duration)>,
    pub completed: u32,
    pub discarded: u32,
}

impl Default for PdelayState {
    fn default() -> Self {
        PdelayState {
            next_seq: 0,
            outstanding: None,
            awaiting_follow_up: None,
            mean_link_delay: None,
            nrr: 1.0,
            nrr_clamped: false,
            prev_resp: None,
            completed: 0,
            discarded: 0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PdelayOutstanding {
    pub seq: u16,
    pub t1: Duration,
}

/// Sanity band for the neighbor rate ratio.
pub const NRR_MIN: f64 = 0.999;
pub const NRR_MAX: f64 = 1.001;

/// Measurements more negative than this are discarded as nonsense
/// rather than floored to zero.
pub const NEGATIVE_DELAY_LIMIT: Duration = Duration::from_us(-1);

/// The master's domain time at a Sync's ingress instant:
/// `precise_origin + correction + link_delay`.
pub fn compute_master_estimate(
    precise_origin: Duration,
    correction: Duration,
    link_delay: Duration,
) -> Duration {
    precise_origin + correction + link_delay
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NegativeDelay {
    pub raw_ns: i64,
}

/// Mean one-way link delay from one pdelay exchange:
/// `(nrr * (t4 - t1) - (t3 - t2)) / 2`, floored at zero.
///
/// Slightly negative results (to -1 us) are rounding/drift artifacts and
/// clamp to zero; anything more negative is discarded by the caller.
pub fn compute_mean_link_delay(
    t1: Duration,
    t2: Duration,
    t3: Duration,
    t4: Duration,
    nrr: f64,
) -> Result<Duration, NegativeDelay> {
    let round_trip = (t4 - t1).ns();
    let turnaround = (t3 - t2).ns();
    let raw = if nrr == 1.0 {
        // Integer path: exact when clocks are drift-free.
        let twice = round_trip - turnaround;
        // round-to-nearest division by 2
        (twice + twice.signum()) / 2
    } else {
        ((nrr * round_trip as f64 - turnaround as f64) / 2.0).round() as i64
    };
    if raw < NEGATIVE_DELAY_LIMIT.ns() {
        return Err(NegativeDelay { raw_ns: raw });
    }
    Ok(Duration::from_ns(raw.max(0)))
}

/// Updated neighbor rate ratio from two successive exchanges:
/// `(t3_k - t3_{k-1}) / (t4_k - t4_{k-1})`, clamped to the sanity band.
/// Returns `(nrr, clamped)`; a zero initiator interval keeps `current`.
pub fn update_nrr(
    prev: (Duration, Duration),
    new: (Duration, Duration),
    current: f64,
) -> (f64, bool) {
    let dt3 = (new.0 - prev.0).ns();
    let dt4 = (new.1 - prev.1).ns();
    if dt4 == 0 {
        return (current, false);
    }
    let raw = dt3 as f64 / dt4 as f64;
    if raw < NRR_MIN {
        (NRR_MIN, true)
    } else if raw > NRR_MAX {
        (NRR_MAX, true)
    } else {
        (raw, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const NS: fn(i64) -> Duration = Duration::from_ns;

    #[test]
    fn master_estimate_simple() {
        assert_eq!(
            compute_master_estimate(Duration::from_secs(1), NS(0), NS(500)),
            Duration::from_secs(1) + NS(500)
        );
    }

    #[test]
    fn master_estimate_additive_chain() {
        // One upstream hop contributed 500 ns link + 800 ns residence.
        assert_eq!(
            compute_master_estimate(Duration::from_secs(1), NS(1_300), NS(500)),
            Duration::from_secs(1) + NS(1_800)
        );
    }

    #[test]
    fn mean_link_delay_symmetric() {
        // 500 ns each way, 100 ns turnaround.
        let d = compute_mean_link_delay(NS(0), NS(500), NS(600), NS(1_100), 1.0).unwrap();
        assert_eq!(d, NS(500));
    }

    #[test]
    fn mean_link_delay_degenerate_zero() {
        let d = compute_mean_link_delay(NS(0), NS(0), NS(0), NS(0), 1.0).unwrap();
        assert_eq!(d, NS(0));
    }

    #[test]
    fn mean_link_delay_under_drift_with_and_without_nrr() {
        // Responder runs +100 ppm fast. True delay 500 ns, ~100 us
        // turnaround. Both ends aligned at zero; timestamps are what the
        // drifting clocks would read (closed form, rounded to ns).
        let rate = 1.0001f64;
        let t1 = NS(0);
        let t2 = NS((500.0 * rate).floor() as i64);
        let t3 = NS((100_500.0 * rate).floor() as i64);
        let t4 = NS(101_000);

        // Without correction the error is about half of 100 ppm x 100 us.
        let uncorrected = compute_mean_link_delay(t1, t2, t3, t4, 1.0).unwrap();
        assert!(
            (uncorrected.ns() - 495).abs() <= 1,
            "expected ~5 ns error, got {}",
            uncorrected.ns()
        );

        // nrr estimated from two successive exchanges, 1 s apart.
        let t3_next = NS((1_000_100_500.0f64 * rate).floor() as i64);
        let t4_next = NS(1_000_101_000);
        let (nrr, clamped) = update_nrr((t3, t4), (t3_next, t4_next), 1.0);
        assert!(!clamped);
        assert!((nrr - rate).abs() < 1e-7, "nrr {nrr}");

        let corrected = compute_mean_link_delay(t1, t2, t3, t4, nrr).unwrap();
        assert!(
            (corrected.ns() - 500).abs() <= 2,
            "expected 500 +/- 2 ns, got {}",
            corrected.ns()
        );
    }

    #[test]
    fn slightly_negative_delay_floors_to_zero() {
        let d = compute_mean_link_delay(NS(0), NS(10), NS(30), NS(10), 1.0).unwrap();
        assert_eq!(d, NS(0));
    }

    #[test]
    fn wildly_negative_delay_is_discarded() {
        let err = compute_mean_link_delay(NS(0), NS(0), NS(3_000_000), NS(100), 1.0).unwrap_err();
        assert!(err.raw_ns < NEGATIVE_DELAY_LIMIT.ns());
    }

    #[test]
    fn nrr_identical_clocks() {
        let (nrr, clamped) =
            update_nrr((NS(1_000), NS(1_000)), (NS(1_001_000), NS(1_001_000)), 1.0);
        assert_eq!(nrr, 1.0);
        assert!(!clamped);
    }

    #[test]
    fn nrr_pathological_clamps() {
        let (nrr, clamped) = update_nrr((NS(0), NS(0)), (NS(1_500), NS(1_000)), 1.0);
        assert_eq!(nrr, NRR_MAX);
        assert!(clamped);
    }

    #[test]
    fn nrr_zero_interval_keeps_previous() {
        let (nrr, clamped) = update_nrr((NS(0), NS(100)), (NS(50), NS(100)), 1.000123);
        assert_eq!(nrr, 1.000123);
        assert!(!clamped);
    }

    #[test]
    fn msg_class_set_operations() {
        let set = MsgClassSet::sync_pair();
        assert!(set.contains(MsgClass::Sync));
        assert!(set.contains(MsgClass::FollowUp));
        assert!(!set.contains(MsgClass::PdelayReq));
        assert_eq!(set.iter().count(), 2);
    }

    #[test]
    fn msg_class_labels_roundtrip() {
        for class in MsgClass::ALL {
            assert_eq!(MsgClass::parse(class.label()), Some(class));
        }
        assert_eq!(MsgClass::parse("bogus"), None);
    }
}
