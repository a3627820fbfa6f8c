//! Structured event log of a simulation run. Each entry is one line in
//! `events.log`, and the typed form doubles as the ground truth that
//! correction-field and dissemination checks reconcile against.

use std::fmt;

use crate::gptp::GptpMessage;

/// Compact description of a frame's payload for logging.
#[derive(Debug, Clone, PartialEq)]
pub struct MsgSummary {
    pub kind: &'static str,
    pub domain: Option<u8>,
    pub seq: u16,
    /// Follow_Up correction field, when applicable.
    pub correction_ns: Option<i64>,
}

impl From<&GptpMessage> for MsgSummary {
    fn from(msg: &GptpMessage) -> Self {
        MsgSummary {
            kind: msg.class().label(),
            domain: msg.domain().map(|d| d.0),
            seq: msg.seq(),
            correction_ns: match msg {
                GptpMessage::FollowUp { correction, .. } => Some(correction.ns()),
                _ => None,
            },
        }
    }
}

impl fmt::Display for MsgSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "msg={}", self.kind)?;
        if let Some(d) = self.domain {
            write!(f, " domain={d}")?;
        }
        write!(f, " seq={}", self.seq)?;
        if let Some(c) = self.correction_ns {
            write!(f, " correction={c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyncDropReason {
    OrphanFollowUp,
    StaleSeq,
    MissingLinkDelay,
    NonSlavePort,
}

impl SyncDropReason {
    pub fn label(self) -> &'static str {
        match self {
            SyncDropReason::OrphanFollowUp => "orphan_follow_up",
            SyncDropReason::StaleSeq => "stale_seq",
            SyncDropReason::MissingLinkDelay => "missing_link_delay",
            SyncDropReason::NonSlavePort => "non_slave_port",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LogEntry {
    /// Start-of-frame on the wire. `t_ns` is the wire instant (possibly
    /// later than the instant the sender handed the frame over, when the
    /// line was busy).
    FrameSent {
        t_ns: u64,
        node: String,
        port: String,
        msg: MsgSummary,
        egress_local_ns: i64,
    },
    FrameDelivered {
        t_ns: u64,
        node: String,
        port: String,
        msg: MsgSummary,
        ingress_local_ns: i64,
    },
    FrameDropped {
        t_ns: u64,
        node: String,
        port: String,
        msg: MsgSummary,
        reason: &'static str,
    },
    /// Black-holed at the configured egress.
    FrameFiltered {
        t_ns: u64,
        node: String,
        port: String,
        msg: MsgSummary,
    },
    SyncApplied {
        t_ns: u64,
        node: String,
        domain: u8,
        seq: u16,
        pre_diff_ns: i64,
        post_diff_ns: i64,
        /// The domain grandmaster's own diff at this instant.
        gm_diff_ns: i64,
    },
    SyncDropped {
        t_ns: u64,
        node: String,
        domain: u8,
        seq: u16,
        reason: SyncDropReason,
    },
    PdelayComplete {
        t_ns: u64,
        node: String,
        port: String,
        seq: u16,
        mean_link_delay_ns: i64,
        nrr: f64,
    },
    Fault {
        t_ns: u64,
        desc: String,
    },
}

impl LogEntry {
    pub fn t_ns(&self) -> u64 {
        match self {
            LogEntry::FrameSent { t_ns, .. }
            | LogEntry::FrameDelivered { t_ns, .. }
            | LogEntry::FrameDropped { t_ns, .. }
            | LogEntry::FrameFiltered { t_ns, .. }
            | LogEntry::SyncApplied { t_ns, .. }
            | LogEntry::SyncDropped { t_ns, .. }
            | LogEntry::PdelayComplete { t_ns, .. }
            | LogEntry::Fault { t_ns, .. } => *t_ns,
        }
    }
}

impl fmt::Display for LogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogEntry::FrameSent {
                t_ns,
                node,
                port,
                msg,
                egress_local_ns,
            } => write!(
                f,
                "t={t_ns} sent src={node}.{port} {msg} egress_local={egress_local_ns}"
            ),
            LogEntry::FrameDelivered {
                t_ns,
                node,
                port,
                msg,
                ingress_local_ns,
            } => write!(
                f,
                "t={t_ns} delivered dst={node}.{port} {msg} ingress_local={ingress_local_ns}"
            ),
            LogEntry::FrameDropped {
                t_ns,
                node,
                port,
                msg,
                reason,
            } => {
                write!(f, "t={t_ns} dropped at={node}.{port} {msg} reason={reason}")
            }
            LogEntry::FrameFiltered {
                t_ns,
                node,
                port,
                msg,
            } => {
                write!(
                    f,
                    "t={t_ns} filtered at={node}.{port} {msg} reason=blackhole"
                )
            }
            LogEntry::SyncApplied {
                t_ns,
                node,
                domain,
                seq,
                pre_diff_ns,
                post_diff_ns,
                gm_diff_ns,
            } => {
                write!(
                    f,
                    "t={t_ns} sync_applied node={node} domain={domain} seq={seq} \
                     pre_diff={pre_diff_ns} post_diff={post_diff_ns} gm_diff={gm_diff_ns}"
                )
            }
            LogEntry::SyncDropped {
                t_ns,
                node,
                domain,
                seq,
                reason,
            } => write!(
                f,
                "t={t_ns} sync_dropped node={node} domain={domain} seq={seq} reason={}",
                reason.label()
            ),
            LogEntry::PdelayComplete {
                t_ns,
                node,
                port,
                seq,
                mean_link_delay_ns,
                nrr,
            } => write!(
                f,
                "t={t_ns} pdelay_complete port={node}.{port} seq={seq} \
                 mean_link_delay={mean_link_delay_ns} nrr={nrr:.9}"
            ),
            LogEntry::Fault { t_ns, desc } => write!(f, "t={t_ns} fault {desc}"),
        }
    }
}

#[derive(Debug, Default)]
pub struct EventLog {
    entries: Vec<LogEntry>,
}

impl EventLog {
    pub fn new() -> Self {
        EventLog::default()
    }

    pub fn push(&mut self, entry: LogEntry) {
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[LogEntry] {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            out.push_str(&entry.to_string());
            out.push('\n');
        }
        out
    }
}
