//! Builds a simulation world from a validated scenario and drives it to
//! the horizon: master sync ticks, bridge relaying, slave corrections,
//! per-link peer-delay measurement, fault injection, and trace sampling.
//!
//! A world is single-threaded and fully deterministic: all state lives
//! in one instance, events fire in `(fire_at, seq)` order, and each
//! oscillator draws from its own named stream. Completed outputs are
//! plain values safe to move across threads.

use std::collections::BTreeMap;

use crate::clock::{DomainClock, DriftModel, Oscillator};
use crate::gptp::{
    compute_master_estimate, compute_mean_link_delay, update_nrr, DomainState, GptpMessage,
    MsgClassSet, PdelayOutstanding, PdelayState, PendingSync, PortRole, RelayState,
};
use crate::log::{EventLog, LogEntry, MsgSummary, SyncDropReason};
use crate::metrics::{
    analyze_trace, PortPdelaySummary, RunCounters, RunSummary, TraceCause, TraceRecord,
    DEFAULT_EPSILON,
};
use crate::net::{DomainId, Frame, Network, NodeId, NodeKind, PortId, TxError};
use crate::scenario::{validate, FaultKind, ScenarioConfig, ScenarioError};
use crate::sim::Scheduler;
use crate::time::{Duration, SimTime};

/// Everything a finished run produces.
pub struct RunOutput {
    pub trace: Vec<TraceRecord>,
    pub summary: RunSummary,
    pub log: EventLog,
}

/// Validates and runs a scenario with the default convergence epsilon.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput, Vec<ScenarioError>> {
    run_scenario_with_epsilon(cfg, DEFAULT_EPSILON)
}

pub fn run_scenario_with_epsilon(
    cfg: &ScenarioConfig,
    epsilon: Duration,
) -> Result<RunOutput, Vec<ScenarioError>> {
    let errs = validate(cfg);
    if !errs.is_empty() {
        return Err(errs);
    }
    let mut world = World::build(cfg);
    world.run();
    Ok(world.into_output(epsilon))
}

enum Ev {
    Fault(usize),
    Sample,
    SyncTick { node: NodeId, domain_idx: usize },
    PdelayTick { port: PortId },
    Deliver(Frame),
}

struct SentFrame {
    egress_local: Duration,
}

struct World<'a> {
    cfg: &'a ScenarioConfig,
    sched: Scheduler<Ev>,
    net: Network,
    oscs: Vec<Oscillator>,
    /// Dense domain indexing: `domain_ids[idx]` is the scenario id.
    domain_ids: Vec<u8>,
    gm_of_domain: Vec<NodeId>,
    /// [port][domain_idx]
    roles: Vec<Vec<PortRole>>,
    /// [node][domain_idx]
    master_ports: Vec<Vec<Vec<PortId>>>,
    clocks: Vec<Vec<Option<DomainClock>>>,
    dstate: Vec<Vec<DomainState>>,
    /// [port]
    pdelay: Vec<PdelayState>,
    blackhole: Vec<Option<MsgClassSet>>,
    name_to_node: BTreeMap<String, NodeId>,
    name_to_link: BTreeMap<String, crate::net::LinkId>,
    port_by_name: BTreeMap<(String, String), PortId>,
    trace: Vec<TraceRecord>,
    log: EventLog,
    counters: RunCounters,
    /// Sync-class frames lost at an egress, attributed to the intended
    /// receiver: (receiver node, domain) -> (filtered, dropped).
    domain_frame_loss: BTreeMap<(u32, u8), (u64, u64)>,
    events_processed: u64,
}

impl<'a> World<'a> {
    fn build(cfg: &'a ScenarioConfig) -> Self {
        let mut net = Network::new();
        let mut name_to_node = BTreeMap::new();
        let mut port_by_name = BTreeMap::new();
        for decl in &cfg.nodes {
            let id = net.add_node(decl.name.clone(), decl.kind);
            name_to_node.insert(decl.name.clone(), id);
            for port in &decl.ports {
                let pid = net.add_port(id, port.clone());
                port_by_name.insert((decl.name.clone(), port.clone()), pid);
            }
        }
        let mut name_to_link = BTreeMap::new();
        for decl in &cfg.links {
            let a = port_by_name[&decl.a];
            let b = port_by_name[&decl.b];
            let id = net.connect(a, b, decl.prop_delay, decl.bitrate_bps);
            name_to_link.insert(decl.name.clone(), id);
        }

        let oscs: Vec<Oscillator> = cfg
            .nodes
            .iter()
            .map(|decl| {
                let drift = cfg
                    .clocks
                    .get(&decl.name)
                    .cloned()
                    .unwrap_or(DriftModel::None);
                let rng =
                    crate::sim::RngStream::new(cfg.seed, &format!("oscillator:{}", decl.name));
                Oscillator::new(drift, rng)
            })
            .collect();

        let domain_ids: Vec<u8> = cfg.domains.iter().map(|d| d.id).collect();
        let gm_of_domain: Vec<NodeId> = cfg.domains.iter().map(|d| name_to_node[&d.gm]).collect();

        let ndomains = domain_ids.len();
        let mut roles = vec![vec![PortRole::Passive; ndomains]; net.port_count()];
        for ((node, port), by_domain) in &cfg.roles {
            let pid = port_by_name[&(node.clone(), port.clone())];
            for (domain, role) in by_domain {
                if let Some(idx) = domain_ids.iter().position(|d| d == domain) {
                    roles[pid.0 as usize][idx] = *role;
                }
            }
        }

        let nnodes = net.node_count();
        let mut master_ports = vec![vec![Vec::new(); ndomains]; nnodes];
        let mut participates = vec![vec![false; ndomains]; nnodes];
        for (pid, port_roles) in roles.iter().enumerate() {
            let node = net.port(PortId(pid as u32)).node;
            for (idx, role) in port_roles.iter().enumerate() {
                match role {
                    PortRole::Master => {
                        master_ports[node.0 as usize][idx].push(PortId(pid as u32));
                        participates[node.0 as usize][idx] = true;
                    }
                    PortRole::Slave => participates[node.0 as usize][idx] = true,
                    PortRole::Passive | PortRole::Disabled => {}
                }
            }
        }
        let clocks: Vec<Vec<Option<DomainClock>>> = participates
            .iter()
            .map(|row| row.iter().map(|p| p.then(DomainClock::identity)).collect())
            .collect();
        let dstate: Vec<Vec<DomainState>> = (0..nnodes)
            .map(|_| (0..ndomains).map(|_| DomainState::default()).collect())
            .collect();

        let pdelay = vec![PdelayState::default(); net.port_count()];
        let blackhole = vec![None; net.port_count()];

        World {
            cfg,
            sched: Scheduler::new(),
            net,
            oscs,
            domain_ids,
            gm_of_domain,
            roles,
            master_ports,
            clocks,
            dstate,
            pdelay,
            blackhole,
            name_to_node,
            name_to_link,
            port_by_name,
            trace: Vec::new(),
            log: EventLog::new(),
            counters: RunCounters::default(),
            domain_frame_loss: BTreeMap::new(),
            events_processed: 0,
        }
    }

    fn schedule_initial_events(&mut self) {
        // Faults first: at equal fire times the insertion order breaks
        // ties, and a fault must win against protocol activity scheduled
        // for the same instant.
        for (idx, event) in self.cfg.events.iter().enumerate() {
            self.sched
                .schedule(event.at, Ev::Fault(idx))
                .expect("fresh queue");
        }
        self.sched
            .schedule(SimTime::ZERO, Ev::Sample)
            .expect("fresh queue");
        for idx in 0..self.domain_ids.len() {
            let gm = self.gm_of_domain[idx];
            self.sched
                .schedule(
                    SimTime::ZERO,
                    Ev::SyncTick {
                        node: gm,
                        domain_idx: idx,
                    },
                )
                .expect("fresh queue");
        }
        for pid in 0..self.net.port_count() {
            let port = PortId(pid as u32);
            if self.net.port(port).link.is_some() {
                self.sched
                    .schedule(SimTime::ZERO, Ev::PdelayTick { port })
                    .expect("fresh queue");
            }
        }
    }

    fn run(&mut self) {
        self.schedule_initial_events();
        let horizon = self.cfg.duration;
        while let Some(fired) = self.sched.pop_next(horizon) {
            self.events_processed += 1;
            match fired.kind {
                Ev::Fault(idx) => self.handle_fault(idx),
                Ev::Sample => self.handle_sample(),
                Ev::SyncTick { node, domain_idx } => self.handle_sync_tick(node, domain_idx),
                Ev::PdelayTick { port } => self.handle_pdelay_tick(port),
                Ev::Deliver(frame) => self.handle_deliver(frame),
            }
        }
        self.sched.finish_at(horizon);
    }

    fn now(&self) -> SimTime {
        self.sched.now()
    }

    fn domain_idx(&self, domain: DomainId) -> Option<usize> {
        self.domain_ids.iter().position(|d| *d == domain.0)
    }

    fn node_label(&self, node: NodeId) -> String {
        self.net.node(node).name.clone()
    }

    fn port_label(&self, port: PortId) -> (String, String) {
        let p = self.net.port(port);
        (self.net.node(p.node).name.clone(), p.name.clone())
    }

    /// Egress path for every frame: line reservation, hardware
    /// timestamp, black-hole filter, delivery scheduling.
    ///
    /// The black hole is covert: the sending protocol entity goes
    /// through the identical motions (line occupied, egress timestamp
    /// taken, `Some` returned) and the frame simply never arrives, so
    /// every non-filtered frame keeps exactly the timing it has in a
    /// fault-free run. `None` means the sender observably could not
    /// transmit (link down).
    fn send(&mut self, port: PortId, msg: GptpMessage) -> Option<SentFrame> {
        let now = self.now();
        let class = msg.class();
        let size = self.cfg.engine.frame_sizes.for_class(class);
        let (node_name, port_name) = self.port_label(port);

        let tx = match self.net.prepare_transmit(now, port, size) {
            Ok(tx) => tx,
            Err(TxError::LinkDown) => {
                self.counters.frames_dropped_link_down += 1;
                self.attribute_loss(port, &msg, false);
                self.log.push(LogEntry::FrameDropped {
                    t_ns: now.ns(),
                    node: node_name,
                    port: port_name,
                    msg: MsgSummary::from(&msg),
                    reason: "link_down",
                });
                return None;
            }
            Err(TxError::NoLink) => {
                debug_assert!(
                    false,
                    "validated scenarios never transmit on unlinked ports"
                );
                return None;
            }
        };

        let node = self.net.port(port).node;
        let egress_local = self.oscs[node.0 as usize].local_time_at(tx.start);

        let filtered = self.blackhole[port.0 as usize].is_some_and(|f| f.contains(class));
        if filtered {
            self.counters.frames_filtered_blackhole += 1;
            self.attribute_loss(port, &msg, true);
            self.log.push(LogEntry::FrameFiltered {
                t_ns: tx.start.ns(),
                node: node_name,
                port: port_name,
                msg: MsgSummary::from(&msg),
            });
            return Some(SentFrame { egress_local });
        }

        self.counters.frames_sent += 1;
        self.log.push(LogEntry::FrameSent {
            t_ns: tx.start.ns(),
            node: node_name,
            port: port_name,
            msg: MsgSummary::from(&msg),
            egress_local_ns: egress_local.ns(),
        });
        let frame = Frame {
            src_port: port,
            dst_port: tx.dst_port,
            size_bytes: size,
            payload: msg,
            egress_ts: egress_local,
            egress_sim: tx.start,
        };
        self.sched
            .schedule(tx.deliver_at, Ev::Deliver(frame))
            .expect("delivery is never in the past");
        Some(SentFrame { egress_local })
    }

    /// Books a lost sync-class frame against the clock it would have
    /// disciplined: the (peer node, domain) on the far side of `port`.
    fn attribute_loss(&mut self, port: PortId, msg: &GptpMessage, filtered: bool) {
        let Some(domain) = msg.domain() else { return };
        let Some(peer) = self.net.peer_port(port) else {
            return;
        };
        let receiver = self.net.port(peer).node;
        let entry = self
            .domain_frame_loss
            .entry((receiver.0, domain.0))
            .or_default();
        if filtered {
            entry.0 += 1;
        } else {
            entry.1 += 1;
        }
    }

    fn handle_sync_tick(&mut self, node: NodeId, domain_idx: usize) {
        if self.net.node(node).failed {
            return; // a failed grandmaster never ticks again
        }
        let domain = DomainId(self.domain_ids[domain_idx]);
        let seq = self.dstate[node.0 as usize][domain_idx].next_seq;
        self.dstate[node.0 as usize][domain_idx].next_seq = seq.wrapping_add(1);

        let ports = self.master_ports[node.0 as usize][domain_idx].clone();
        for port in ports {
            let Some(sent) = self.send(port, GptpMessage::Sync { domain, seq }) else {
                continue; // no Sync on the wire, nothing to follow up
            };
            let clock = self.clocks[node.0 as usize][domain_idx]
                .as_ref()
                .expect("masters participate in their domains");
            let precise_origin = clock.domain_time(sent.egress_local);
            self.send(
                port,
                GptpMessage::FollowUp {
                    domain,
                    seq,
                    precise_origin,
                    correction: Duration::ZERO,
                    rate_ratio: 1.0,
                },
            );
        }

        let next = self.now() + self.cfg.engine.sync_interval;
        if next < self.cfg.duration {
            self.sched
                .schedule(next, Ev::SyncTick { node, domain_idx })
                .expect("future tick");
        }
    }

    fn handle_pdelay_tick(&mut self, port: PortId) {
        let node = self.net.port(port).node;
        if self.net.node(node).failed {
            return;
        }
        let seq = self.pdelay[port.0 as usize].next_seq;
        self.pdelay[port.0 as usize].next_seq = seq.wrapping_add(1);
        let sent = self.send(port, GptpMessage::PdelayReq { seq });
        let state = &mut self.pdelay[port.0 as usize];
        state.outstanding = sent.map(|s| PdelayOutstanding {
            seq,
            t1: s.egress_local,
        });
        state.awaiting_follow_up = None;

        let next = self.now() + self.cfg.engine.pdelay_interval;
        if next < self.cfg.duration {
            self.sched
                .schedule(next, Ev::PdelayTick { port })
                .expect("future tick");
        }
    }

    fn handle_deliver(&mut self, frame: Frame) {
        let now = self.now();
        let port = frame.dst_port;
        let node = self.net.port(port).node;
        let ingress_local = self.oscs[node.0 as usize].local_time_at(now);

        self.counters.frames_delivered += 1;
        let (node_name, port_name) = self.port_label(port);
        self.log.push(LogEntry::FrameDelivered {
            t_ns: now.ns(),
            node: node_name,
            port: port_name,
            msg: MsgSummary::from(&frame.payload),
            ingress_local_ns: ingress_local.ns(),
        });

        if self.net.node(node).failed {
            self.counters.frames_to_failed_node += 1;
            return;
        }

        match frame.payload {
            GptpMessage::Sync { domain, seq } => {
                self.on_sync(node, port, domain, seq, ingress_local)
            }
            GptpMessage::FollowUp {
                domain,
                seq,
                precise_origin,
                correction,
                rate_ratio,
            } => self.on_follow_up(
                node,
                port,
                domain,
                seq,
                precise_origin,
                correction,
                rate_ratio,
                ingress_local,
            ),
            GptpMessage::PdelayReq { seq } => {
                // Respond regardless of sync roles: pdelay is per link.
                let t2 = ingress_local;
                if let Some(sent) = self.send(port, GptpMessage::PdelayResp { seq, t2 }) {
                    let t3 = sent.egress_local;
                    self.send(port, GptpMessage::PdelayRespFollowUp { seq, t3 });
                }
            }
            GptpMessage::PdelayResp { seq, t2 } => {
                let state = &mut self.pdelay[port.0 as usize];
                if state.outstanding.map(|o| o.seq) == Some(seq) {
                    state.awaiting_follow_up = Some((seq, t2, ingress_local));
                }
            }
            GptpMessage::PdelayRespFollowUp { seq, t3 } => self.on_pdelay_follow_up(port, seq, t3),
        }
    }

    fn on_sync(
        &mut self,
        node: NodeId,
        port: PortId,
        domain: DomainId,
        seq: u16,
        ingress_local: Duration,
    ) {
        let Some(idx) = self.domain_idx(domain) else {
            return;
        };
        if self.roles[port.0 as usize][idx] != PortRole::Slave {
            self.counters.sync_on_non_slave_port += 1;
            self.log.push(LogEntry::SyncDropped {
                t_ns: self.now().ns(),
                node: self.node_label(node),
                domain: domain.0,
                seq,
                reason: SyncDropReason::NonSlavePort,
            });
            return;
        }
        self.dstate[node.0 as usize][idx].pending = Some(PendingSync {
            seq,
            ingress_local,
            ingress_sim: self.now(),
        });

        // Bridges forward the Sync immediately; the matching Follow_Up
        // is forwarded when it arrives, carrying this hop's residence.
        let egress_ports = self.master_ports[node.0 as usize][idx].clone();
        if !egress_ports.is_empty() {
            let mut sync_egress = Vec::with_capacity(egress_ports.len());
            for eport in egress_ports {
                if let Some(sent) = self.send(eport, GptpMessage::Sync { domain, seq }) {
                    sync_egress.push((eport, sent.egress_local));
                }
            }
            self.dstate[node.0 as usize][idx].relay = Some(RelayState {
                seq,
                ingress_local,
                sync_egress,
            });
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn on_follow_up(
        &mut self,
        node: NodeId,
        port: PortId,
        domain: DomainId,
        seq: u16,
        precise_origin: Duration,
        correction: Duration,
        rate_ratio_in: f64,
        local_now: Duration,
    ) {
        let now = self.now();
        let Some(idx) = self.domain_idx(domain) else {
            return;
        };
        let drop = |world: &mut Self,
                    reason: SyncDropReason,
                    counter: fn(&mut RunCounters) -> &mut u64| {
            *counter(&mut world.counters) += 1;
            world.log.push(LogEntry::SyncDropped {
                t_ns: now.ns(),
                node: world.node_label(node),
                domain: domain.0,
                seq,
                reason,
            });
        };

        if self.roles[port.0 as usize][idx] != PortRole::Slave {
            drop(self, SyncDropReason::NonSlavePort, |c| {
                &mut c.sync_on_non_slave_port
            });
            return;
        }
        let state = &self.dstate[node.0 as usize][idx];
        match state.pending {
            Some(p) if p.seq == seq => {}
            _ => {
                // No matching Sync: either it was filtered upstream or a
                // newer Sync already replaced it.
                drop(self, SyncDropReason::OrphanFollowUp, |c| {
                    &mut c.sync_orphan_follow_up
                });
                return;
            }
        }
        if state.last_applied_seq.is_some_and(|last| seq <= last) {
            self.dstate[node.0 as usize][idx].pending = None;
            drop(self, SyncDropReason::StaleSeq, |c| &mut c.sync_stale_seq);
            return;
        }
        let pending = self.dstate[node.0 as usize][idx]
            .pending
            .take()
            .expect("matched above");

        let Some(link_delay) = self.pdelay[port.0 as usize].mean_link_delay else {
            // First exchanges still in flight; the next Sync will land
            // after the link is measured. No estimate, no relay.
            drop(self, SyncDropReason::MissingLinkDelay, |c| {
                &mut c.sync_missing_link_delay
            });
            return;
        };

        let estimate = compute_master_estimate(precise_origin, correction, link_delay);
        let nrr = self.pdelay[port.0 as usize].nrr;
        let ratio = if self.cfg.engine.use_rate_ratio {
            rate_ratio_in * nrr
        } else {
            1.0
        };

        let clock = self.clocks[node.0 as usize][idx]
            .as_mut()
            .expect("slaves participate in their domains");
        let pre_diff = clock.domain_time(local_now) - now.as_duration();
        clock.apply_correction(estimate, pending.ingress_local, ratio, now, seq);
        let post_diff = clock.domain_time(local_now) - now.as_duration();

        self.dstate[node.0 as usize][idx].last_applied_seq = Some(seq);
        self.counters.sync_applied += 1;

        // The grandmaster's own diff at this instant, for the log-side
        // convergence oracle.
        let gm = self.gm_of_domain[idx];
        let gm_local = self.oscs[gm.0 as usize].local_time_at(now);
        let gm_diff = self.clocks[gm.0 as usize][idx]
            .as_ref()
            .expect("grandmaster participates")
            .domain_time(gm_local)
            - now.as_duration();

        let node_name = self.node_label(node);
        self.log.push(LogEntry::SyncApplied {
            t_ns: now.ns(),
            node: node_name.clone(),
            domain: domain.0,
            seq,
            pre_diff_ns: pre_diff.ns(),
            post_diff_ns: post_diff.ns(),
            gm_diff_ns: gm_diff.ns(),
        });
        for (cause, diff) in [
            (TraceCause::PreSync, pre_diff),
            (TraceCause::PostSync, post_diff),
        ] {
            self.trace.push(TraceRecord {
                time_ns: now.ns(),
                node: node_name.clone(),
                domain: domain.0,
                clock_time_ns: now.ns() as i64 + diff.ns(),
                diff_ns: diff.ns(),
                cause,
            });
        }

        // Relay the Follow_Up along the ring with accumulated
        // correction: upstream correction + ingress link delay + this
        // bridge's Sync residence time.
        let relay = match &self.dstate[node.0 as usize][idx].relay {
            Some(r) if r.seq == seq => Some(r.clone()),
            _ => None,
        };
        if let Some(relay) = relay {
            for (eport, sync_egress_local) in relay.sync_egress {
                let residence_local = sync_egress_local - relay.ingress_local;
                let residence = if self.cfg.engine.use_rate_ratio {
                    Duration::from_ns(
                        (residence_local.ns() as f64 * rate_ratio_in * nrr).round() as i64
                    )
                } else {
                    residence_local
                };
                let correction_out = correction + link_delay + residence;
                let ratio_out = if self.cfg.engine.use_rate_ratio {
                    rate_ratio_in * nrr
                } else {
                    1.0
                };
                self.send(
                    eport,
                    GptpMessage::FollowUp {
                        domain,
                        seq,
                        precise_origin,
                        correction: correction_out,
                        rate_ratio: ratio_out,
                    },
                );
            }
            self.dstate[node.0 as usize][idx].relay = None;
        }
    }

    fn on_pdelay_follow_up(&mut self, port: PortId, seq: u16, t3: Duration) {
        let use_nrr = self.cfg.engine.use_nrr;
        let state = &mut self.pdelay[port.0 as usize];
        let (Some(outstanding), Some((resp_seq, t2, t4))) =
            (state.outstanding, state.awaiting_follow_up)
        else {
            return;
        };
        if outstanding.seq != seq || resp_seq != seq {
            return;
        }
        state.outstanding = None;
        state.awaiting_follow_up = None;

        // Track the neighbor rate ratio from successive exchanges; it
        // only enters the delay formula when enabled.
        if let Some(prev) = state.prev_resp {
            let (nrr, clamped) = update_nrr(prev, (t3, t4), state.nrr);
            state.nrr = nrr;
            state.nrr_clamped |= clamped;
        }
        state.prev_resp = Some((t3, t4));

        let nrr_used = if use_nrr { state.nrr } else { 1.0 };
        match compute_mean_link_delay(outstanding.t1, t2, t3, t4, nrr_used) {
            Ok(delay) => {
                state.mean_link_delay = Some(delay);
                state.completed += 1;
                let nrr_now = state.nrr;
                self.counters.pdelay_completed += 1;
                let (node_name, port_name) = self.port_label(port);
                self.log.push(LogEntry::PdelayComplete {
                    t_ns: self.now().ns(),
                    node: node_name,
                    port: port_name,
                    seq,
                    mean_link_delay_ns: delay.ns(),
                    nrr: nrr_now,
                });
            }
            Err(_) => {
                state.discarded += 1;
                self.counters.pdelay_discarded += 1;
            }
        }
    }

    fn handle_fault(&mut self, idx: usize) {
        let now = self.now();
        let event = &self.cfg.events[idx];
        match &event.kind {
            FaultKind::ClockFailure { node } => {
                let id = self.name_to_node[node];
                self.net.node_mut(id).failed = true;
                self.log.push(LogEntry::Fault {
                    t_ns: now.ns(),
                    desc: format!("clock_failure node={node}"),
                });
            }
            FaultKind::LinkFailure { link } => {
                let id = self.name_to_link[link];
                self.net.link_mut(id).up = false;
                self.log.push(LogEntry::Fault {
                    t_ns: now.ns(),
                    desc: format!("link_failure link={link}"),
                });
            }
            FaultKind::BlackHole { node, port, filter } => {
                let pid = self.port_by_name[&(node.clone(), port.clone())];
                self.blackhole[pid.0 as usize] = Some(*filter);
                let classes: Vec<&str> = filter.iter().map(|c| c.label()).collect();
                self.log.push(LogEntry::Fault {
                    t_ns: now.ns(),
                    desc: format!(
                        "blackhole node={node} port={port} filter={}",
                        classes.join(",")
                    ),
                });
            }
        }
    }

    fn handle_sample(&mut self) {
        let now = self.now();
        for node_idx in 0..self.net.node_count() {
            let node = NodeId(node_idx as u32);
            if self.net.node(node).failed {
                continue;
            }
            let local = self.oscs[node_idx].local_time_at(now);
            let name = self.net.node(node).name.clone();
            for (domain_idx, clock) in self.clocks[node_idx].iter().enumerate() {
                let Some(clock) = clock else { continue };
                let domain_time = clock.domain_time(local);
                let diff = domain_time - now.as_duration();
                self.trace.push(TraceRecord {
                    time_ns: now.ns(),
                    node: name.clone(),
                    domain: self.domain_ids[domain_idx],
                    clock_time_ns: domain_time.ns(),
                    diff_ns: diff.ns(),
                    cause: TraceCause::Sample,
                });
            }
        }
        let next = now + self.cfg.sampling_interval;
        if next < self.cfg.duration {
            self.sched.schedule(next, Ev::Sample).expect("future tick");
        }
    }

    fn into_output(self, epsilon: Duration) -> RunOutput {
        let gm_names: BTreeMap<u8, String> = self
            .cfg
            .domains
            .iter()
            .map(|d| (d.id, d.gm.clone()))
            .collect();
        let mut analysis = analyze_trace(&self.trace, &gm_names, epsilon);
        for clock in &mut analysis.clocks {
            let node = self.name_to_node[&clock.node];
            if let Some(&(filtered, dropped)) = self.domain_frame_loss.get(&(node.0, clock.domain))
            {
                clock.filtered_sync_frames = filtered;
                clock.dropped_sync_frames = dropped;
            }
        }

        let mut pdelay_summaries = Vec::new();
        for pid in 0..self.net.port_count() {
            let port = PortId(pid as u32);
            if self.net.port(port).link.is_none() {
                continue;
            }
            let state = &self.pdelay[pid];
            let (node, port_name) = {
                let p = self.net.port(port);
                (self.net.node(p.node).name.clone(), p.name.clone())
            };
            pdelay_summaries.push(PortPdelaySummary {
                node,
                port: port_name,
                mean_link_delay_ns: state.mean_link_delay.map(|d| d.ns()),
                neighbor_rate_ratio: state.nrr,
                exchanges_completed: state.completed,
            });
        }

        let summary = RunSummary {
            scenario: self.cfg.name.clone(),
            seed: self.cfg.seed,
            duration_ns: self.cfg.duration.ns(),
            events_processed: self.events_processed,
            epsilon_ns: epsilon.ns(),
            counters: self.counters,
            clocks: analysis.clocks,
            pdelay: pdelay_summaries,
        };
        RunOutput {
            trace: self.trace,
            summary,
            log: self.log,
        }
    }
}

/// Ring-link fault family for sweeps: one `LinkFailure` per
/// bridge-to-bridge link, all at `at`.
pub fn ring_link_fault_family(
    cfg: &ScenarioConfig,
    at: SimTime,
) -> Vec<crate::scenario::FaultEvent> {
    let bridges: Vec<&str> = cfg
        .nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Bridge)
        .map(|n| n.name.as_str())
        .collect();
    cfg.links
        .iter()
        .filter(|l| bridges.contains(&l.a.0.as_str()) && bridges.contains(&l.b.0.as_str()))
        .map(|l| crate::scenario::FaultEvent {
            at,
            kind: FaultKind::LinkFailure {
                link: l.name.clone(),
            },
        })
        .collect()
}

/// Grandmaster clock-failure family for sweeps: one `ClockFailure` per
/// distinct grandmaster node, all at `at`.
pub fn gm_fault_family(cfg: &ScenarioConfig, at: SimTime) -> Vec<crate::scenario::FaultEvent> {
    let mut gms: Vec<String> = cfg.domains.iter().map(|d| d.gm.clone()).collect();
    gms.dedup();
    let mut seen = Vec::new();
    for gm in gms {
        if !seen.contains(&gm) {
            seen.push(gm);
        }
    }
    seen.into_iter()
        .map(|node| crate::scenario::FaultEvent {
            at,
            kind: FaultKind::ClockFailure { node },
        })
        .collect()
}
