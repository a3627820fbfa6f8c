//! Declarative scenario configuration: topology, clocks, domains, port
//! roles, and timed fault/attack events, plus the built-in quad-motor
//! ring scenarios.
//!
//! Scenarios are plain data. They can be built programmatically, parsed
//! from the sectioned key-value file format (see `docs/scenario-format.md`),
//! or serialized back out; a parsed-and-validated config is immutable
//! for the duration of a run.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::clock::DriftModel;
use crate::gptp::{MsgClass, MsgClassSet, PortRole};
use crate::net::NodeKind;
use crate::time::{format_ns, parse_ns, Duration, SimTime};

pub const DEFAULT_BITRATE_BPS: u64 = 100_000_000;
pub const DEFAULT_PROP_DELAY: Duration = Duration::from_ns(500);

/// Frame sizes per message class, bytes. Ethernet minimum is 64.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSizes {
    pub sync: u32,
    pub follow_up: u32,
    pub pdelay_req: u32,
    pub pdelay_resp: u32,
    pub pdelay_resp_follow_up: u32,
}

impl Default for FrameSizes {
    fn default() -> Self {
        FrameSizes {
            sync: 64,
            follow_up: 90,
            pdelay_req: 64,
            pdelay_resp: 64,
            pdelay_resp_follow_up: 90,
        }
    }
}

impl FrameSizes {
    pub fn for_class(&self, class: MsgClass) -> u32 {
        match class {
            MsgClass::Sync => self.sync,
            MsgClass::FollowUp => self.follow_up,
            MsgClass::PdelayReq => self.pdelay_req,
            MsgClass::PdelayResp => self.pdelay_resp,
            MsgClass::PdelayRespFollowUp => self.pdelay_resp_follow_up,
        }
    }
}

/// Protocol cadence and feature flags shared by every domain engine.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub sync_interval: Duration,
    pub pdelay_interval: Duration,
    pub use_nrr: bool,
    pub use_rate_ratio: bool,
    pub frame_sizes: FrameSizes,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            sync_interval: Duration::from_ms(125),
            pdelay_interval: Duration::from_secs(1),
            use_nrr: false,
            use_rate_ratio: false,
            frame_sizes: FrameSizes::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeDecl {
    pub name: String,
    pub kind: NodeKind,
    pub ports: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkDecl {
    pub name: String,
    pub a: (String, String),
    pub b: (String, String),
    pub prop_delay: Duration,
    pub bitrate_bps: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainDecl {
    pub id: u8,
    pub gm: String,
    /// Documentation label only (e.g. "clockwise").
    pub direction: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FaultKind {
    ClockFailure {
        node: String,
    },
    LinkFailure {
        link: String,
    },
    BlackHole {
        node: String,
        port: String,
        filter: MsgClassSet,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaultEvent {
    pub at: SimTime,
    pub kind: FaultKind,
}

/// A complete, declarative simulation scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub duration: SimTime,
    pub seed: u64,
    pub sampling_interval: Duration,
    pub engine: EngineConfig,
    pub nodes: Vec<NodeDecl>,
    pub links: Vec<LinkDecl>,
    /// Per-node drift model; nodes without an entry run an ideal clock.
    pub clocks: BTreeMap<String, DriftModel>,
    pub domains: Vec<DomainDecl>,
    /// Role per (node, port, domain); unlisted combinations are passive.
    pub roles: BTreeMap<(String, String), BTreeMap<u8, PortRole>>,
    pub events: Vec<FaultEvent>,
}

impl ScenarioConfig {
    pub fn role(&self, node: &str, port: &str, domain: u8) -> PortRole {
        self.roles
            .get(&(node.to_string(), port.to_string()))
            .and_then(|m| m.get(&domain))
            .copied()
            .unwrap_or(PortRole::Passive)
    }

    /// Whether the node has any master or slave role in the domain,
    /// i.e. hosts a clock for it.
    pub fn participates(&self, node: &str, domain: u8) -> bool {
        self.roles.iter().any(|((n, _), m)| {
            n == node
                && matches!(
                    m.get(&domain),
                    Some(PortRole::Master) | Some(PortRole::Slave)
                )
        })
    }

    /// End stations that are pure slaves (not grandmaster of any
    /// domain): the wheel-motor ECUs in the built-in scenarios.
    pub fn slave_end_stations(&self) -> Vec<String> {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::EndStation)
            .filter(|n| !self.domains.iter().any(|d| d.gm == n.name))
            .map(|n| n.name.clone())
            .collect()
    }

    /// Replaces every node's drift model.
    pub fn with_uniform_drift(mut self, model: DriftModel) -> Self {
        for node in &self.nodes {
            self.clocks.insert(node.name.clone(), model.clone());
        }
        self
    }

    pub fn with_drift(mut self, node: &str, model: DriftModel) -> Self {
        self.clocks.insert(node.to_string(), model.clone());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioErrorKind {
    Syntax,
    UnknownNode,
    UnknownLink,
    UnknownDomain,
    DanglingPort,
    RoleConflict,
    EventOutOfRange,
    Invalid,
}

impl ScenarioErrorKind {
    fn label(self) -> &'static str {
        match self {
            ScenarioErrorKind::Syntax => "syntax",
            ScenarioErrorKind::UnknownNode => "unknown_node",
            ScenarioErrorKind::UnknownLink => "unknown_link",
            ScenarioErrorKind::UnknownDomain => "unknown_domain",
            ScenarioErrorKind::DanglingPort => "dangling_port",
            ScenarioErrorKind::RoleConflict => "role_conflict",
            ScenarioErrorKind::EventOutOfRange => "event_out_of_range",
            ScenarioErrorKind::Invalid => "invalid",
        }
    }
}

/// One precise scenario error: where, what, why.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioError {
    pub line: Option<u32>,
    pub kind: ScenarioErrorKind,
    pub field: String,
    pub reason: String,
}

impl ScenarioError {
    fn new(
        line: Option<u32>,
        kind: ScenarioErrorKind,
        field: impl Into<String>,
        reason: impl Into<String>,
    ) -> Self {
        ScenarioError {
            line,
            kind,
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(
                f,
                "line {}: {} ({}): {}",
                line,
                self.kind.label(),
                self.field,
                self.reason
            ),
            None => write!(f, "{} ({}): {}", self.kind.label(), self.field, self.reason),
        }
    }
}

impl std::error::Error for ScenarioError {}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Checks every structural invariant. Returns all violations, not just
/// the first: a malformed input never yields a partially usable config.
pub fn validate(cfg: &ScenarioConfig) -> Vec<ScenarioError> {
    let mut errs = Vec::new();
    let err = |kind, field: &str, reason: String| ScenarioError::new(None, kind, field, reason);

    if cfg.duration == SimTime::ZERO {
        errs.push(err(
            ScenarioErrorKind::Invalid,
            "duration",
            "duration must be positive".into(),
        ));
    }
    if cfg.sampling_interval <= Duration::ZERO {
        errs.push(err(
            ScenarioErrorKind::Invalid,
            "sampling_interval",
            "must be positive".into(),
        ));
    }
    if cfg.engine.sync_interval <= Duration::ZERO || cfg.engine.pdelay_interval <= Duration::ZERO {
        errs.push(err(
            ScenarioErrorKind::Invalid,
            "engine",
            "intervals must be positive".into(),
        ));
    }
    for class in MsgClass::ALL {
        if cfg.engine.frame_sizes.for_class(class) < 64 {
            errs.push(err(
                ScenarioErrorKind::Invalid,
                class.label(),
                "frame size below the 64-byte Ethernet minimum".into(),
            ));
        }
    }

    // Nodes and ports.
    let mut node_names = BTreeSet::new();
    let mut port_names: BTreeSet<(String, String)> = BTreeSet::new();
    for node in &cfg.nodes {
        if !node_names.insert(node.name.clone()) {
            errs.push(err(
                ScenarioErrorKind::Invalid,
                &node.name,
                "duplicate node name".into(),
            ));
        }
        match node.kind {
            NodeKind::EndStation if node.ports.len() != 1 => errs.push(err(
                ScenarioErrorKind::Invalid,
                &node.name,
                format!(
                    "end station must have exactly 1 port, has {}",
                    node.ports.len()
                ),
            )),
            NodeKind::Bridge if node.ports.len() < 2 => errs.push(err(
                ScenarioErrorKind::Invalid,
                &node.name,
                format!(
                    "bridge must have at least 2 ports, has {}",
                    node.ports.len()
                ),
            )),
            _ => {}
        }
        for port in &node.ports {
            if !port_names.insert((node.name.clone(), port.clone())) {
                errs.push(err(
                    ScenarioErrorKind::Invalid,
                    &format!("{}.{}", node.name, port),
                    "duplicate port name".into(),
                ));
            }
        }
    }

    // Links.
    let mut link_names = BTreeSet::new();
    let mut linked_ports: BTreeSet<(String, String)> = BTreeSet::new();
    for link in &cfg.links {
        if !link_names.insert(link.name.clone()) {
            errs.push(err(
                ScenarioErrorKind::Invalid,
                &link.name,
                "duplicate link name".into(),
            ));
        }
        for end in [&link.a, &link.b] {
            if !node_names.contains(&end.0) {
                errs.push(err(
                    ScenarioErrorKind::UnknownNode,
                    &link.name,
                    format!("link references unknown node {:?}", end.0),
                ));
            } else if !port_names.contains(end) {
                errs.push(err(
                    ScenarioErrorKind::DanglingPort,
                    &link.name,
                    format!("link references unknown port {}.{}", end.0, end.1),
                ));
            } else if !linked_ports.insert(end.clone()) {
                errs.push(err(
                    ScenarioErrorKind::Invalid,
                    &link.name,
                    format!("port {}.{} attached to more than one link", end.0, end.1),
                ));
            }
        }
        if link.prop_delay < Duration::ZERO {
            errs.push(err(
                ScenarioErrorKind::Invalid,
                &link.name,
                "propagation delay must be non-negative".into(),
            ));
        }
        if link.bitrate_bps == 0 {
            errs.push(err(
                ScenarioErrorKind::Invalid,
                &link.name,
                "bitrate must be positive".into(),
            ));
        }
    }

    // Clocks reference real nodes and stay within sane drift bounds.
    for (name, model) in &cfg.clocks {
        if !node_names.contains(name) {
            errs.push(err(
                ScenarioErrorKind::UnknownNode,
                name,
                "clock entry for unknown node".into(),
            ));
        }
        match model {
            DriftModel::Constant { rate_ppm } if rate_ppm.abs() > 10_000.0 => {
                errs.push(err(
                    ScenarioErrorKind::Invalid,
                    name,
                    format!("constant drift {rate_ppm} ppm outside +/-10000 ppm"),
                ));
            }
            DriftModel::RandomWalk { step_interval, .. } if *step_interval <= Duration::ZERO => {
                errs.push(err(
                    ScenarioErrorKind::Invalid,
                    name,
                    "random walk step interval must be positive".into(),
                ));
            }
            _ => {}
        }
    }

    // Domains.
    let mut domain_ids = BTreeSet::new();
    for dom in &cfg.domains {
        if !domain_ids.insert(dom.id) {
            errs.push(err(
                ScenarioErrorKind::Invalid,
                &format!("d{}", dom.id),
                "duplicate domain id".into(),
            ));
        }
        if !node_names.contains(&dom.gm) {
            errs.push(err(
                ScenarioErrorKind::UnknownNode,
                &format!("d{}", dom.id),
                format!("grandmaster {:?} is not a declared node", dom.gm),
            ));
        }
    }

    // Roles.
    for ((node, port), by_domain) in &cfg.roles {
        if !port_names.contains(&(node.clone(), port.clone())) {
            errs.push(err(
                ScenarioErrorKind::DanglingPort,
                &format!("{node}.{port}"),
                "role entry for unknown port".into(),
            ));
            continue;
        }
        for (domain, role) in by_domain {
            if !domain_ids.contains(domain) {
                errs.push(err(
                    ScenarioErrorKind::UnknownDomain,
                    &format!("{node}.{port}"),
                    format!("role references undeclared domain {domain}"),
                ));
            }
            // An active role on a port with no link could never carry a
            // frame; reject it rather than simulate a dead protocol.
            if matches!(role, PortRole::Master | PortRole::Slave)
                && !linked_ports.contains(&(node.clone(), port.clone()))
            {
                errs.push(err(
                    ScenarioErrorKind::DanglingPort,
                    &format!("{node}.{port}"),
                    format!(
                        "{} role in domain {domain} on a port with no link",
                        role.label()
                    ),
                ));
            }
        }
    }

    // Per (node, domain): at most one slave port; the grandmaster hosts
    // no slave port in its own domains.
    for dom in &cfg.domains {
        for node in &cfg.nodes {
            let slave_ports: Vec<&str> = node
                .ports
                .iter()
                .filter(|p| cfg.role(&node.name, p, dom.id) == PortRole::Slave)
                .map(|p| p.as_str())
                .collect();
            if slave_ports.len() > 1 {
                errs.push(err(
                    ScenarioErrorKind::RoleConflict,
                    &node.name,
                    format!(
                        "two slave ports in domain {}: {} and {}",
                        dom.id, slave_ports[0], slave_ports[1]
                    ),
                ));
            }
            if node.name == dom.gm && !slave_ports.is_empty() {
                errs.push(err(
                    ScenarioErrorKind::RoleConflict,
                    &node.name,
                    format!(
                        "grandmaster of domain {} has a slave port {}",
                        dom.id, slave_ports[0]
                    ),
                ));
            }
        }
    }

    // Connectivity (over declared links, ignoring faults).
    if !cfg.nodes.is_empty() {
        let index: BTreeMap<&str, usize> = cfg
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.as_str(), i))
            .collect();
        let mut adj = vec![Vec::new(); cfg.nodes.len()];
        for link in &cfg.links {
            if let (Some(&a), Some(&b)) =
                (index.get(link.a.0.as_str()), index.get(link.b.0.as_str()))
            {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        let mut seen = vec![false; cfg.nodes.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            errs.push(err(
                ScenarioErrorKind::Invalid,
                &cfg.nodes[i].name,
                "node is not connected to the rest of the network".into(),
            ));
        }
    }

    // Events.
    for (i, event) in cfg.events.iter().enumerate() {
        let field = format!("event[{i}]");
        if event.at > cfg.duration {
            errs.push(err(
                ScenarioErrorKind::EventOutOfRange,
                &field,
                format!("event at {} is beyond duration {}", event.at, cfg.duration),
            ));
        }
        match &event.kind {
            FaultKind::ClockFailure { node } => {
                if !node_names.contains(node) {
                    errs.push(err(
                        ScenarioErrorKind::UnknownNode,
                        &field,
                        format!("unknown node {node:?}"),
                    ));
                }
            }
            FaultKind::LinkFailure { link } => {
                if !link_names.contains(link) {
                    errs.push(err(
                        ScenarioErrorKind::UnknownLink,
                        &field,
                        format!("unknown link {link:?}"),
                    ));
                }
            }
            FaultKind::BlackHole { node, port, .. } => {
                match cfg.nodes.iter().find(|n| &n.name == node) {
                    None => errs.push(err(
                        ScenarioErrorKind::UnknownNode,
                        &field,
                        format!("unknown node {node:?}"),
                    )),
                    Some(n) if n.kind != NodeKind::Bridge => errs.push(err(
                        ScenarioErrorKind::Invalid,
                        &field,
                        format!("black hole target {node:?} must be a bridge"),
                    )),
                    Some(n) if !n.ports.contains(port) => errs.push(err(
                        ScenarioErrorKind::DanglingPort,
                        &field,
                        format!("node {node:?} has no port {port:?}"),
                    )),
                    Some(_) => {}
                }
            }
        }
    }

    errs
}

// ---------------------------------------------------------------------------
// Built-in scenarios (Fig. 4 quad-motor ring)
// ---------------------------------------------------------------------------

const SWITCHES: [&str; 4] = ["sw_fl", "sw_fr", "sw_rr", "sw_rl"];
const ECUS: [&str; 4] = ["ecu_fl", "ecu_fr", "ecu_rr", "ecu_rl"];

/// Four switches in a ring, one wheel-motor ECU per switch, a body
/// controller (primary grandmaster, domains 0/1) on `sw_fl` and a main
/// computer (hot-standby grandmaster, domains 2/3, slave in 0/1) on the
/// diametrically opposite `sw_rr`. Every ECU is a slave in all four
/// domains. Domains 0 and 2 run clockwise, 1 and 3 counterclockwise.
pub fn builtin_quad_motor_ring() -> ScenarioConfig {
    let mut nodes = vec![
        NodeDecl {
            name: "body".into(),
            kind: NodeKind::EndStation,
            ports: vec!["p0".into()],
        },
        NodeDecl {
            name: "main".into(),
            kind: NodeKind::EndStation,
            ports: vec!["p0".into()],
        },
    ];
    for sw in SWITCHES {
        let mut ports = vec!["p_cw".into(), "p_ccw".into(), "p_ecu".into()];
        if sw == "sw_fl" || sw == "sw_rr" {
            ports.push("p_host".into());
        }
        nodes.push(NodeDecl {
            name: sw.into(),
            kind: NodeKind::Bridge,
            ports,
        });
    }
    for ecu in ECUS {
        nodes.push(NodeDecl {
            name: ecu.into(),
            kind: NodeKind::EndStation,
            ports: vec!["p0".into()],
        });
    }

    let link = |name: &str, a: (&str, &str), b: (&str, &str)| LinkDecl {
        name: name.into(),
        a: (a.0.into(), a.1.into()),
        b: (b.0.into(), b.1.into()),
        prop_delay: DEFAULT_PROP_DELAY,
        bitrate_bps: DEFAULT_BITRATE_BPS,
    };
    // Ring runs clockwise sw_fl -> sw_fr -> sw_rr -> sw_rl -> sw_fl.
    let links = vec![
        link("l_ring_fl_fr", ("sw_fl", "p_cw"), ("sw_fr", "p_ccw")),
        link("l_ring_fr_rr", ("sw_fr", "p_cw"), ("sw_rr", "p_ccw")),
        link("l_ring_rr_rl", ("sw_rr", "p_cw"), ("sw_rl", "p_ccw")),
        link("l_ring_rl_fl", ("sw_rl", "p_cw"), ("sw_fl", "p_ccw")),
        link("l_ecu_fl", ("sw_fl", "p_ecu"), ("ecu_fl", "p0")),
        link("l_ecu_fr", ("sw_fr", "p_ecu"), ("ecu_fr", "p0")),
        link("l_ecu_rr", ("sw_rr", "p_ecu"), ("ecu_rr", "p0")),
        link("l_ecu_rl", ("sw_rl", "p_ecu"), ("ecu_rl", "p0")),
        link("l_body", ("body", "p0"), ("sw_fl", "p_host")),
        link("l_main", ("main", "p0"), ("sw_rr", "p_host")),
    ];

    let domains = vec![
        DomainDecl {
            id: 0,
            gm: "body".into(),
            direction: Some("clockwise".into()),
        },
        DomainDecl {
            id: 1,
            gm: "body".into(),
            direction: Some("counterclockwise".into()),
        },
        DomainDecl {
            id: 2,
            gm: "main".into(),
            direction: Some("clockwise".into()),
        },
        DomainDecl {
            id: 3,
            gm: "main".into(),
            direction: Some("counterclockwise".into()),
        },
    ];

    let mut roles: BTreeMap<(String, String), BTreeMap<u8, PortRole>> = BTreeMap::new();
    let mut set = |node: &str, port: &str, domain: u8, role: PortRole| {
        roles
            .entry((node.to_string(), port.to_string()))
            .or_default()
            .insert(domain, role);
    };

    use PortRole::{Master, Passive, Slave};
    // Controllers.
    for d in 0..4 {
        set("body", "p0", d, if d < 2 { Master } else { Passive });
        set("main", "p0", d, if d < 2 { Slave } else { Master });
    }
    // Every ECU is a slave in every domain; every switch masters its ECU.
    for d in 0..4 {
        for ecu in ECUS {
            set(ecu, "p0", d, Slave);
        }
        for sw in SWITCHES {
            set(sw, "p_ecu", d, Master);
        }
    }
    // Host-facing switch ports.
    for d in 0..4 {
        set("sw_fl", "p_host", d, if d < 2 { Slave } else { Passive });
        set("sw_rr", "p_host", d, if d < 2 { Master } else { Slave });
    }
    // Ring dissemination. Domain 0: clockwise from sw_fl.
    set("sw_fl", "p_cw", 0, Master);
    set("sw_fl", "p_ccw", 0, Passive);
    set("sw_fr", "p_ccw", 0, Slave);
    set("sw_fr", "p_cw", 0, Master);
    set("sw_rr", "p_ccw", 0, Slave);
    set("sw_rr", "p_cw", 0, Master);
    set("sw_rl", "p_ccw", 0, Slave);
    set("sw_rl", "p_cw", 0, Passive);
    // Domain 1: counterclockwise from sw_fl.
    set("sw_fl", "p_ccw", 1, Master);
    set("sw_fl", "p_cw", 1, Passive);
    set("sw_rl", "p_cw", 1, Slave);
    set("sw_rl", "p_ccw", 1, Master);
    set("sw_rr", "p_cw", 1, Slave);
    set("sw_rr", "p_ccw", 1, Master);
    set("sw_fr", "p_cw", 1, Slave);
    set("sw_fr", "p_ccw", 1, Passive);
    // Domain 2: clockwise from sw_rr.
    set("sw_rr", "p_cw", 2, Master);
    set("sw_rr", "p_ccw", 2, Passive);
    set("sw_rl", "p_ccw", 2, Slave);
    set("sw_rl", "p_cw", 2, Master);
    set("sw_fl", "p_ccw", 2, Slave);
    set("sw_fl", "p_cw", 2, Master);
    set("sw_fr", "p_ccw", 2, Slave);
    set("sw_fr", "p_cw", 2, Passive);
    // Domain 3: counterclockwise from sw_rr.
    set("sw_rr", "p_ccw", 3, Master);
    set("sw_rr", "p_cw", 3, Passive);
    set("sw_fr", "p_cw", 3, Slave);
    set("sw_fr", "p_ccw", 3, Master);
    set("sw_fl", "p_cw", 3, Slave);
    set("sw_fl", "p_ccw", 3, Master);
    set("sw_rl", "p_cw", 3, Slave);
    set("sw_rl", "p_ccw", 3, Passive);

    // Paper-figure drift: every oscillator random-walks within
    // +/-0.5 us/s, redrawn each second.
    let walk = DriftModel::RandomWalk {
        step_bound: Duration::from_ns(500),
        step_interval: Duration::from_secs(1),
    };
    let clocks: BTreeMap<String, DriftModel> = nodes
        .iter()
        .map(|n| (n.name.clone(), walk.clone()))
        .collect();

    ScenarioConfig {
        name: "normal".into(),
        duration: SimTime::from_secs(20),
        seed: 1,
        sampling_interval: Duration::from_ms(10),
        engine: EngineConfig::default(),
        nodes,
        links,
        clocks,
        domains,
        roles,
        events: Vec::new(),
    }
}

/// Normal operation: the ring with drifting clocks and no faults.
pub fn builtin_normal() -> ScenarioConfig {
    builtin_quad_motor_ring()
}

/// Primary-grandmaster failure: the body controller dies at 4 s and the
/// hot-standby domains 2/3 carry every ECU for the rest of the run.
pub fn builtin_gm_failover() -> ScenarioConfig {
    let mut cfg = builtin_quad_motor_ring();
    cfg.name = "gm-failover".into();
    cfg.events.push(FaultEvent {
        at: SimTime::from_secs(4),
        kind: FaultKind::ClockFailure {
            node: "body".into(),
        },
    });
    cfg
}

/// Black-hole attack: from 2 s on, the front-left switch silently
/// discards Sync and Follow_Up toward its ECU, which then free-runs at
/// its own (constant, +10 ppm vs the drift-free primary) rate while
/// still answering pdelay.
pub fn builtin_blackhole() -> ScenarioConfig {
    let mut cfg = builtin_quad_motor_ring();
    cfg.name = "blackhole".into();
    cfg.clocks.insert("body".into(), DriftModel::None);
    cfg.clocks
        .insert("ecu_fl".into(), DriftModel::Constant { rate_ppm: 10.0 });
    cfg.events.push(FaultEvent {
        at: SimTime::from_secs(2),
        kind: FaultKind::BlackHole {
            node: "sw_fl".into(),
            port: "p_ecu".into(),
            filter: MsgClassSet::sync_pair(),
        },
    });
    cfg
}

pub const BUILTIN_NAMES: [&str; 3] = ["normal", "gm-failover", "blackhole"];

pub fn builtin(name: &str) -> Option<ScenarioConfig> {
    match name {
        "normal" => Some(builtin_normal()),
        "gm-failover" => Some(builtin_gm_failover()),
        "blackhole" => Some(builtin_blackhole()),
        _ => None,
    }
}

pub fn builtin_description(name: &str) -> &'static str {
    match name {
        "normal" => "quad-motor ring, drifting clocks, no faults",
        "gm-failover" => {
            "primary grandmaster (body controller) fails at 4s; standby domains survive"
        }
        "blackhole" => "front-left switch drops Sync/Follow_Up toward its ECU from 2s",
        _ => "",
    }
}

// ---------------------------------------------------------------------------
// Text format: parse
// ---------------------------------------------------------------------------

struct Cursor<'a> {
    line_no: u32,
    errs: &'a mut Vec<ScenarioError>,
}

impl Cursor<'_> {
    fn syntax(&mut self, field: &str, reason: impl Into<String>) {
        self.errs.push(ScenarioError::new(
            Some(self.line_no),
            ScenarioErrorKind::Syntax,
            field,
            reason,
        ));
    }
}

fn split_kv(line: &str) -> Option<(&str, &str)> {
    let (k, v) = line.split_once('=')?;
    Some((k.trim(), v.trim()))
}

/// Parses `a=1 b=2 flag=x` attribute tails into a map, preserving order
/// of first occurrence for error reporting.
fn parse_attrs<'a>(text: &'a str, cur: &mut Cursor<'_>, field: &str) -> Vec<(&'a str, &'a str)> {
    let mut out = Vec::new();
    for token in text.split_whitespace() {
        match token.split_once('=') {
            Some((k, v)) => out.push((k, v)),
            None => cur.syntax(field, format!("expected key=value, found {token:?}")),
        }
    }
    out
}

fn parse_duration_field(text: &str, cur: &mut Cursor<'_>, field: &str) -> Option<Duration> {
    match parse_ns(text) {
        Some(ns) => Some(Duration::from_ns(ns)),
        None => {
            cur.syntax(field, format!("invalid duration {text:?}"));
            None
        }
    }
}

fn parse_bitrate(text: &str) -> Option<u64> {
    if let Some(v) = text.strip_suffix("Gbps") {
        return v.trim().parse::<u64>().ok().map(|n| n * 1_000_000_000);
    }
    if let Some(v) = text.strip_suffix("Mbps") {
        return v.trim().parse::<u64>().ok().map(|n| n * 1_000_000);
    }
    if let Some(v) = text.strip_suffix("bps") {
        return v.trim().parse::<u64>().ok();
    }
    text.parse::<u64>().ok()
}

fn parse_drift(text: &str, cur: &mut Cursor<'_>, field: &str) -> Option<DriftModel> {
    let mut parts = text.split_whitespace();
    let head = parts.next()?;
    let tail: Vec<&str> = parts.collect();
    match head {
        "none" => Some(DriftModel::None),
        "constant" => {
            let mut rate = None;
            for token in &tail {
                if let Some(v) = token.strip_prefix("rate=") {
                    if let Some(ppm) = v.strip_suffix("ppm") {
                        rate = ppm.parse::<f64>().ok();
                    }
                }
            }
            match rate {
                Some(rate_ppm) if rate_ppm.abs() <= 10_000.0 => {
                    Some(DriftModel::Constant { rate_ppm })
                }
                Some(r) => {
                    cur.syntax(field, format!("constant rate {r} ppm outside +/-10000 ppm"));
                    None
                }
                None => {
                    cur.syntax(field, "constant drift requires rate=<value>ppm");
                    None
                }
            }
        }
        "random_walk" => {
            let mut step = None;
            let mut interval = Some(Duration::from_secs(1));
            for token in &tail {
                if let Some(v) = token.strip_prefix("step=") {
                    step = parse_ns(v).map(Duration::from_ns);
                } else if let Some(v) = token.strip_prefix("interval=") {
                    interval = parse_ns(v).map(Duration::from_ns);
                }
            }
            match (step, interval) {
                (Some(s), Some(i)) if i > Duration::ZERO => Some(DriftModel::RandomWalk {
                    step_bound: s,
                    step_interval: i,
                }),
                _ => {
                    cur.syntax(
                        field,
                        "random_walk requires step=<duration> [interval=<duration>]",
                    );
                    None
                }
            }
        }
        other => {
            cur.syntax(field, format!("unknown drift model {other:?}"));
            None
        }
    }
}

fn parse_filter(text: &str, cur: &mut Cursor<'_>, field: &str) -> MsgClassSet {
    let mut set = MsgClassSet::EMPTY;
    for item in text.split(',') {
        match MsgClass::parse(item.trim()) {
            Some(class) => set = set.with(class),
            None => cur.syntax(field, format!("unknown message class {item:?}")),
        }
    }
    set
}

/// Parses the scenario file format. Returns a fully validated config or
/// every error found, each tagged with its line where applicable.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, Vec<ScenarioError>> {
    let mut errs = Vec::new();
    let mut cfg = ScenarioConfig {
        name: String::new(),
        duration: SimTime::from_secs(20),
        seed: 1,
        sampling_interval: Duration::from_ms(10),
        engine: EngineConfig::default(),
        nodes: Vec::new(),
        links: Vec::new(),
        clocks: BTreeMap::new(),
        domains: Vec::new(),
        roles: BTreeMap::new(),
        events: Vec::new(),
    };

    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let mut cur = Cursor {
            line_no: idx as u32 + 1,
            errs: &mut errs,
        };
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            const KNOWN: [&str; 7] = [
                "general", "nodes", "links", "clocks", "domains", "roles", "events",
            ];
            if !KNOWN.contains(&section.as_str()) {
                cur.syntax(&section, "unknown section");
            }
            continue;
        }
        let Some((key, value)) = split_kv(line) else {
            cur.syntax(line, "expected key = value");
            continue;
        };

        match section.as_str() {
            "general" => match key {
                "name" => cfg.name = value.to_string(),
                "duration" => match value.parse::<SimTime>() {
                    Ok(d) => cfg.duration = d,
                    Err(e) => cur.syntax(key, e),
                },
                "seed" => match value.parse::<u64>() {
                    Ok(s) => cfg.seed = s,
                    Err(_) => cur.syntax(key, format!("invalid seed {value:?}")),
                },
                "sync_interval" => {
                    if let Some(d) = parse_duration_field(value, &mut cur, key) {
                        cfg.engine.sync_interval = d;
                    }
                }
                "pdelay_interval" => {
                    if let Some(d) = parse_duration_field(value, &mut cur, key) {
                        cfg.engine.pdelay_interval = d;
                    }
                }
                "sampling_interval" => {
                    if let Some(d) = parse_duration_field(value, &mut cur, key) {
                        cfg.sampling_interval = d;
                    }
                }
                "use_nrr" => cfg.engine.use_nrr = value == "true",
                "use_rate_ratio" => cfg.engine.use_rate_ratio = value == "true",
                "size_sync"
                | "size_follow_up"
                | "size_pdelay_req"
                | "size_pdelay_resp"
                | "size_pdelay_resp_follow_up" => match value.parse::<u32>() {
                    Ok(size) => {
                        let sizes = &mut cfg.engine.frame_sizes;
                        match key {
                            "size_sync" => sizes.sync = size,
                            "size_follow_up" => sizes.follow_up = size,
                            "size_pdelay_req" => sizes.pdelay_req = size,
                            "size_pdelay_resp" => sizes.pdelay_resp = size,
                            _ => sizes.pdelay_resp_follow_up = size,
                        }
                    }
                    Err(_) => cur.syntax(key, format!("invalid size {value:?}")),
                },
                other => cur.syntax(other, "unknown key in [general]"),
            },
            "nodes" => {
                // <name> = end_station|bridge ports=p0,p1,...
                let mut parts = value.split_whitespace();
                let kind = match parts.next() {
                    Some("end_station") => Some(NodeKind::EndStation),
                    Some("bridge") => Some(NodeKind::Bridge),
                    other => {
                        cur.syntax(key, format!("unknown node kind {other:?}"));
                        None
                    }
                };
                let mut ports = Vec::new();
                for token in parts {
                    if let Some(list) = token.strip_prefix("ports=") {
                        ports = list.split(',').map(|p| p.trim().to_string()).collect();
                    } else {
                        cur.syntax(key, format!("unexpected token {token:?}"));
                    }
                }
                if let Some(kind) = kind {
                    cfg.nodes.push(NodeDecl {
                        name: key.to_string(),
                        kind,
                        ports,
                    });
                }
            }
            "links" => {
                // <name> = a.port -- b.port [prop_delay=..] [bitrate=..]
                let mut prop_delay = DEFAULT_PROP_DELAY;
                let mut bitrate = DEFAULT_BITRATE_BPS;
                let mut ends = Vec::new();
                for token in value.split_whitespace() {
                    if token == "--" {
                        continue;
                    } else if let Some(v) = token.strip_prefix("prop_delay=") {
                        if let Some(d) = parse_duration_field(v, &mut cur, key) {
                            prop_delay = d;
                        }
                    } else if let Some(v) = token.strip_prefix("bitrate=") {
                        match parse_bitrate(v) {
                            Some(b) => bitrate = b,
                            None => cur.syntax(key, format!("invalid bitrate {v:?}")),
                        }
                    } else if let Some((node, port)) = token.split_once('.') {
                        ends.push((node.to_string(), port.to_string()));
                    } else {
                        cur.syntax(key, format!("expected node.port, found {token:?}"));
                    }
                }
                if ends.len() == 2 {
                    let mut it = ends.into_iter();
                    cfg.links.push(LinkDecl {
                        name: key.to_string(),
                        a: it.next().unwrap(),
                        b: it.next().unwrap(),
                        prop_delay,
                        bitrate_bps: bitrate,
                    });
                } else {
                    cur.syntax(key, "link requires exactly two node.port endpoints");
                }
            }
            "clocks" => {
                if let Some(model) = parse_drift(value, &mut cur, key) {
                    cfg.clocks.insert(key.to_string(), model);
                }
            }
            "domains" => {
                // d<id> = gm=<node> [direction=<label>]
                let id = match key.strip_prefix('d').and_then(|v| v.parse::<u8>().ok()) {
                    Some(id) => id,
                    None => {
                        cur.syntax(key, "domain key must be d<number>");
                        continue;
                    }
                };
                let mut gm = None;
                let mut direction = None;
                for (k, v) in parse_attrs(value, &mut cur, key) {
                    match k {
                        "gm" => gm = Some(v.to_string()),
                        "direction" => direction = Some(v.to_string()),
                        other => cur.syntax(key, format!("unknown attribute {other:?}")),
                    }
                }
                match gm {
                    Some(gm) => cfg.domains.push(DomainDecl { id, gm, direction }),
                    None => cur.syntax(key, "domain requires gm=<node>"),
                }
            }
            "roles" => {
                // node.port = d0:master d1:slave ...
                let Some((node, port)) = key.split_once('.') else {
                    cur.syntax(key, "role key must be node.port");
                    continue;
                };
                let entry = cfg
                    .roles
                    .entry((node.to_string(), port.to_string()))
                    .or_default();
                for token in value.split_whitespace() {
                    let parsed = token.split_once(':').and_then(|(d, r)| {
                        let id = d.strip_prefix('d')?.parse::<u8>().ok()?;
                        Some((id, PortRole::parse(r)?))
                    });
                    match parsed {
                        Some((id, role)) => {
                            entry.insert(id, role);
                        }
                        None => cur.syntax(key, format!("expected d<id>:<role>, found {token:?}")),
                    }
                }
            }
            "events" => {
                if key != "event" {
                    cur.syntax(key, "entries in [events] must be event = ...");
                    continue;
                }
                let mut parts = value.split_whitespace();
                let kind_name = parts.next().unwrap_or("");
                let tail: String = parts.collect::<Vec<_>>().join(" ");
                let attrs = parse_attrs(&tail, &mut cur, key);
                let get = |name: &str| attrs.iter().find(|(k, _)| *k == name).map(|(_, v)| *v);
                let at = match get("at").and_then(parse_ns) {
                    Some(ns) if ns >= 0 => SimTime::from_ns(ns as u64),
                    _ => {
                        cur.syntax(key, "event requires at=<time>");
                        continue;
                    }
                };
                let kind = match kind_name {
                    "clock_failure" => get("node").map(|node| FaultKind::ClockFailure {
                        node: node.to_string(),
                    }),
                    "link_failure" => get("link").map(|link| FaultKind::LinkFailure {
                        link: link.to_string(),
                    }),
                    "blackhole" => match (get("node"), get("port")) {
                        (Some(node), Some(port)) => {
                            let filter = match get("filter") {
                                Some(f) => parse_filter(f, &mut cur, key),
                                None => MsgClassSet::sync_pair(),
                            };
                            Some(FaultKind::BlackHole {
                                node: node.to_string(),
                                port: port.to_string(),
                                filter,
                            })
                        }
                        _ => None,
                    },
                    other => {
                        cur.syntax(key, format!("unknown event kind {other:?}"));
                        continue;
                    }
                };
                match kind {
                    Some(kind) => cfg.events.push(FaultEvent { at, kind }),
                    None => cur.syntax(key, "event is missing required attributes"),
                }
            }
            "" => cur.syntax(key, "entry before any [section]"),
            _ => {} // unknown section already reported
        }
    }

    errs.extend(validate(&cfg));
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(errs)
    }
}

// ---------------------------------------------------------------------------
// Text format: serialize
// ---------------------------------------------------------------------------

fn format_bitrate(bps: u64) -> String {
    if bps.is_multiple_of(1_000_000_000) {
        format!("{}Gbps", bps / 1_000_000_000)
    } else if bps.is_multiple_of(1_000_000) {
        format!("{}Mbps", bps / 1_000_000)
    } else {
        format!("{bps}bps")
    }
}

fn format_drift(model: &DriftModel) -> String {
    match model {
        DriftModel::None => "none".to_string(),
        DriftModel::Constant { rate_ppm } => format!("constant rate={rate_ppm}ppm"),
        DriftModel::RandomWalk {
            step_bound,
            step_interval,
        } => format!(
            "random_walk step={} interval={}",
            format_ns(step_bound.ns()),
            format_ns(step_interval.ns())
        ),
    }
}

/// Serializes a config into the scenario file format; the output parses
/// back to a structurally identical config.
pub fn serialize_scenario(cfg: &ScenarioConfig) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let w = &mut out;

    writeln!(w, "# gptpsim scenario").unwrap();
    writeln!(w, "[general]").unwrap();
    writeln!(w, "name = {}", cfg.name).unwrap();
    writeln!(w, "duration = {}", cfg.duration).unwrap();
    writeln!(w, "seed = {}", cfg.seed).unwrap();
    writeln!(w, "sync_interval = {}", cfg.engine.sync_interval).unwrap();
    writeln!(w, "pdelay_interval = {}", cfg.engine.pdelay_interval).unwrap();
    writeln!(w, "sampling_interval = {}", cfg.sampling_interval).unwrap();
    if cfg.engine.use_nrr {
        writeln!(w, "use_nrr = true").unwrap();
    }
    if cfg.engine.use_rate_ratio {
        writeln!(w, "use_rate_ratio = true").unwrap();
    }
    let sizes = cfg.engine.frame_sizes;
    let defaults = FrameSizes::default();
    if sizes != defaults {
        writeln!(w, "size_sync = {}", sizes.sync).unwrap();
        writeln!(w, "size_follow_up = {}", sizes.follow_up).unwrap();
        writeln!(w, "size_pdelay_req = {}", sizes.pdelay_req).unwrap();
        writeln!(w, "size_pdelay_resp = {}", sizes.pdelay_resp).unwrap();
        writeln!(
            w,
            "size_pdelay_resp_follow_up = {}",
            sizes.pdelay_resp_follow_up
        )
        .unwrap();
    }

    writeln!(w, "\n[nodes]").unwrap();
    for node in &cfg.nodes {
        let kind = match node.kind {
            NodeKind::EndStation => "end_station",
            NodeKind::Bridge => "bridge",
        };
        writeln!(w, "{} = {} ports={}", node.name, kind, node.ports.join(",")).unwrap();
    }

    writeln!(w, "\n[links]").unwrap();
    for link in &cfg.links {
        writeln!(
            w,
            "{} = {}.{} -- {}.{} prop_delay={} bitrate={}",
            link.name,
            link.a.0,
            link.a.1,
            link.b.0,
            link.b.1,
            format_ns(link.prop_delay.ns()),
            format_bitrate(link.bitrate_bps)
        )
        .unwrap();
    }

    writeln!(w, "\n[clocks]").unwrap();
    for (node, model) in &cfg.clocks {
        writeln!(w, "{} = {}", node, format_drift(model)).unwrap();
    }

    writeln!(w, "\n[domains]").unwrap();
    for dom in &cfg.domains {
        match &dom.direction {
            Some(dir) => writeln!(w, "d{} = gm={} direction={}", dom.id, dom.gm, dir).unwrap(),
            None => writeln!(w, "d{} = gm={}", dom.id, dom.gm).unwrap(),
        }
    }

    writeln!(w, "\n[roles]").unwrap();
    for ((node, port), by_domain) in &cfg.roles {
        let roles: Vec<String> = by_domain
            .iter()
            .map(|(d, r)| format!("d{}:{}", d, r.label()))
            .collect();
        writeln!(w, "{}.{} = {}", node, port, roles.join(" ")).unwrap();
    }

    if !cfg.events.is_empty() {
        writeln!(w, "\n[events]").unwrap();
        for event in &cfg.events {
            match &event.kind {
                FaultKind::ClockFailure { node } => {
                    writeln!(w, "event = clock_failure node={} at={}", node, event.at).unwrap();
                }
                FaultKind::LinkFailure { link } => {
                    writeln!(w, "event = link_failure link={} at={}", link, event.at).unwrap();
                }
                FaultKind::BlackHole { node, port, filter } => {
                    let classes: Vec<&str> = filter.iter().map(|c| c.label()).collect();
                    writeln!(
                        w,
                        "event = blackhole node={} port={} at={} filter={}",
                        node,
                        port,
                        event.at,
                        classes.join(",")
                    )
                    .unwrap();
                }
            }
        }
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_validate_cleanly() {
        for name in BUILTIN_NAMES {
            let cfg = builtin(name).unwrap();
            let errs = validate(&cfg);
            assert!(errs.is_empty(), "{name}: {errs:?}");
        }
    }

    #[test]
    fn ring_has_ten_nodes_and_four_domains() {
        let cfg = builtin_quad_motor_ring();
        assert_eq!(cfg.nodes.len(), 10);
        assert_eq!(cfg.domains.len(), 4);
        let gm_counts: Vec<&str> = cfg.domains.iter().map(|d| d.gm.as_str()).collect();
        assert_eq!(gm_counts, vec!["body", "body", "main", "main"]);
    }

    #[test]
    fn every_ecu_slaves_in_all_four_domains() {
        let cfg = builtin_quad_motor_ring();
        for ecu in ECUS {
            for d in 0..4 {
                assert_eq!(cfg.role(ecu, "p0", d), PortRole::Slave, "{ecu} d{d}");
            }
        }
    }

    #[test]
    fn builtin_roundtrips_through_text() {
        for name in BUILTIN_NAMES {
            let cfg = builtin(name).unwrap();
            let text = serialize_scenario(&cfg);
            let reparsed = parse_scenario(&text).expect("reparse");
            assert_eq!(cfg, reparsed, "{name} did not round-trip");
        }
    }

    #[test]
    fn two_slave_ports_is_a_role_conflict_naming_both() {
        let mut cfg = builtin_quad_motor_ring();
        cfg.roles
            .get_mut(&("sw_fl".to_string(), "p_cw".to_string()))
            .unwrap()
            .insert(0, PortRole::Slave);
        let errs = validate(&cfg);
        let conflict = errs
            .iter()
            .find(|e| e.kind == ScenarioErrorKind::RoleConflict)
            .expect("role conflict");
        assert!(conflict.reason.contains("p_cw") && conflict.reason.contains("p_host"));
    }

    #[test]
    fn blackhole_on_end_station_is_rejected() {
        let mut cfg = builtin_quad_motor_ring();
        cfg.events.push(FaultEvent {
            at: SimTime::from_secs(1),
            kind: FaultKind::BlackHole {
                node: "ecu_fl".into(),
                port: "p0".into(),
                filter: MsgClassSet::sync_pair(),
            },
        });
        let errs = validate(&cfg);
        assert!(
            errs.iter().any(|e| e.reason.contains("must be a bridge")),
            "{errs:?}"
        );
    }

    #[test]
    fn event_beyond_duration_is_out_of_range() {
        let mut cfg = builtin_quad_motor_ring();
        cfg.events.push(FaultEvent {
            at: SimTime::from_secs(30),
            kind: FaultKind::ClockFailure {
                node: "body".into(),
            },
        });
        let errs = validate(&cfg);
        assert!(errs
            .iter()
            .any(|e| e.kind == ScenarioErrorKind::EventOutOfRange));
    }

    #[test]
    fn parse_reports_line_numbers() {
        let text = "[general]\nname = x\nduration = bogus\n";
        let errs = parse_scenario(text).unwrap_err();
        assert!(errs.iter().any(|e| e.line == Some(3)), "{errs:?}");
    }

    #[test]
    fn parse_rejects_unknown_role_node() {
        let cfg = builtin_quad_motor_ring();
        let mut text = serialize_scenario(&cfg);
        text.push_str("\n[roles]\nghost.p0 = d0:slave\n");
        let errs = parse_scenario(&text).unwrap_err();
        assert!(
            errs.iter()
                .any(|e| e.kind == ScenarioErrorKind::DanglingPort),
            "{errs:?}"
        );
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let mut cfg = builtin_quad_motor_ring();
        cfg.nodes.push(NodeDecl {
            name: "orphan".into(),
            kind: NodeKind::EndStation,
            ports: vec!["p0".into()],
        });
        let errs = validate(&cfg);
        assert!(
            errs.iter().any(|e| e.reason.contains("not connected")),
            "{errs:?}"
        );
    }

    #[test]
    fn active_role_on_unlinked_port_is_rejected() {
        let mut cfg = builtin_quad_motor_ring();
        cfg.nodes
            .iter_mut()
            .find(|n| n.name == "sw_fl")
            .unwrap()
            .ports
            .push("p_spare".into());
        cfg.roles
            .entry(("sw_fl".into(), "p_spare".into()))
            .or_default()
            .insert(0, PortRole::Master);
        let errs = validate(&cfg);
        assert!(
            errs.iter().any(|e| e.reason.contains("no link")),
            "{errs:?}"
        );
    }

    #[test]
    fn event_on_unknown_node_is_rejected() {
        let mut cfg = builtin_quad_motor_ring();
        cfg.events.push(FaultEvent {
            at: SimTime::from_secs(1),
            kind: FaultKind::ClockFailure {
                node: "ghost".into(),
            },
        });
        let errs = validate(&cfg);
        assert!(
            errs.iter()
                .any(|e| e.kind == ScenarioErrorKind::UnknownNode),
            "{errs:?}"
        );
    }

    #[test]
    fn oversized_constant_drift_is_rejected() {
        let mut cfg = builtin_quad_motor_ring();
        cfg.clocks
            .insert("body".into(), DriftModel::Constant { rate_ppm: 20_000.0 });
        let errs = validate(&cfg);
        assert!(
            errs.iter().any(|e| e.reason.contains("10000 ppm")),
            "{errs:?}"
        );
    }

    #[test]
    fn undersized_frames_are_rejected() {
        let mut cfg = builtin_quad_motor_ring();
        cfg.engine.frame_sizes.sync = 32;
        let errs = validate(&cfg);
        assert!(
            errs.iter().any(|e| e.reason.contains("64-byte")),
            "{errs:?}"
        );
    }

    #[test]
    fn gm_with_slave_port_in_own_domain_is_conflict() {
        let mut cfg = builtin_quad_motor_ring();
        cfg.roles
            .get_mut(&("body".to_string(), "p0".to_string()))
            .unwrap()
            .insert(0, PortRole::Slave);
        let errs = validate(&cfg);
        assert!(
            errs.iter()
                .any(|e| e.kind == ScenarioErrorKind::RoleConflict
                    && e.reason.contains("grandmaster")),
            "{errs:?}"
        );
    }
}
