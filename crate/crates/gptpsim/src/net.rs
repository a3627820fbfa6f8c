//! Nodes, ports, full-duplex links, and frame transmission mechanics.
//!
//! Links model propagation delay plus serialization occupancy: a frame
//! holds its link direction busy for `size * 8 / bitrate` after its
//! start-of-frame, and a frame queued behind it departs when the line
//! frees. Hardware timestamps are ideal and taken at start-of-frame on
//! the wire, at both ends; the receiving protocol entity is handed the
//! frame one propagation delay after the sender's start-of-frame.

use thiserror::Error;

use crate::gptp::GptpMessage;
use crate::time::{Duration, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(pub u32);

/// gPTP time domain number (0..=3 in the built-in scenarios).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DomainId(pub u8);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    EndStation,
    Bridge,
}

#[derive(Debug)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
    pub ports: Vec<PortId>,
    /// Set by a clock-failure fault: the node stops all protocol
    /// activity but remains physically attached.
    pub failed: bool,
}

#[derive(Debug)]
pub struct Port {
    pub name: String,
    pub node: NodeId,
    pub link: Option<LinkId>,
}

#[derive(Debug)]
pub struct Link {
    pub a: PortId,
    pub b: PortId,
    pub prop_delay: Duration,
    pub bitrate_bps: u64,
    pub up: bool,
    /// Next instant each direction's line is free; index 0 carries a->b.
    busy_until: [SimTime; 2],
}

/// An Ethernet frame carrying one gPTP message.
#[derive(Debug, Clone)]
pub struct Frame {
    pub src_port: PortId,
    pub dst_port: PortId,
    pub size_bytes: u32,
    pub payload: GptpMessage,
    /// Sender local time at start-of-frame on the wire.
    pub egress_ts: Duration,
    /// Sim time of start-of-frame on the wire.
    pub egress_sim: SimTime,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TxError {
    #[error("link is down")]
    LinkDown,
    #[error("port has no attached link")]
    NoLink,
}

/// Wire-level schedule for one frame, computed by
/// [`Network::prepare_transmit`].
#[derive(Debug, Clone, Copy)]
pub struct PreparedTx {
    /// Start-of-frame instant on the wire (>= the request instant when
    /// the line is busy).
    pub start: SimTime,
    /// Delivery instant at the peer: start + prop_delay.
    pub deliver_at: SimTime,
    pub dst_port: PortId,
}

#[derive(Debug, Default)]
pub struct Network {
    nodes: Vec<Node>,
    ports: Vec<Port>,
    links: Vec<Link>,
}

impl Network {
    pub fn new() -> Self {
        Network::default()
    }

    pub fn add_node(&mut self, name: impl Into<String>, kind: NodeKind) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node {
            name: name.into(),
            kind,
            ports: Vec::new(),
            failed: false,
        });
        id
    }

    pub fn add_port(&mut self, node: NodeId, name: impl Into<String>) -> PortId {
        let id = PortId(self.ports.len() as u32);
        self.ports.push(Port {
            name: name.into(),
            node,
            link: None,
        });
        self.nodes[node.0 as usize].ports.push(id);
        id
    }

    /// Connects two free ports with a full-duplex link.
    pub fn connect(
        &mut self,
        a: PortId,
        b: PortId,
        prop_delay: Duration,
        bitrate_bps: u64,
    ) -> LinkId {
        assert!(
            self.ports[a.0 as usize].link.is_none(),
            "port already linked"
        );
        assert!(
            self.ports[b.0 as usize].link.is_none(),
            "port already linked"
        );
        assert!(bitrate_bps > 0 && prop_delay >= Duration::ZERO);
        let id = LinkId(self.links.len() as u32);
        self.links.push(Link {
            a,
            b,
            prop_delay,
            bitrate_bps,
            up: true,
            busy_until: [SimTime::ZERO; 2],
        });
        self.ports[a.0 as usize].link = Some(id);
        self.ports[b.0 as usize].link = Some(id);
        id
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0 as usize]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut Node {
        &mut self.nodes[id.0 as usize]
    }

    pub fn port(&self, id: PortId) -> &Port {
        &self.ports[id.0 as usize]
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.0 as usize]
    }

    pub fn link_mut(&mut self, id: LinkId) -> &mut Link {
        &mut self.links[id.0 as usize]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn port_count(&self) -> usize {
        self.ports.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (NodeId(i as u32), n))
    }

    pub fn links(&self) -> impl Iterator<Item = (LinkId, &Link)> {
        self.links
            .iter()
            .enumerate()
            .map(|(i, l)| (LinkId(i as u32), l))
    }

    /// The port at the far end of `port`'s link, if attached.
    pub fn peer_port(&self, port: PortId) -> Option<PortId> {
        let link = self.ports[port.0 as usize].link?;
        let link = &self.links[link.0 as usize];
        Some(if link.a == port { link.b } else { link.a })
    }

    /// Reserves the line for one frame of `size_bytes` leaving `port` no
    /// earlier than `now`, and returns where and when it lands. The
    /// caller stamps timestamps and schedules the delivery event.
    pub fn prepare_transmit(
        &mut self,
        now: SimTime,
        port: PortId,
        size_bytes: u32,
    ) -> Result<PreparedTx, TxError> {
        let link_id = self.ports[port.0 as usize].link.ok_or(TxError::NoLink)?;
        let link = &mut self.links[link_id.0 as usize];
        if !link.up {
            return Err(TxError::LinkDown);
        }
        let dir = if link.a == port { 0 } else { 1 };
        let dst_port = if dir == 0 { link.b } else { link.a };
        let start = now.max(link.busy_until[dir]);
        let ser = serialization_time(size_bytes, link.bitrate_bps);
        link.busy_until[dir] = start + ser;
        Ok(PreparedTx {
            start,
            deliver_at: start + link.prop_delay,
            dst_port,
        })
    }
}

/// Time to clock `size_bytes` onto the wire at `bitrate_bps`.
pub fn serialization_time(size_bytes: u32, bitrate_bps: u64) -> Duration {
    let bits = size_bytes as u128 * 8;
    Duration::from_ns((bits * 1_000_000_000 / bitrate_bps as u128) as i64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_node_net() -> (Network, PortId, PortId) {
        let mut net = Network::new();
        let a = net.add_node("a", NodeKind::EndStation);
        let b = net.add_node("b", NodeKind::EndStation);
        let pa = net.add_port(a, "p0");
        let pb = net.add_port(b, "p0");
        net.connect(pa, pb, Duration::from_ns(500), 100_000_000);
        (net, pa, pb)
    }

    #[test]
    fn serialization_arithmetic() {
        // 90 bytes at 100 Mbps: 720 bits / 1e8 bps = 7.2 us.
        assert_eq!(
            serialization_time(90, 100_000_000),
            Duration::from_ns(7_200)
        );
        assert_eq!(
            serialization_time(64, 100_000_000),
            Duration::from_ns(5_120)
        );
    }

    #[test]
    fn delivery_after_prop_delay() {
        let (mut net, pa, pb) = two_node_net();
        let tx = net.prepare_transmit(SimTime::from_secs(1), pa, 64).unwrap();
        assert_eq!(tx.start, SimTime::from_secs(1));
        assert_eq!(tx.deliver_at, SimTime::from_ns(1_000_000_500));
        assert_eq!(tx.dst_port, pb);
    }

    #[test]
    fn second_frame_queues_behind_serialization() {
        let (mut net, pa, _) = two_node_net();
        let t = SimTime::from_secs(1);
        let first = net.prepare_transmit(t, pa, 90).unwrap();
        let second = net.prepare_transmit(t, pa, 64).unwrap();
        assert_eq!(first.start, t);
        assert_eq!(second.start, t + Duration::from_ns(7_200));
    }

    #[test]
    fn directions_are_independent() {
        let (mut net, pa, pb) = two_node_net();
        let t = SimTime::from_secs(1);
        net.prepare_transmit(t, pa, 90).unwrap();
        let reverse = net.prepare_transmit(t, pb, 64).unwrap();
        assert_eq!(reverse.start, t);
    }

    #[test]
    fn down_link_rejects_transmission() {
        let (mut net, pa, _) = two_node_net();
        let link = net.port(pa).link.unwrap();
        net.link_mut(link).up = false;
        assert_eq!(
            net.prepare_transmit(SimTime::ZERO, pa, 64).unwrap_err(),
            TxError::LinkDown
        );
    }

    #[test]
    fn deliveries_on_one_direction_are_fifo() {
        let (mut net, pa, _) = two_node_net();
        let mut last_deliver = SimTime::ZERO;
        for k in 0..10 {
            let tx = net
                .prepare_transmit(SimTime::from_ns(k * 100), pa, 64)
                .unwrap();
            assert!(tx.deliver_at > last_deliver);
            last_deliver = tx.deliver_at;
        }
    }
}
