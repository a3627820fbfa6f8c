//! Deterministic discrete-event simulator of gPTP (IEEE 802.1AS-style)
//! time synchronization over automotive Ethernet ring topologies.
//!
//! The simulator reproduces three experiments on a quad-motor ring
//! network with redundant grandmasters: normal multi-domain
//! synchronization under clock drift, failover from a failed primary
//! grandmaster to a hot-standby clock, and a black-hole switch attack.
//! Runs emit per-node clock-offset traces (CSV), a structured summary
//! (JSON), and an event log.
//!
//! Entry points: [`scenario::builtin`] / [`scenario::parse_scenario`]
//! to obtain a [`scenario::ScenarioConfig`], then [`runner::run_scenario`].

pub mod clock;
pub mod gptp;
pub mod log;
pub mod metrics;
pub mod net;
pub mod runner;
pub mod scenario;
pub mod sim;
pub mod time;

pub use runner::{run_scenario, run_scenario_with_epsilon, RunOutput};
pub use scenario::{builtin, parse_scenario, ScenarioConfig};
pub use time::{Duration, SimTime};
