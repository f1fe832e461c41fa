//! Slotted-time simulation of overlay networks running over legacy
//! single-path underlays, with backpressure-style routing policies, a small
//! LP toolkit for the fluid model, and an experiment harness.

pub mod harness;
pub mod lp;
pub mod network;
pub mod policy;
pub mod sim;
pub mod stats;
pub mod topology;
pub mod tunnels;

pub use network::{Commodity, NetworkError, OverlayNetwork};
pub use topology::{Link, NodeId, NodeKind, Topology, TopologyError};
pub use tunnels::{Tunnel, TunnelId};
