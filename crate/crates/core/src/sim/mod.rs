//! Deterministic slotted-time packet simulation.

mod arrivals;
mod engine;
mod packet;
mod run;
mod state;

use thiserror::Error;

use crate::policy::PolicyError;
use crate::topology::NodeId;
use crate::tunnels::TunnelId;

pub use arrivals::{ArrivalEntry, ArrivalProcess, ArrivalSampler, ArrivalSpec, BackgroundFlow};
pub use engine::{Engine, ExitEvent, ProbeKind, SlotDecision, SlotTrace, Transmission};
pub use packet::{fifo_serve, LinkQueue, Packet, PacketKind};
pub use run::{run, run_observed, RunResult, RunSummary, Simulation};
pub use state::NetworkState;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("decision sends {requested} packets over ({from}, {to}) with capacity {capacity}")]
    CapacityExceeded {
        from: NodeId,
        to: NodeId,
        requested: u32,
        capacity: u32,
    },
    #[error("unknown tunnel {0}")]
    UnknownTunnel(TunnelId),
    #[error("commodity {commodity} may not use tunnel {tunnel}")]
    UnusableCommodity { tunnel: TunnelId, commodity: usize },
    #[error("unknown commodity {0}")]
    UnknownCommodity(usize),
    #[error("arrivals configured at non-overlay node {0}")]
    NotOverlay(NodeId),
    #[error("invalid arrival rate {0}")]
    InvalidRate(f64),
    #[error("background path {0:?} does not follow underlay routing")]
    InvalidBackgroundPath(Vec<NodeId>),
    #[error("initial state does not match the network")]
    StateMismatch,
    #[error(transparent)]
    Policy(#[from] PolicyError),
}
