use serde::{Deserialize, Serialize};

use crate::network::OverlayNetwork;
use crate::sim::{NetworkState, PacketKind, ProbeKind, SlotDecision, SlotTrace};
use crate::tunnels::TunnelId;

#[derive(
    Copy, Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorMode {
    /// Live sum of the tunnel's underlay queue lengths.
    #[default]
    Exact,
    /// Delay of the most recent packet to leave the tunnel.
    Delay,
    /// Delay, refreshed by empty probes while the tunnel is idle.
    DelayProbe,
    /// Queue lengths collected by zero-capacity priority probes.
    PriorityProbe,
}

impl std::str::FromStr for EstimatorMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "exact" => Ok(EstimatorMode::Exact),
            "delay" => Ok(EstimatorMode::Delay),
            "delay-probe" | "delay+probe" | "delay-empty-probe" => Ok(EstimatorMode::DelayProbe),
            "priority-probe" | "priority" | "probe" => Ok(EstimatorMode::PriorityProbe),
            other => Err(format!(
                "unknown estimator `{other}` (expected exact, delay, delay-probe, priority-probe)"
            )),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub mode: EstimatorMode,
    /// Slots between priority probes on a tunnel.
    pub probe_interval: u64,
    /// Idle slots after which a tunnel sends an empty probe.
    pub idle_threshold: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            mode: EstimatorMode::Exact,
            probe_interval: 10,
            idle_threshold: 10,
        }
    }
}

/// Per-tunnel underlay backlog estimates.
#[derive(Clone, Debug)]
pub struct EstimatorState {
    config: EstimatorConfig,
    estimate: Vec<u64>,
    last_entry: Vec<u64>,
    transit: Vec<u64>,
    direct: Vec<bool>,
}

impl EstimatorState {
    pub fn new(net: &OverlayNetwork, config: EstimatorConfig) -> Self {
        let n = net.tunnels().len();
        Self {
            config,
            estimate: vec![0; n],
            last_entry: vec![0; n],
            transit: net.tunnels().iter().map(|t| t.empty_transit()).collect(),
            direct: net.tunnels().iter().map(|t| t.is_direct()).collect(),
        }
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    /// Backlog estimate for tunnel `l` at the start of the current slot.
    pub fn estimate(&self, net: &OverlayNetwork, state: &NetworkState, l: TunnelId) -> u64 {
        match self.config.mode {
            EstimatorMode::Exact => state.tunnel_backlog(net, l),
            _ => self.estimate[l.0],
        }
    }

    /// Stored estimate; zero in exact mode.
    pub fn stored(&self, l: TunnelId) -> u64 {
        self.estimate[l.0]
    }

    /// Appends this slot's probes. Tunnels already carrying data in
    /// `out.transmissions` are not considered idle.
    pub fn request_probes(&mut self, slot: u64, out: &mut SlotDecision) {
        match self.config.mode {
            EstimatorMode::Exact | EstimatorMode::Delay => {}
            EstimatorMode::DelayProbe => {
                for tx in &out.transmissions {
                    self.last_entry[tx.tunnel.0] = slot;
                }
                for l in 0..self.estimate.len() {
                    if !self.direct[l] && slot >= self.last_entry[l] + self.config.idle_threshold {
                        out.probes.push((TunnelId(l), ProbeKind::Empty));
                        self.last_entry[l] = slot;
                    }
                }
            }
            EstimatorMode::PriorityProbe => {
                let period = self.config.probe_interval;
                for l in 0..self.estimate.len() {
                    if !self.direct[l] && slot % period == l as u64 % period {
                        out.probes.push((TunnelId(l), ProbeKind::Priority));
                    }
                }
            }
        }
    }

    /// Folds this slot's tunnel exits into the estimates.
    pub fn observe(&mut self, trace: &SlotTrace) {
        let mode = self.config.mode;
        for e in &trace.exits {
            let l = e.tunnel.0;
            match (mode, e.kind) {
                (
                    EstimatorMode::Delay | EstimatorMode::DelayProbe,
                    PacketKind::Data | PacketKind::EmptyProbe,
                ) => {
                    let delay = e.exit_slot - e.inject_slot;
                    self.estimate[l] = delay.saturating_sub(self.transit[l]);
                }
                (EstimatorMode::PriorityProbe, PacketKind::PriorityProbe) => {
                    self.estimate[l] = e.probe_sum;
                }
                _ => {}
            }
        }
    }
}
