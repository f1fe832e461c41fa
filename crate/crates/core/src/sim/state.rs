use crate::network::OverlayNetwork;
use crate::topology::NodeId;
use crate::tunnels::TunnelId;

use super::packet::{LinkQueue, Packet, PacketKind};

/// Complete network state at a slot boundary.
///
/// Underlay packets are either waiting in a link's queue or on the link's
/// "wire": served during the previous slot and handed to the next hop at the
/// start of the following slot's underlay phase. Only queued packets count
/// toward `Q_ab`; wire packets are in transit.
#[derive(Clone, Debug)]
pub struct NetworkState {
    pub(crate) slot: u64,
    pub(crate) commodities: usize,
    pub(crate) overlay_q: Vec<u64>,
    pub(crate) queues: Vec<LinkQueue>,
    pub(crate) wires: Vec<Vec<Packet>>,
    pub(crate) in_flight: Vec<u64>,
    pub(crate) arrived: Vec<u64>,
    pub(crate) delivered: Vec<u64>,
    pub(crate) underlay_data: Vec<u64>,
    pub(crate) background_delivered: u64,
    pub(crate) destination_index: Vec<usize>,
}

impl NetworkState {
    pub fn new(net: &OverlayNetwork) -> Self {
        let k = net.num_commodities();
        let u = net.underlay_links().len();
        let destination_index = net
            .commodities()
            .iter()
            .map(|c| {
                net.overlay_index(c.destination)
                    .expect("validated commodity")
            })
            .collect();
        Self {
            slot: 0,
            commodities: k,
            overlay_q: vec![0; net.overlay_nodes().len() * k],
            queues: vec![LinkQueue::default(); u],
            wires: vec![Vec::new(); u],
            in_flight: vec![0; net.tunnels().len() * k],
            arrived: vec![0; k],
            delivered: vec![0; k],
            underlay_data: vec![0; k],
            background_delivered: 0,
            destination_index,
        }
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    /// `Q_i^k` by overlay index; zero at the commodity's destination.
    pub fn overlay_backlog_at(&self, overlay_idx: usize, k: usize) -> u64 {
        self.overlay_q[overlay_idx * self.commodities + k]
    }

    pub fn overlay_backlog(&self, net: &OverlayNetwork, node: NodeId, k: usize) -> u64 {
        net.overlay_index(node)
            .map_or(0, |i| self.overlay_backlog_at(i, k))
    }

    /// Seeds an overlay queue, e.g. to start an experiment from a backlog.
    /// Packets placed at the commodity's destination are ignored.
    pub fn preload(&mut self, net: &OverlayNetwork, node: NodeId, k: usize, packets: u64) {
        if let Some(i) = net.overlay_index(node) {
            if i != self.destination_index[k] {
                self.overlay_q[i * self.commodities + k] += packets;
                self.arrived[k] += packets;
            }
        }
    }

    /// `Q_ab`: packets queued on underlay link `ulink` (priority probes excluded).
    pub fn underlay_backlog(&self, ulink: usize) -> u64 {
        self.queues[ulink].len() as u64
    }

    pub fn link_queue(&self, ulink: usize) -> &LinkQueue {
        &self.queues[ulink]
    }

    /// `Σ Q_ab` over the underlay links of tunnel `id`.
    pub fn tunnel_backlog(&self, net: &OverlayNetwork, id: TunnelId) -> u64 {
        net.tunnel_underlay_links(id)
            .iter()
            .map(|&u| self.queues[u].len() as u64)
            .sum()
    }

    /// `H_l^k`: packets injected into tunnel `id` that have not exited yet.
    pub fn in_flight(&self, id: TunnelId, k: usize) -> u64 {
        self.in_flight[id.0 * self.commodities + k]
    }

    pub fn arrived(&self, k: usize) -> u64 {
        self.arrived[k]
    }

    pub fn delivered(&self, k: usize) -> u64 {
        self.delivered[k]
    }

    pub fn background_delivered(&self) -> u64 {
        self.background_delivered
    }

    /// Commodity `k` packets still inside the network: overlay queues plus
    /// underlay queues plus links in transit.
    pub fn commodity_backlog(&self, k: usize) -> u64 {
        let overlay: u64 = self
            .overlay_q
            .iter()
            .skip(k)
            .step_by(self.commodities)
            .sum();
        overlay + self.underlay_data[k]
    }

    pub fn total_backlog(&self) -> u64 {
        (0..self.commodities)
            .map(|k| self.commodity_backlog(k))
            .sum()
    }

    pub fn total_overlay_backlog(&self) -> u64 {
        self.overlay_q.iter().sum()
    }

    pub fn total_underlay_backlog(&self) -> u64 {
        self.queues.iter().map(|q| q.len() as u64).sum()
    }

    /// Recounts every data packet from raw queues and checks
    /// `arrived = overlay + underlay + delivered` per commodity, `H` against
    /// the packets actually inside each tunnel, and destination queues at 0.
    pub fn check_invariants(&self, net: &OverlayNetwork) -> Result<(), String> {
        let k = self.commodities;
        let mut underlay = vec![0u64; k];
        let mut per_tunnel = vec![0u64; self.in_flight.len()];
        let all = self
            .queues
            .iter()
            .flat_map(|q| q.iter())
            .chain(self.wires.iter().flatten());
        for p in all {
            if p.kind == PacketKind::Data {
                underlay[p.commodity as usize] += 1;
                per_tunnel[p.route as usize * k + p.commodity as usize] += 1;
            }
        }
        if per_tunnel != self.in_flight {
            return Err(format!(
                "slot {}: in-flight counters disagree with queues",
                self.slot
            ));
        }
        for (c, &under) in underlay.iter().enumerate().take(k) {
            if under != self.underlay_data[c] {
                return Err(format!(
                    "slot {}: commodity {c} underlay count drift",
                    self.slot
                ));
            }
            let overlay: u64 = (0..net.overlay_nodes().len())
                .map(|i| self.overlay_backlog_at(i, c))
                .sum();
            if self.arrived[c] != overlay + under + self.delivered[c] {
                return Err(format!(
                    "slot {}: commodity {c} not conserved: arrived {} != overlay {overlay} + underlay {} + delivered {}",
                    self.slot, self.arrived[c], under, self.delivered[c]
                ));
            }
            if self.overlay_backlog_at(self.destination_index[c], c) != 0 {
                return Err(format!(
                    "slot {}: destination backlog of commodity {c} is not 0",
                    self.slot
                ));
            }
        }
        Ok(())
    }
}
