//! One slot of network dynamics.
//!
//! Intra-slot order is fixed: the policy decides on the start-of-slot state,
//! then overlay transmissions, then underlay service (wire hand-off followed
//! by FIFO service), then external arrivals, then the slot counter advances.

use crate::network::OverlayNetwork;
use crate::tunnels::TunnelId;

use super::arrivals::{ArrivalSampler, BackgroundFlow};
use super::packet::{Packet, PacketKind};
use super::state::NetworkState;
use super::SimError;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Transmission {
    pub tunnel: TunnelId,
    pub commodity: usize,
    pub packets: u32,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ProbeKind {
    Empty,
    Priority,
}

/// What a policy asks the network to do this slot.
#[derive(Clone, Debug, Default)]
pub struct SlotDecision {
    pub transmissions: Vec<Transmission>,
    pub probes: Vec<(TunnelId, ProbeKind)>,
    /// Packets admitted at a commodity's source by a rate controller; they
    /// join the source queue in the arrival phase.
    pub admissions: Vec<(usize, u64)>,
}

impl SlotDecision {
    pub fn clear(&mut self) {
        self.transmissions.clear();
        self.probes.clear();
        self.admissions.clear();
    }

    pub fn send(&mut self, tunnel: TunnelId, commodity: usize, packets: u32) {
        if packets > 0 {
            self.transmissions.push(Transmission {
                tunnel,
                commodity,
                packets,
            });
        }
    }

    pub fn is_empty(&self) -> bool {
        self.transmissions.is_empty() && self.probes.is_empty() && self.admissions.is_empty()
    }
}

/// A packet leaving its tunnel at the tail overlay node.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct ExitEvent {
    pub tunnel: TunnelId,
    pub commodity: usize,
    pub kind: PacketKind,
    pub inject_slot: u64,
    pub exit_slot: u64,
    pub probe_sum: u64,
}

/// Everything that happened during one slot. Buffers are reused across slots.
#[derive(Clone, Debug, Default)]
pub struct SlotTrace {
    pub slot: u64,
    commodities: usize,
    /// `F_l^k` actually sent, flattened `[tunnel * K + k]`.
    pub injected: Vec<u64>,
    /// `F̄_l^k`: data packets that left the tunnel.
    pub exited: Vec<u64>,
    /// `A_i^k` flattened `[overlay index * K + k]`, admissions included.
    pub arrivals: Vec<u64>,
    /// FIFO packets served per underlay link.
    pub served: Vec<u32>,
    /// Data packets of each tunnel entering each of its underlay queues,
    /// flattened with `hop_offsets`.
    pub hop_arrivals: Vec<u64>,
    hop_offsets: Vec<usize>,
    pub exits: Vec<ExitEvent>,
    pub delivered: Vec<u64>,
    pub probes_sent: Vec<(TunnelId, ProbeKind)>,
}

impl SlotTrace {
    pub fn new(net: &OverlayNetwork) -> Self {
        let k = net.num_commodities();
        let mut hop_offsets = Vec::with_capacity(net.tunnels().len() + 1);
        let mut acc = 0;
        for t in net.tunnels() {
            hop_offsets.push(acc);
            acc += net.tunnel_underlay_links(t.id).len();
        }
        hop_offsets.push(acc);
        Self {
            slot: 0,
            commodities: k,
            injected: vec![0; net.tunnels().len() * k],
            exited: vec![0; net.tunnels().len() * k],
            arrivals: vec![0; net.overlay_nodes().len() * k],
            served: vec![0; net.underlay_links().len()],
            hop_arrivals: vec![0; acc],
            hop_offsets,
            exits: Vec::new(),
            delivered: vec![0; k],
            probes_sent: Vec::new(),
        }
    }

    fn reset(&mut self, slot: u64) {
        self.slot = slot;
        self.injected.fill(0);
        self.exited.fill(0);
        self.arrivals.fill(0);
        self.served.fill(0);
        self.hop_arrivals.fill(0);
        self.exits.clear();
        self.delivered.fill(0);
        self.probes_sent.clear();
    }

    pub fn injected(&self, l: TunnelId, k: usize) -> u64 {
        self.injected[l.0 * self.commodities + k]
    }

    pub fn exited(&self, l: TunnelId, k: usize) -> u64 {
        self.exited[l.0 * self.commodities + k]
    }

    pub fn tunnel_injected(&self, l: TunnelId) -> u64 {
        self.injected[l.0 * self.commodities..(l.0 + 1) * self.commodities]
            .iter()
            .sum()
    }

    /// Data packets of tunnel `l` entering its `hop`-th underlay queue.
    pub fn hop_arrival(&self, l: TunnelId, hop: usize) -> u64 {
        self.hop_arrivals[self.hop_offsets[l.0] + hop]
    }

    /// Observed reduction factor for the flow of tunnel `l` reaching its
    /// `hop`-th underlay link this slot relative to what was injected.
    /// `None` when nothing was injected.
    pub fn flow_reduction(&self, l: TunnelId, hop: usize) -> Option<f64> {
        let sent = self.tunnel_injected(l);
        (sent > 0).then(|| self.hop_arrival(l, hop) as f64 / sent as f64)
    }
}

/// Immutable per-run machinery: the route table of every packet stream.
pub struct Engine<'n> {
    net: &'n OverlayNetwork,
    routes: Vec<Vec<usize>>,
    tail_index: Vec<usize>,
    first_background_route: usize,
    group_load: Vec<u32>,
    scratch: Vec<Transmission>,
}

impl<'n> Engine<'n> {
    pub fn new(net: &'n OverlayNetwork, background: &[BackgroundFlow]) -> Result<Self, SimError> {
        let mut routes: Vec<Vec<usize>> = net
            .tunnels()
            .iter()
            .map(|t| net.tunnel_underlay_links(t.id).to_vec())
            .collect();
        let tail_index = net
            .tunnels()
            .iter()
            .map(|t| net.overlay_index(t.tail()).expect("tunnel tail is overlay"))
            .collect();
        let first_background_route = routes.len();
        for f in background {
            routes.push(background_route(net, f)?);
        }
        Ok(Self {
            net,
            routes,
            tail_index,
            first_background_route,
            group_load: vec![0; net.first_link_groups().len()],
            scratch: Vec::new(),
        })
    }

    pub fn network(&self) -> &'n OverlayNetwork {
        self.net
    }

    pub fn background_flows(&self) -> usize {
        self.routes.len() - self.first_background_route
    }

    /// Advances `state` by one slot.
    ///
    /// Transmissions are applied in `(tunnel, commodity)` order; each moves
    /// `min(requested, remaining backlog)` packets. A decision that asks for
    /// more than a first link's capacity is rejected before anything moves.
    pub fn step(
        &mut self,
        state: &mut NetworkState,
        decision: &SlotDecision,
        sampler: &mut ArrivalSampler,
        trace: &mut SlotTrace,
    ) -> Result<(), SimError> {
        let net = self.net;
        let k_count = state.commodities;
        let t = state.slot;
        trace.reset(t);

        let mut txs = std::mem::take(&mut self.scratch);
        txs.clear();
        txs.extend_from_slice(&decision.transmissions);
        txs.sort_by_key(|x| (x.tunnel, x.commodity));
        {
            let load = &mut self.group_load;
            load.fill(0);
            for tx in &txs {
                if tx.tunnel.0 >= net.tunnels().len() {
                    return Err(SimError::UnknownTunnel(tx.tunnel));
                }
                if !net.usable(tx.tunnel).contains(&tx.commodity) {
                    return Err(SimError::UnusableCommodity {
                        tunnel: tx.tunnel,
                        commodity: tx.commodity,
                    });
                }
                let g = net.group_of(tx.tunnel);
                load[g] += tx.packets;
                let group = &net.first_link_groups()[g];
                if load[g] > group.capacity {
                    return Err(SimError::CapacityExceeded {
                        from: group.link.0,
                        to: group.link.1,
                        requested: load[g],
                        capacity: group.capacity,
                    });
                }
            }
        }

        // overlay transmissions
        for tx in &txs {
            let tunnel = net.tunnel(tx.tunnel);
            let src = net
                .overlay_index(tunnel.head())
                .expect("tunnel head is overlay");
            let q = &mut state.overlay_q[src * k_count + tx.commodity];
            let n = (tx.packets as u64).min(*q);
            if n == 0 {
                continue;
            }
            *q -= n;
            trace.injected[tx.tunnel.0 * k_count + tx.commodity] += n;
            if tunnel.is_direct() {
                trace.exited[tx.tunnel.0 * k_count + tx.commodity] += n;
                deliver(state, trace, self.tail_index[tx.tunnel.0], tx.commodity, n);
            } else {
                let first = self.routes[tx.tunnel.0][0];
                let packet = Packet {
                    route: tx.tunnel.0 as u32,
                    hop: 0,
                    commodity: tx.commodity as u16,
                    kind: PacketKind::Data,
                    inject_slot: t,
                    probe_sum: 0,
                };
                for _ in 0..n {
                    state.queues[first].push(packet);
                }
                state.in_flight[tx.tunnel.0 * k_count + tx.commodity] += n;
                state.underlay_data[tx.commodity] += n;
                trace.hop_arrivals[trace.hop_offsets[tx.tunnel.0]] += n;
            }
        }
        for &(l, kind) in &decision.probes {
            if l.0 >= net.tunnels().len() {
                return Err(SimError::UnknownTunnel(l));
            }
            if net.tunnel(l).is_direct() {
                continue;
            }
            let first = self.routes[l.0][0];
            state.queues[first].push(Packet {
                route: l.0 as u32,
                hop: 0,
                commodity: 0,
                kind: match kind {
                    ProbeKind::Empty => PacketKind::EmptyProbe,
                    ProbeKind::Priority => PacketKind::PriorityProbe,
                },
                inject_slot: t,
                probe_sum: 0,
            });
            trace.probes_sent.push((l, kind));
        }

        // underlay: hand off last slot's departures, then serve
        for ul in 0..state.wires.len() {
            let mut wire = std::mem::take(&mut state.wires[ul]);
            for p in wire.drain(..) {
                self.advance(state, trace, p);
            }
            state.wires[ul] = wire;
        }
        for ul in 0..state.queues.len() {
            let cap = net.underlay_links()[ul].capacity;
            trace.served[ul] = state.queues[ul].serve(cap, &mut state.wires[ul]) as u32;
        }
        self.scratch = txs;

        // external arrivals
        let commodities = net.commodities();
        let dest = &state.destination_index;
        let (overlay_q, arrived, arrivals) = (
            &mut state.overlay_q,
            &mut state.arrived,
            &mut trace.arrivals,
        );
        sampler.sample_arrivals(|node, k, n| {
            if node != dest[k] {
                overlay_q[node * k_count + k] += n;
                arrived[k] += n;
                arrivals[node * k_count + k] += n;
            }
        });
        for &(k, n) in &decision.admissions {
            if k >= commodities.len() {
                return Err(SimError::UnknownCommodity(k));
            }
            let node = net.overlay_index(commodities[k].source).expect("validated");
            state.overlay_q[node * k_count + k] += n;
            state.arrived[k] += n;
            trace.arrivals[node * k_count + k] += n;
        }
        let first_bg = self.first_background_route;
        let (queues, routes) = (&mut state.queues, &self.routes);
        sampler.sample_background(|flow, n| {
            let route = first_bg + flow;
            let packet = Packet {
                route: route as u32,
                hop: 0,
                commodity: u16::MAX,
                kind: PacketKind::Background,
                inject_slot: t,
                probe_sum: 0,
            };
            for _ in 0..n {
                queues[routes[route][0]].push(packet);
            }
        });

        state.slot += 1;
        Ok(())
    }

    fn advance(&self, state: &mut NetworkState, trace: &mut SlotTrace, mut p: Packet) {
        let route = &self.routes[p.route as usize];
        p.hop += 1;
        if (p.hop as usize) < route.len() {
            if p.kind == PacketKind::Data {
                trace.hop_arrivals[trace.hop_offsets[p.route as usize] + p.hop as usize] += 1;
            }
            state.queues[route[p.hop as usize]].push(p);
            return;
        }
        match p.kind {
            PacketKind::Background => state.background_delivered += 1,
            kind => {
                let l = p.route as usize;
                let k = p.commodity as usize;
                if kind == PacketKind::Data {
                    let k_count = state.commodities;
                    state.in_flight[l * k_count + k] -= 1;
                    state.underlay_data[k] -= 1;
                    trace.exited[l * k_count + k] += 1;
                    deliver(state, trace, self.tail_index[l], k, 1);
                }
                trace.exits.push(ExitEvent {
                    tunnel: TunnelId(l),
                    commodity: if kind == PacketKind::Data { k } else { 0 },
                    kind,
                    inject_slot: p.inject_slot,
                    exit_slot: state.slot,
                    probe_sum: p.probe_sum,
                });
            }
        }
    }
}

fn deliver(state: &mut NetworkState, trace: &mut SlotTrace, node: usize, k: usize, n: u64) {
    if node == state.destination_index[k] {
        state.delivered[k] += n;
        trace.delivered[k] += n;
    } else {
        state.overlay_q[node * state.commodities + k] += n;
    }
}

fn background_route(net: &OverlayNetwork, flow: &BackgroundFlow) -> Result<Vec<usize>, SimError> {
    let topo = net.topology();
    let invalid = || SimError::InvalidBackgroundPath(flow.path.clone());
    if flow.path.len() < 2 || !topo.is_underlay(flow.path[0]) {
        return Err(invalid());
    }
    let dest = *flow.path.last().unwrap();
    let expected = topo
        .underlay_path(flow.path[0], dest)
        .map_err(|_| invalid())?;
    if expected != flow.path {
        return Err(invalid());
    }
    flow.path
        .windows(2)
        .map(|w| net.underlay_link_index(w[0], w[1]).ok_or_else(invalid))
        .collect()
}
