//! Compiled overlay network: topology, commodities and the tunnels they can
//! use, with the dense indices the simulator, policies and LPs share.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{NodeId, Topology, TopologyError};
use crate::tunnels::{enumerate_all, Tunnel, TunnelId};

/// A source-destination pair. `pinned`, when set, restricts the commodity to
/// the tunnel with exactly that path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Commodity {
    pub source: NodeId,
    pub destination: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pinned: Option<Vec<NodeId>>,
}

impl Commodity {
    pub fn new(source: NodeId, destination: NodeId) -> Self {
        Self {
            source,
            destination,
            pinned: None,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetworkError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("commodity {0}: source equals destination")]
    SourceIsDestination(usize),
    #[error("commodity {commodity}: endpoint {node} is not an overlay node")]
    NotOverlay { commodity: usize, node: NodeId },
    #[error("commodity {commodity}: pinned path is not a tunnel of this topology")]
    PinnedPathMissing { commodity: usize },
    #[error("link ({0}, {1}) does not exist")]
    UnknownLink(NodeId, NodeId),
}

/// A link whose tail is an underlay node. These are the links with FIFO
/// queues and (in the fluid model) dual prices.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct UnderlayLink {
    pub from: NodeId,
    pub to: NodeId,
    pub capacity: u32,
}

/// Tunnels that leave an overlay node over the same physical link and so
/// share its capacity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FirstLinkGroup {
    pub link: (NodeId, NodeId),
    pub capacity: u32,
    pub tunnels: Vec<TunnelId>,
}

#[derive(Clone, Debug)]
pub struct OverlayNetwork {
    topology: Topology,
    commodities: Vec<Commodity>,
    tunnels: Vec<Tunnel>,
    usable: Vec<Vec<usize>>,
    pair_offsets: Vec<usize>,
    overlay: Vec<NodeId>,
    overlay_index: HashMap<NodeId, usize>,
    ulinks: Vec<UnderlayLink>,
    ulink_index: HashMap<(NodeId, NodeId), usize>,
    tunnel_ulinks: Vec<Vec<usize>>,
    groups: Vec<FirstLinkGroup>,
    tunnel_group: Vec<usize>,
    through: HashMap<(NodeId, NodeId), Vec<TunnelId>>,
}

impl OverlayNetwork {
    /// Keeps the tunnels some commodity can use to make progress: tunnel
    /// `u -> v` is usable by commodity `k` when `u` is reachable from the
    /// source without passing the destination, and the destination is
    /// reachable from `v`. Surviving tunnels are renumbered densely in
    /// enumeration order.
    pub fn new(topology: Topology, commodities: Vec<Commodity>) -> Result<Self, NetworkError> {
        topology.validate()?;
        for (k, c) in commodities.iter().enumerate() {
            if c.source == c.destination {
                return Err(NetworkError::SourceIsDestination(k));
            }
            for node in [c.source, c.destination] {
                if !topology.is_overlay(node) {
                    return Err(NetworkError::NotOverlay { commodity: k, node });
                }
            }
        }

        let all = enumerate_all(&topology);
        let mut usable_all: Vec<Vec<usize>> = vec![Vec::new(); all.len()];
        for (k, c) in commodities.iter().enumerate() {
            if let Some(pinned) = &c.pinned {
                let t = all
                    .iter()
                    .find(|t| &t.path == pinned)
                    .ok_or(NetworkError::PinnedPathMissing { commodity: k })?;
                usable_all[t.id.0].push(k);
                continue;
            }
            let forward = reachable(&all, c.source, Some(c.destination), false);
            let backward = reachable(&all, c.destination, None, true);
            for t in &all {
                if t.head() != c.destination
                    && forward.contains(&t.head())
                    && backward.contains(&t.tail())
                {
                    usable_all[t.id.0].push(k);
                }
            }
        }

        let mut tunnels = Vec::new();
        let mut usable = Vec::new();
        for (t, ks) in all.into_iter().zip(usable_all) {
            if !ks.is_empty() {
                tunnels.push(Tunnel {
                    id: TunnelId(tunnels.len()),
                    path: t.path,
                });
                usable.push(ks);
            }
        }

        let mut pair_offsets = Vec::with_capacity(usable.len() + 1);
        let mut acc = 0;
        for ks in &usable {
            pair_offsets.push(acc);
            acc += ks.len();
        }
        pair_offsets.push(acc);

        let overlay: Vec<NodeId> = topology.overlay_nodes().collect();
        let overlay_index = overlay.iter().enumerate().map(|(i, &n)| (n, i)).collect();

        let mut ulinks = Vec::new();
        let mut ulink_index = HashMap::new();
        for l in topology.links() {
            if topology.is_underlay(l.from) {
                ulink_index.insert((l.from, l.to), ulinks.len());
                ulinks.push(UnderlayLink {
                    from: l.from,
                    to: l.to,
                    capacity: l.capacity,
                });
            }
        }

        let tunnel_ulinks = tunnels
            .iter()
            .map(|t| t.underlay_links().map(|l| ulink_index[&l]).collect())
            .collect();

        let mut groups: Vec<FirstLinkGroup> = Vec::new();
        let mut tunnel_group = Vec::with_capacity(tunnels.len());
        for t in &tunnels {
            let link = t.first_link();
            let g = match groups.iter().position(|g| g.link == link) {
                Some(g) => g,
                None => {
                    let capacity = topology.link(link.0, link.1)?.capacity;
                    groups.push(FirstLinkGroup {
                        link,
                        capacity,
                        tunnels: Vec::new(),
                    });
                    groups.len() - 1
                }
            };
            groups[g].tunnels.push(t.id);
            tunnel_group.push(g);
        }

        let mut through: HashMap<(NodeId, NodeId), Vec<TunnelId>> = HashMap::new();
        for t in &tunnels {
            for l in t.links() {
                through.entry(l).or_default().push(t.id);
            }
        }

        Ok(Self {
            topology,
            commodities,
            tunnels,
            usable,
            pair_offsets,
            overlay,
            overlay_index,
            ulinks,
            ulink_index,
            tunnel_ulinks,
            groups,
            tunnel_group,
            through,
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn commodities(&self) -> &[Commodity] {
        &self.commodities
    }

    pub fn num_commodities(&self) -> usize {
        self.commodities.len()
    }

    pub fn tunnels(&self) -> &[Tunnel] {
        &self.tunnels
    }

    pub fn tunnel(&self, id: TunnelId) -> &Tunnel {
        &self.tunnels[id.0]
    }

    /// Commodities allowed on tunnel `id`, ascending.
    pub fn usable(&self, id: TunnelId) -> &[usize] {
        &self.usable[id.0]
    }

    /// All usable `(tunnel, commodity)` pairs ordered by tunnel then commodity.
    pub fn pairs(&self) -> impl Iterator<Item = (TunnelId, usize)> + '_ {
        self.tunnels
            .iter()
            .flat_map(move |t| self.usable[t.id.0].iter().map(move |&k| (t.id, k)))
    }

    pub fn num_pairs(&self) -> usize {
        *self.pair_offsets.last().unwrap_or(&0)
    }

    /// Position of `(id, k)` in [`pairs`](Self::pairs), if usable.
    pub fn pair_index(&self, id: TunnelId, k: usize) -> Option<usize> {
        let pos = self.usable.get(id.0)?.binary_search(&k).ok()?;
        Some(self.pair_offsets[id.0] + pos)
    }

    /// Pair indices of tunnel `id`, aligned with [`usable`](Self::usable).
    pub fn pair_range(&self, id: TunnelId) -> std::ops::Range<usize> {
        self.pair_offsets[id.0]..self.pair_offsets[id.0 + 1]
    }

    pub fn overlay_nodes(&self) -> &[NodeId] {
        &self.overlay
    }

    pub fn overlay_index(&self, node: NodeId) -> Option<usize> {
        self.overlay_index.get(&node).copied()
    }

    pub fn underlay_links(&self) -> &[UnderlayLink] {
        &self.ulinks
    }

    pub fn underlay_link_index(&self, from: NodeId, to: NodeId) -> Option<usize> {
        self.ulink_index.get(&(from, to)).copied()
    }

    /// Underlay link indices traversed by tunnel `id`, in path order.
    pub fn tunnel_underlay_links(&self, id: TunnelId) -> &[usize] {
        &self.tunnel_ulinks[id.0]
    }

    pub fn first_link_groups(&self) -> &[FirstLinkGroup] {
        &self.groups
    }

    pub fn group_of(&self, id: TunnelId) -> usize {
        self.tunnel_group[id.0]
    }

    /// Tunnels crossing link `(a, b)`; empty for a link no tunnel uses.
    pub fn tunnels_through(&self, a: NodeId, b: NodeId) -> Result<&[TunnelId], NetworkError> {
        if self.topology.link_id(a, b).is_none() {
            return Err(NetworkError::UnknownLink(a, b));
        }
        Ok(self.through.get(&(a, b)).map_or(&[], Vec::as_slice))
    }

    pub fn find_tunnel(&self, path: &[NodeId]) -> Option<TunnelId> {
        self.tunnels.iter().find(|t| t.path == path).map(|t| t.id)
    }
}

/// Overlay nodes reachable from `start` over tunnels (or reaching `start`
/// when `reverse`), never expanding out of `blocked`.
fn reachable(
    tunnels: &[Tunnel],
    start: NodeId,
    blocked: Option<NodeId>,
    reverse: bool,
) -> BTreeSet<NodeId> {
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(x) = stack.pop() {
        if Some(x) == blocked {
            continue;
        }
        for t in tunnels {
            let (from, to) = if reverse {
                (t.tail(), t.head())
            } else {
                (t.head(), t.tail())
            };
            if from == x && seen.insert(to) {
                stack.push(to);
            }
        }
    }
    seen
}

/// Convenience wrapper: the tunnels a set of commodities can use.
pub fn enumerate_tunnels(
    topology: &Topology,
    commodities: &[Commodity],
) -> Result<Vec<Tunnel>, NetworkError> {
    Ok(OverlayNetwork::new(topology.clone(), commodities.to_vec())?.tunnels)
}
