//! Physical network: nodes, capacitated directed links and static underlay
//! next-hop routing.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    /// Controllable node that makes per-slot routing decisions.
    Overlay,
    /// Legacy node with fixed single-path routing and FIFO forwarding.
    Underlay,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub from: NodeId,
    pub to: NodeId,
    /// Packets per slot.
    pub capacity: u32,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TopologyError {
    #[error("duplicate node {0}")]
    DuplicateNode(NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("duplicate link ({0}, {1})")]
    DuplicateLink(NodeId, NodeId),
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("link ({0}, {1}) has zero capacity")]
    ZeroCapacity(NodeId, NodeId),
    #[error("unknown link ({0}, {1})")]
    UnknownLink(NodeId, NodeId),
    #[error("route entry at {at} toward {dest}: only underlay nodes carry route tables")]
    RouteAtOverlay { at: NodeId, dest: NodeId },
    #[error("route entry at {at} toward {dest} uses missing link to {next}")]
    RouteWithoutLink {
        at: NodeId,
        dest: NodeId,
        next: NodeId,
    },
    #[error("no underlay route from {from} to {to}")]
    Unreachable { from: NodeId, to: NodeId },
    #[error("underlay route from {from} to {to} revisits node {node}")]
    RouteCycle {
        from: NodeId,
        to: NodeId,
        node: NodeId,
    },
    #[error("underlay route from {from} to {to} passes through overlay node {node}")]
    RouteThroughOverlay {
        from: NodeId,
        to: NodeId,
        node: NodeId,
    },
}

/// Directed capacitated graph with node kinds and an underlay next-hop table.
///
/// The table maps `(underlay node, destination)` to the next hop. Entries are
/// either supplied explicitly or filled by [`Topology::derive_routes`].
#[derive(Clone, Debug, Default)]
pub struct Topology {
    kinds: BTreeMap<NodeId, NodeKind>,
    links: Vec<Link>,
    link_index: HashMap<(NodeId, NodeId), usize>,
    out_links: BTreeMap<NodeId, Vec<usize>>,
    routes: BTreeMap<(NodeId, NodeId), NodeId>,
}

impl Topology {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: NodeId, kind: NodeKind) -> Result<(), TopologyError> {
        if self.kinds.insert(id, kind).is_some() {
            return Err(TopologyError::DuplicateNode(id));
        }
        self.out_links.entry(id).or_default();
        Ok(())
    }

    /// Adds a directed link. Links keep their declaration order, which is also
    /// the order in which an overlay node's outgoing links are enumerated.
    pub fn add_link(
        &mut self,
        from: NodeId,
        to: NodeId,
        capacity: u32,
    ) -> Result<(), TopologyError> {
        for n in [from, to] {
            if !self.kinds.contains_key(&n) {
                return Err(TopologyError::UnknownNode(n));
            }
        }
        if from == to {
            return Err(TopologyError::SelfLoop(from));
        }
        if capacity == 0 {
            return Err(TopologyError::ZeroCapacity(from, to));
        }
        if self.link_index.contains_key(&(from, to)) {
            return Err(TopologyError::DuplicateLink(from, to));
        }
        let idx = self.links.len();
        self.links.push(Link { from, to, capacity });
        self.link_index.insert((from, to), idx);
        self.out_links.entry(from).or_default().push(idx);
        Ok(())
    }

    /// Sets an explicit next hop. Explicit entries survive `derive_routes`.
    pub fn set_route(
        &mut self,
        at: NodeId,
        dest: NodeId,
        next: NodeId,
    ) -> Result<(), TopologyError> {
        match self.kinds.get(&at) {
            None => return Err(TopologyError::UnknownNode(at)),
            Some(NodeKind::Overlay) => return Err(TopologyError::RouteAtOverlay { at, dest }),
            Some(NodeKind::Underlay) => {}
        }
        if !self.kinds.contains_key(&dest) {
            return Err(TopologyError::UnknownNode(dest));
        }
        if !self.link_index.contains_key(&(at, next)) {
            return Err(TopologyError::RouteWithoutLink { at, dest, next });
        }
        self.routes.insert((at, dest), next);
        Ok(())
    }

    pub fn kind(&self, id: NodeId) -> Option<NodeKind> {
        self.kinds.get(&id).copied()
    }

    pub fn is_overlay(&self, id: NodeId) -> bool {
        self.kind(id) == Some(NodeKind::Overlay)
    }

    pub fn is_underlay(&self, id: NodeId) -> bool {
        self.kind(id) == Some(NodeKind::Underlay)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, NodeKind)> + '_ {
        self.kinds.iter().map(|(&n, &k)| (n, k))
    }

    pub fn overlay_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes()
            .filter(|&(_, k)| k == NodeKind::Overlay)
            .map(|(n, _)| n)
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link_id(&self, from: NodeId, to: NodeId) -> Option<usize> {
        self.link_index.get(&(from, to)).copied()
    }

    pub fn link(&self, from: NodeId, to: NodeId) -> Result<&Link, TopologyError> {
        self.link_id(from, to)
            .map(|i| &self.links[i])
            .ok_or(TopologyError::UnknownLink(from, to))
    }

    /// Outgoing links of `node` in declaration order.
    pub fn out_links(&self, node: NodeId) -> impl Iterator<Item = &Link> + '_ {
        self.out_links
            .get(&node)
            .into_iter()
            .flatten()
            .map(move |&i| &self.links[i])
    }

    pub fn next_hop(&self, at: NodeId, dest: NodeId) -> Option<NodeId> {
        self.routes.get(&(at, dest)).copied()
    }

    pub fn routes(&self) -> &BTreeMap<(NodeId, NodeId), NodeId> {
        &self.routes
    }

    /// Fills the next-hop table with hop-count shortest paths whose interior
    /// nodes are all underlay. Among equally short continuations the lowest
    /// next-hop id wins. Explicit entries are left untouched.
    ///
    /// Pairs with no such path get no entry; [`Topology::underlay_path`]
    /// reports them as [`TopologyError::Unreachable`] when demanded.
    pub fn derive_routes(&mut self) {
        let mut incoming: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for l in &self.links {
            incoming.entry(l.to).or_default().push(l.from);
        }
        let dests: Vec<NodeId> = self.kinds.keys().copied().collect();
        for dest in dests {
            let dist = self.hop_distances_to(dest, &incoming);
            for (&at, &kind) in &self.kinds {
                if kind != NodeKind::Underlay || at == dest || self.routes.contains_key(&(at, dest))
                {
                    continue;
                }
                let Some(&d_at) = dist.get(&at) else { continue };
                let next = self
                    .out_links(at)
                    .map(|l| l.to)
                    .filter(|&y| y == dest || self.is_underlay(y))
                    .filter(|y| dist.get(y) == Some(&(d_at - 1)))
                    .min();
                if let Some(next) = next {
                    self.routes.insert((at, dest), next);
                }
            }
        }
    }

    /// Reverse BFS from `dest`; only underlay nodes may relay.
    fn hop_distances_to(
        &self,
        dest: NodeId,
        incoming: &BTreeMap<NodeId, Vec<NodeId>>,
    ) -> HashMap<NodeId, u32> {
        let mut dist = HashMap::from([(dest, 0u32)]);
        let mut frontier = VecDeque::from([dest]);
        while let Some(y) = frontier.pop_front() {
            if y != dest && !self.is_underlay(y) {
                continue;
            }
            let dy = dist[&y];
            for &x in incoming.get(&y).into_iter().flatten() {
                dist.entry(x).or_insert_with(|| {
                    frontier.push_back(x);
                    dy + 1
                });
            }
        }
        dist
    }

    /// Node sequence the underlay uses from `from` to `to`, both ends included.
    /// `from` is an underlay node (or equal to `to`).
    pub fn underlay_path(&self, from: NodeId, to: NodeId) -> Result<Vec<NodeId>, TopologyError> {
        let mut path = vec![from];
        let mut at = from;
        while at != to {
            if at != from && !self.is_underlay(at) {
                return Err(TopologyError::RouteThroughOverlay { from, to, node: at });
            }
            let next = self
                .next_hop(at, to)
                .ok_or(TopologyError::Unreachable { from, to })?;
            if path.contains(&next) {
                return Err(TopologyError::RouteCycle {
                    from,
                    to,
                    node: next,
                });
            }
            path.push(next);
            at = next;
        }
        Ok(path)
    }

    /// Checks every structural invariant, including that each route entry
    /// leads to its destination along an acyclic, underlay-only interior.
    pub fn validate(&self) -> Result<(), TopologyError> {
        for l in &self.links {
            if l.capacity == 0 {
                return Err(TopologyError::ZeroCapacity(l.from, l.to));
            }
        }
        for (&(at, dest), &next) in &self.routes {
            if !self.is_underlay(at) {
                return Err(TopologyError::RouteAtOverlay { at, dest });
            }
            if self.link_id(at, next).is_none() {
                return Err(TopologyError::RouteWithoutLink { at, dest, next });
            }
            self.underlay_path(at, dest)?;
        }
        Ok(())
    }
}
