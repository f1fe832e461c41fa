//! Overlay tunnels: the fixed underlay paths between pairs of overlay nodes.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::topology::{NodeId, Topology};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TunnelId(pub usize);

impl fmt::Display for TunnelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.0)
    }
}

/// Node sequence `l1 .. l|l|`. Both ends are overlay nodes and every interior
/// node is underlay. A direct overlay-to-overlay link is a tunnel of length 2.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tunnel {
    pub id: TunnelId,
    pub path: Vec<NodeId>,
}

impl Tunnel {
    pub fn head(&self) -> NodeId {
        self.path[0]
    }

    pub fn tail(&self) -> NodeId {
        *self
            .path
            .last()
            .expect("tunnel path has at least two nodes")
    }

    pub fn first_link(&self) -> (NodeId, NodeId) {
        (self.path[0], self.path[1])
    }

    pub fn links(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.path.windows(2).map(|w| (w[0], w[1]))
    }

    /// Links whose tail is an underlay node, i.e. every link but the first.
    pub fn underlay_links(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.links().skip(1)
    }

    pub fn is_direct(&self) -> bool {
        self.path.len() == 2
    }

    /// Slots an otherwise idle tunnel needs to deliver a packet.
    pub fn empty_transit(&self) -> u64 {
        (self.path.len() - 2) as u64
    }

    pub fn contains_link(&self, a: NodeId, b: NodeId) -> bool {
        self.links().any(|l| l == (a, b))
    }
}

impl fmt::Display for Tunnel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, n) in self.path.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ")")
    }
}

/// Every tunnel the topology offers, before any commodity filtering.
///
/// Order: source overlay node ascending, then destination overlay node
/// ascending, then the source's outgoing links in declaration order.
pub fn enumerate_all(topology: &Topology) -> Vec<Tunnel> {
    let overlay: Vec<NodeId> = topology.overlay_nodes().collect();
    let mut out: Vec<Tunnel> = Vec::new();
    for &u in &overlay {
        for &v in &overlay {
            if u == v {
                continue;
            }
            for link in topology.out_links(u) {
                let j = link.to;
                let path = if j == v {
                    vec![u, v]
                } else if topology.is_underlay(j) {
                    match topology.underlay_path(j, v) {
                        Ok(rest) => std::iter::once(u).chain(rest).collect(),
                        Err(_) => continue,
                    }
                } else {
                    continue;
                };
                if out.iter().all(|t| t.path != path) {
                    out.push(Tunnel {
                        id: TunnelId(out.len()),
                        path,
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::NodeKind;

    fn n(i: u32) -> NodeId {
        NodeId(i)
    }

    /// Overlay 1, 2, 4, 5 around a single underlay node 3.
    fn fig2() -> Topology {
        let mut t = Topology::new();
        for i in [1, 2, 4, 5] {
            t.add_node(n(i), NodeKind::Overlay).unwrap();
        }
        t.add_node(n(3), NodeKind::Underlay).unwrap();
        for (a, b) in [(1, 4), (1, 3), (2, 3), (3, 4), (3, 5)] {
            t.add_link(n(a), n(b), 1).unwrap();
        }
        t.derive_routes();
        t
    }

    #[test]
    fn fig2_unfiltered_tunnels() {
        let paths: Vec<Vec<u32>> = enumerate_all(&fig2())
            .iter()
            .map(|t| t.path.iter().map(|x| x.0).collect())
            .collect();
        assert_eq!(
            paths,
            vec![
                vec![1, 4],
                vec![1, 3, 4],
                vec![1, 3, 5],
                vec![2, 3, 4],
                vec![2, 3, 5]
            ]
        );
    }

    #[test]
    fn overlay_clique_gives_direct_tunnels() {
        let mut t = Topology::new();
        t.add_node(n(1), NodeKind::Overlay).unwrap();
        t.add_node(n(2), NodeKind::Overlay).unwrap();
        t.add_link(n(1), n(2), 1).unwrap();
        t.add_link(n(2), n(1), 1).unwrap();
        let all = enumerate_all(&t);
        assert_eq!(all.len(), 2);
        assert!(all.iter().all(Tunnel::is_direct));
    }

    #[test]
    fn tunnel_accessors() {
        let t = Tunnel {
            id: TunnelId(0),
            path: vec![n(1), n(2), n(3), n(4)],
        };
        assert_eq!(t.first_link(), (n(1), n(2)));
        assert_eq!(t.underlay_links().count(), 2);
        assert_eq!(t.empty_transit(), 2);
        assert!(t.contains_link(n(2), n(3)));
        assert!(!t.contains_link(n(3), n(2)));
        assert_eq!(t.to_string(), "(1,2,3,4)");
    }
}
