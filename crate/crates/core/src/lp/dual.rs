//! Lagrangian dual of the fluid problem with respect to the underlay
//! capacity and flow-conservation constraints.
//!
//! Dual variables are `q_ab` for every link leaving an underlay node followed
//! by `q_i^k` for every overlay node `i` other than commodity `k`'s
//! destination. Maximizing the Lagrangian over the remaining constraints
//! (first-link capacities, non-negativity) puts each first link's whole
//! capacity on its best `(tunnel, commodity)` when that weight is positive.

use crate::network::OverlayNetwork;
use crate::sim::NetworkState;

use super::FlowVector;

#[derive(Clone, Debug)]
pub struct DualLayout {
    links: usize,
    commodities: usize,
    node_var: Vec<Option<usize>>,
    len: usize,
}

impl DualLayout {
    pub fn new(net: &OverlayNetwork) -> Self {
        let links = net.underlay_links().len();
        let k_count = net.num_commodities();
        let mut node_var = vec![None; net.overlay_nodes().len() * k_count];
        let mut len = links;
        for (i, &node) in net.overlay_nodes().iter().enumerate() {
            for (k, c) in net.commodities().iter().enumerate() {
                if c.destination != node {
                    node_var[i * k_count + k] = Some(len);
                    len += 1;
                }
            }
        }
        Self {
            links,
            commodities: k_count,
            node_var,
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Index of `q_ab` for underlay link index `ulink`.
    pub fn link(&self, ulink: usize) -> usize {
        debug_assert!(ulink < self.links);
        ulink
    }

    /// Index of `q_i^k`, `None` at the destination.
    pub fn node(&self, overlay_idx: usize, k: usize) -> Option<usize> {
        self.node_var[overlay_idx * self.commodities + k]
    }

    /// The queue-as-dual point: underlay queue lengths and overlay backlogs.
    pub fn from_state(&self, state: &NetworkState) -> Vec<f64> {
        let mut q = vec![0.0; self.len];
        for (ul, v) in q.iter_mut().enumerate().take(self.links) {
            *v = state.underlay_backlog(ul) as f64;
        }
        for (idx, var) in self.node_var.iter().enumerate() {
            if let Some(v) = var {
                q[*v] =
                    state.overlay_backlog_at(idx / self.commodities, idx % self.commodities) as f64;
            }
        }
        q
    }
}

/// Data defining `D(q)`: the network, arrival rates `[overlay index * K + k]`
/// and link capacities indexed like `Topology::links`.
#[derive(Clone, Debug)]
pub struct DualProblem<'n> {
    pub net: &'n OverlayNetwork,
    pub layout: DualLayout,
    pub lambda: Vec<f64>,
    pub capacity: Vec<f64>,
    ulink_capacity: Vec<f64>,
    group_capacity: Vec<f64>,
}

impl<'n> DualProblem<'n> {
    pub fn new(net: &'n OverlayNetwork, lambda: Vec<f64>, capacity: Vec<f64>) -> Self {
        let topo = net.topology();
        let id = |a, b| topo.link_id(a, b).expect("link exists");
        let ulink_capacity = net
            .underlay_links()
            .iter()
            .map(|u| capacity[id(u.from, u.to)])
            .collect();
        let group_capacity = net
            .first_link_groups()
            .iter()
            .map(|g| capacity[id(g.link.0, g.link.1)])
            .collect();
        Self {
            net,
            layout: DualLayout::new(net),
            lambda,
            capacity,
            ulink_capacity,
            group_capacity,
        }
    }

    fn node_dual(&self, q: &[f64], node: usize, k: usize) -> f64 {
        self.layout.node(node, k).map_or(0.0, |v| q[v])
    }

    /// `q_head^k - Σ q_ab - q_tail^k` for pair `(l, k)`.
    pub fn weight(&self, q: &[f64], l: crate::tunnels::TunnelId, k: usize) -> f64 {
        let net = self.net;
        let t = net.tunnel(l);
        let head = net.overlay_index(t.head()).expect("overlay");
        let tail = net.overlay_index(t.tail()).expect("overlay");
        let links: f64 = net
            .tunnel_underlay_links(l)
            .iter()
            .map(|&u| q[self.layout.link(u)])
            .sum();
        self.node_dual(q, head, k) - links - self.node_dual(q, tail, k)
    }
}

/// `D(q)` and a maximizing flow. Ties go to the lowest `(tunnel, commodity)`.
pub fn dual_objective(problem: &DualProblem, q: &[f64]) -> (f64, FlowVector) {
    let net = problem.net;
    let mut flow = FlowVector::zeros(net);
    let mut value = 0.0;
    for (g, group) in net.first_link_groups().iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for &l in &group.tunnels {
            for (&k, p) in net.usable(l).iter().zip(net.pair_range(l)) {
                let w = problem.weight(q, l, k);
                if best.is_none_or(|(_, bw)| w > bw) {
                    best = Some((p, w));
                }
            }
        }
        if let Some((p, w)) = best {
            if w > 0.0 {
                let c = problem.group_capacity[g];
                flow.values[p] = c;
                value += w * c;
            }
        }
    }
    for (ul, &c) in problem.ulink_capacity.iter().enumerate() {
        value += q[problem.layout.link(ul)] * c;
    }
    let k_count = net.num_commodities();
    for (idx, &lam) in problem.lambda.iter().enumerate() {
        if lam != 0.0 {
            value -= problem.node_dual(q, idx / k_count, idx % k_count) * lam;
        }
    }
    (value, flow)
}

/// `g_ab = c_ab - Σ_{l ∋ (a,b)} Σ_k f_l^k` and `g_i^k = out - in - λ_i^k`.
pub fn subgradient(problem: &DualProblem, flow: &FlowVector) -> Vec<f64> {
    let net = problem.net;
    let layout = &problem.layout;
    let k_count = net.num_commodities();
    let mut g = vec![0.0; layout.len()];
    for (ul, &c) in problem.ulink_capacity.iter().enumerate() {
        g[layout.link(ul)] = c;
    }
    for (idx, &lam) in problem.lambda.iter().enumerate() {
        if let Some(v) = layout.node(idx / k_count, idx % k_count) {
            g[v] -= lam;
        }
    }
    for (p, (l, k)) in net.pairs().enumerate() {
        let f = flow.values[p];
        if f == 0.0 {
            continue;
        }
        for &ul in net.tunnel_underlay_links(l) {
            g[layout.link(ul)] -= f;
        }
        let t = net.tunnel(l);
        if let Some(v) = layout.node(net.overlay_index(t.head()).expect("overlay"), k) {
            g[v] += f;
        }
        if let Some(v) = layout.node(net.overlay_index(t.tail()).expect("overlay"), k) {
            g[v] -= f;
        }
    }
    g
}

/// Projected step `q <- [q - α g]^+`.
pub fn dual_step(q: &[f64], g: &[f64], alpha: f64) -> Vec<f64> {
    q.iter()
        .zip(g)
        .map(|(&qi, &gi)| (qi - alpha * gi).max(0.0))
        .collect()
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub enum StepSize {
    Constant(f64),
    /// `α(t) = a / t` for `t >= 1`.
    Harmonic(f64),
}

impl Default for StepSize {
    fn default() -> Self {
        StepSize::Constant(1.0)
    }
}

impl StepSize {
    pub fn at(&self, t: u64) -> f64 {
        match *self {
            StepSize::Constant(a) => a,
            StepSize::Harmonic(a) => a / t.max(1) as f64,
        }
    }
}
