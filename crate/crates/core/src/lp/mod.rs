//! Linear programming: a dense simplex solver and the optimization problems
//! built on top of it (frame scheduling, fluid feasibility, the Lagrangian
//! dual, utility maximization).

mod dual;
mod fluid;
mod frame;
mod rational;
mod simplex;
mod utility;

use serde::{Deserialize, Serialize};

use crate::network::OverlayNetwork;
use crate::sim::BackgroundFlow;
use crate::tunnels::TunnelId;

pub use dual::{dual_objective, dual_step, subgradient, DualLayout, DualProblem, StepSize};
pub use fluid::{fluid_feasibility_lp, max_scaling, FluidOutcome, Scaling};
pub use frame::centralized_frame_lp;
pub use rational::{rationalize, EmissionSchedule, DEFAULT_MAX_DENOMINATOR};
pub use simplex::{solve, LinearProgram, LpError, LpSolution, LpStatus, EPS};
pub use utility::{utility_optimum_oracle, LogUtility, UtilityOptimum};

/// Per-(tunnel, commodity) flow, indexed like [`OverlayNetwork::pairs`].
/// Direct overlay links are tunnels of length 2, so `f_ij^k` lives here too.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowVector {
    pub values: Vec<f64>,
}

impl FlowVector {
    pub fn zeros(net: &OverlayNetwork) -> Self {
        Self {
            values: vec![0.0; net.num_pairs()],
        }
    }

    pub fn get(&self, net: &OverlayNetwork, l: TunnelId, k: usize) -> f64 {
        net.pair_index(l, k).map_or(0.0, |i| self.values[i])
    }

    /// `Σ_k f_l^k`.
    pub fn tunnel_total(&self, net: &OverlayNetwork, l: TunnelId) -> f64 {
        self.values[net.pair_range(l)].iter().sum()
    }

    /// Total flow on every topology link, indexed like `Topology::links`.
    pub fn link_loads(&self, net: &OverlayNetwork) -> Vec<f64> {
        let mut load = vec![0.0; net.topology().links().len()];
        for t in net.tunnels() {
            let f = self.tunnel_total(net, t.id);
            if f != 0.0 {
                for link in tunnel_link_ids(net, t.id) {
                    load[link] += f;
                }
            }
        }
        load
    }
}

/// Nominal capacity of every topology link.
pub fn link_capacities(net: &OverlayNetwork) -> Vec<f64> {
    net.topology()
        .links()
        .iter()
        .map(|l| l.capacity as f64)
        .collect()
}

/// Capacities left after subtracting the mean rate of each background flow
/// from the links it crosses (never below zero).
pub fn residual_capacities(net: &OverlayNetwork, background: &[BackgroundFlow]) -> Vec<f64> {
    let topo = net.topology();
    let mut caps = link_capacities(net);
    for f in background {
        for w in f.path.windows(2) {
            if let Some(i) = topo.link_id(w[0], w[1]) {
                caps[i] = (caps[i] - f.rate).max(0.0);
            }
        }
    }
    caps
}

pub(crate) fn tunnel_link_ids(
    net: &OverlayNetwork,
    l: TunnelId,
) -> impl Iterator<Item = usize> + '_ {
    let topo = net.topology();
    net.tunnel(l)
        .links()
        .map(move |(a, b)| topo.link_id(a, b).expect("tunnel links exist"))
}

/// For every topology link, the tunnels crossing it.
pub(crate) fn tunnels_by_link(net: &OverlayNetwork) -> Vec<Vec<TunnelId>> {
    let mut by_link = vec![Vec::new(); net.topology().links().len()];
    for t in net.tunnels() {
        for link in tunnel_link_ids(net, t.id) {
            by_link[link].push(t.id);
        }
    }
    by_link
}
