use crate::lp::{
    centralized_frame_lp, link_capacities, EmissionSchedule, FlowVector, DEFAULT_MAX_DENOMINATOR,
};
use crate::network::OverlayNetwork;
use crate::sim::{NetworkState, SlotDecision};

use super::{Policy, PolicyError};

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct CentralizedConfig {
    pub frame_length: u64,
    /// Fraction of every capacity withheld from the frame problem.
    pub capacity_shrink: f64,
    pub max_denominator: u64,
}

impl Default for CentralizedConfig {
    fn default() -> Self {
        Self {
            frame_length: 100,
            capacity_shrink: 0.0,
            max_denominator: DEFAULT_MAX_DENOMINATOR,
        }
    }
}

#[derive(Clone, Debug)]
struct Plan {
    pair: usize,
    tunnel: crate::tunnels::TunnelId,
    commodity: usize,
    schedule: EmissionSchedule,
    /// Most packets this pair may send in one frame: `floor(T · F*)`.
    frame_cap: u64,
    sent: u64,
}

/// Frame-based policy: at each frame start, solve the frame LP on the current
/// overlay backlogs and then emit each rate as `p` packets every `q` slots.
/// Emissions that would overrun a first link in some slot are deferred to
/// later slots of the same frame.
#[derive(Clone, Debug)]
pub struct Centralized {
    config: CentralizedConfig,
    frame_start: Option<u64>,
    solution: FlowVector,
    plans: Vec<Plan>,
    group_room: Vec<u32>,
}

impl Centralized {
    pub fn new(config: CentralizedConfig) -> Self {
        Self {
            config,
            frame_start: None,
            solution: FlowVector::default(),
            plans: Vec::new(),
            group_room: Vec::new(),
        }
    }

    /// LP solution of the current frame.
    pub fn frame_solution(&self) -> &FlowVector {
        &self.solution
    }

    fn plan_frame(
        &mut self,
        net: &OverlayNetwork,
        state: &NetworkState,
    ) -> Result<(), PolicyError> {
        let k_count = net.num_commodities();
        let backlog: Vec<f64> = (0..net.overlay_nodes().len() * k_count)
            .map(|idx| state.overlay_backlog_at(idx / k_count, idx % k_count) as f64)
            .collect();
        let scale = 1.0 - self.config.capacity_shrink;
        let capacity: Vec<f64> = link_capacities(net)
            .into_iter()
            .map(|c| c * scale)
            .collect();
        self.solution = centralized_frame_lp(net, &backlog, &capacity)?;
        self.plans.clear();
        let t = self.config.frame_length;
        for (pair, (tunnel, commodity)) in net.pairs().enumerate() {
            let rate = self.solution.values[pair];
            if rate <= 0.0 {
                continue;
            }
            let schedule = EmissionSchedule::new(rate, self.config.max_denominator);
            let frame_cap = ((t as f64) * rate.min(schedule.rate()) + 1e-9).floor() as u64;
            if frame_cap > 0 {
                self.plans.push(Plan {
                    pair,
                    tunnel,
                    commodity,
                    schedule,
                    frame_cap,
                    sent: 0,
                });
            }
        }
        Ok(())
    }
}

impl Policy for Centralized {
    fn name(&self) -> String {
        format!("centralized-T{}", self.config.frame_length)
    }

    fn decide(
        &mut self,
        net: &OverlayNetwork,
        state: &NetworkState,
        out: &mut SlotDecision,
    ) -> Result<(), PolicyError> {
        let t = state.slot();
        let start = match self.frame_start {
            Some(s) if t < s + self.config.frame_length => s,
            _ => {
                self.frame_start = Some(t);
                self.plan_frame(net, state)?;
                t
            }
        };
        let offset = t - start;
        self.group_room.clear();
        self.group_room
            .extend(net.first_link_groups().iter().map(|g| g.capacity));
        for plan in &mut self.plans {
            let due = plan.schedule.cumulative(offset + 1).min(plan.frame_cap);
            let want = due.saturating_sub(plan.sent);
            if want == 0 {
                continue;
            }
            let room = &mut self.group_room[net.group_of(plan.tunnel)];
            let n = want.min(*room as u64) as u32;
            if n > 0 {
                *room -= n;
                plan.sent += n as u64;
                out.send(plan.tunnel, plan.commodity, n);
            }
            debug_assert!(plan.pair < net.num_pairs());
        }
        Ok(())
    }
}
