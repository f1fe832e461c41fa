use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::network::OverlayNetwork;
use crate::policy::Policy;
use crate::stats;

use super::arrivals::{ArrivalSampler, ArrivalSpec, BackgroundFlow};
use super::engine::{Engine, SlotDecision, SlotTrace};
use super::state::NetworkState;
use super::SimError;

/// Engine, state, arrivals and scratch buffers of one run, driven one slot at
/// a time.
pub struct Simulation<'n> {
    engine: Engine<'n>,
    state: NetworkState,
    sampler: ArrivalSampler,
    trace: SlotTrace,
    decision: SlotDecision,
}

impl<'n> Simulation<'n> {
    pub fn new(
        net: &'n OverlayNetwork,
        arrivals: &ArrivalSpec,
        background: &[BackgroundFlow],
        seed: u64,
    ) -> Result<Self, SimError> {
        Ok(Self {
            engine: Engine::new(net, background)?,
            state: NetworkState::new(net),
            sampler: ArrivalSampler::new(net, arrivals, background, seed)?,
            trace: SlotTrace::new(net),
            decision: SlotDecision::default(),
        })
    }

    pub fn state(&self) -> &NetworkState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut NetworkState {
        &mut self.state
    }

    pub fn trace(&self) -> &SlotTrace {
        &self.trace
    }

    pub fn decision(&self) -> &SlotDecision {
        &self.decision
    }

    /// Runs one slot: the policy decides on the current state, the engine
    /// applies the decision, and the policy observes the resulting trace.
    pub fn step(&mut self, policy: &mut dyn Policy) -> Result<(), SimError> {
        let net = self.engine.network();
        self.decision.clear();
        policy.decide(net, &self.state, &mut self.decision)?;
        self.engine.step(
            &mut self.state,
            &self.decision,
            &mut self.sampler,
            &mut self.trace,
        )?;
        policy.observe(net, &self.state, &self.trace);
        Ok(())
    }
}

/// Per-slot trajectories of a run. Index `t` holds the state after slot `t`.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub horizon: u64,
    pub seed: u64,
    pub total_backlog: Vec<u64>,
    /// `[commodity][slot]`.
    pub commodity_backlog: Vec<Vec<u64>>,
    /// Cumulative deliveries, `[commodity][slot]`.
    pub delivered: Vec<Vec<u64>>,
    pub final_state: NetworkState,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub horizon: u64,
    pub seed: u64,
    /// Mean total backlog over the final half of the run.
    pub mean_backlog_final_half: f64,
    /// Delivered packets per slot per commodity over the whole run.
    pub throughput: Vec<f64>,
    /// Least-squares slope of total backlog over the final half (packets/slot).
    pub backlog_slope: f64,
    pub final_backlog: u64,
}

impl RunResult {
    pub fn summary(&self) -> RunSummary {
        let n = self.total_backlog.len();
        let half = &self.total_backlog[n / 2..];
        RunSummary {
            horizon: self.horizon,
            seed: self.seed,
            mean_backlog_final_half: stats::mean_u64(half),
            throughput: self
                .delivered
                .iter()
                .map(|d| d.last().copied().unwrap_or(0) as f64 / n.max(1) as f64)
                .collect(),
            backlog_slope: stats::slope_u64(half),
            final_backlog: self.total_backlog.last().copied().unwrap_or(0),
        }
    }

    /// `slot,total_backlog,backlog_k0..,delivered_k0..`, one row per slot.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let k = self.commodity_backlog.len();
        write!(w, "slot,total_backlog")?;
        for c in 0..k {
            write!(w, ",backlog_{c}")?;
        }
        for c in 0..k {
            write!(w, ",delivered_{c}")?;
        }
        writeln!(w)?;
        for t in 0..self.total_backlog.len() {
            write!(w, "{t},{}", self.total_backlog[t])?;
            for c in 0..k {
                write!(w, ",{}", self.commodity_backlog[c][t])?;
            }
            for c in 0..k {
                write!(w, ",{}", self.delivered[c][t])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

pub fn run(
    net: &OverlayNetwork,
    policy: &mut dyn Policy,
    arrivals: &ArrivalSpec,
    background: &[BackgroundFlow],
    horizon: u64,
    seed: u64,
) -> Result<RunResult, SimError> {
    run_observed(
        net,
        policy,
        arrivals,
        background,
        horizon,
        seed,
        None,
        |_, _, _| {},
    )
}

/// Like [`run`], optionally starting from `initial` and calling
/// `observe(state, trace, decision)` after every slot.
#[allow(clippy::too_many_arguments)]
pub fn run_observed(
    net: &OverlayNetwork,
    policy: &mut dyn Policy,
    arrivals: &ArrivalSpec,
    background: &[BackgroundFlow],
    horizon: u64,
    seed: u64,
    initial: Option<NetworkState>,
    mut observe: impl FnMut(&NetworkState, &SlotTrace, &SlotDecision),
) -> Result<RunResult, SimError> {
    let mut sim = Simulation::new(net, arrivals, background, seed)?;
    if let Some(s) = initial {
        if s.overlay_q.len() != sim.state.overlay_q.len()
            || s.queues.len() != sim.state.queues.len()
        {
            return Err(SimError::StateMismatch);
        }
        sim.state = s;
    }
    let k = net.num_commodities();
    let len = horizon as usize;
    let mut total_backlog = Vec::with_capacity(len);
    let mut commodity_backlog = vec![Vec::with_capacity(len); k];
    let mut delivered = vec![Vec::with_capacity(len); k];
    for _ in 0..horizon {
        sim.step(policy)?;
        let mut total = 0;
        for c in 0..k {
            let b = sim.state.commodity_backlog(c);
            total += b;
            commodity_backlog[c].push(b);
            delivered[c].push(sim.state.delivered(c));
        }
        total_backlog.push(total);
        observe(&sim.state, &sim.trace, &sim.decision);
    }
    Ok(RunResult {
        horizon,
        seed,
        total_backlog,
        commodity_backlog,
        delivered,
        final_state: sim.state,
    })
}
