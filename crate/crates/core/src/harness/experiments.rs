//! Canned experiments: the single-queue estimator demo and rate control.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::lp;
use crate::network::{Commodity, OverlayNetwork};
use crate::policy::{
    EstimatorConfig, EstimatorMode, EstimatorState, Policy, PolicyError, PolicySpec,
    RateControlled, RateControllerConfig,
};
use crate::sim::{self, ArrivalSpec, NetworkState, SlotDecision, SlotTrace};
use crate::topology::{NodeId, NodeKind, Topology};
use crate::tunnels::TunnelId;

use super::scenario::{Scenario, ScenarioError};

/// Overlay 1 -> underlay 2 -> overlay 3, where 2 -> 3 is the only queue.
pub fn single_queue_network() -> OverlayNetwork {
    let mut t = Topology::new();
    t.add_node(NodeId(1), NodeKind::Overlay)
        .expect("fresh node");
    t.add_node(NodeId(2), NodeKind::Underlay)
        .expect("fresh node");
    t.add_node(NodeId(3), NodeKind::Overlay)
        .expect("fresh node");
    t.add_link(NodeId(1), NodeId(2), 2).expect("fresh link");
    t.add_link(NodeId(2), NodeId(3), 1).expect("fresh link");
    t.derive_routes();
    OverlayNetwork::new(t, vec![Commodity::new(NodeId(1), NodeId(3))]).expect("valid demo network")
}

/// Sends `rate` packets per slot into tunnel 0 for the first `burst` slots
/// and lets an estimator watch the tunnel.
struct Burst {
    burst: u64,
    rate: u32,
    estimator: EstimatorState,
}

impl Policy for Burst {
    fn name(&self) -> String {
        "burst".into()
    }

    fn decide(
        &mut self,
        _: &OverlayNetwork,
        state: &NetworkState,
        out: &mut SlotDecision,
    ) -> Result<(), PolicyError> {
        if state.slot() < self.burst {
            out.send(TunnelId(0), 0, self.rate);
        }
        self.estimator.request_probes(state.slot(), out);
        Ok(())
    }

    fn observe(&mut self, _: &OverlayNetwork, _: &NetworkState, trace: &SlotTrace) {
        self.estimator.observe(trace);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueueDemo {
    pub tau: u64,
    pub idle_threshold: u64,
    /// Tunnel backlog after `t` slots, in the run without probes.
    pub actual: Vec<u64>,
    pub delay_estimate: Vec<u64>,
    /// Tunnel backlog after `t` slots, in the run with empty probes.
    pub probe_actual: Vec<u64>,
    pub probe_estimate: Vec<u64>,
}

impl QueueDemo {
    /// First slot at or after `from` where `series` is zero.
    pub fn first_zero(series: &[u64], from: u64) -> Option<u64> {
        (from as usize..series.len())
            .find(|&t| series[t] == 0)
            .map(|t| t as u64)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "slot,actual,delay_estimate,probe_actual,probe_estimate")?;
        for t in 0..self.actual.len() {
            writeln!(
                w,
                "{t},{},{},{},{}",
                self.actual[t],
                self.delay_estimate[t],
                self.probe_actual[t],
                self.probe_estimate[t]
            )?;
        }
        Ok(())
    }
}

fn queue_run(
    net: &OverlayNetwork,
    tau: u64,
    mode: EstimatorMode,
    idle_threshold: u64,
) -> (Vec<u64>, Vec<u64>) {
    let estimator = EstimatorState::new(
        net,
        EstimatorConfig {
            mode,
            idle_threshold,
            ..Default::default()
        },
    );
    let mut policy = Burst {
        burst: tau,
        rate: 2,
        estimator,
    };
    let mut initial = NetworkState::new(net);
    initial.preload(net, NodeId(1), 0, 2 * tau);
    let mut actual = vec![0];
    let mut estimate = vec![0];
    let mut shadow = EstimatorState::new(
        net,
        EstimatorConfig {
            mode,
            idle_threshold,
            ..Default::default()
        },
    );
    sim::run_observed(
        net,
        &mut policy,
        &ArrivalSpec::none(),
        &[],
        3 * tau,
        0,
        Some(initial),
        |state, trace, _| {
            shadow.observe(trace);
            actual.push(state.tunnel_backlog(net, TunnelId(0)));
            estimate.push(shadow.stored(TunnelId(0)));
        },
    )
    .expect("demo network is valid");
    (actual, estimate)
}

/// A source pushes 2 packets per slot into a unit-rate FIFO for `tau` slots,
/// then stops. Records the true backlog next to the delay estimate, with and
/// without empty probes, for `3 tau` slots. Index `t` is the state after `t`
/// slots.
pub fn single_queue_demo(tau: u64, idle_threshold: u64) -> QueueDemo {
    let net = single_queue_network();
    let (actual, delay_estimate) = queue_run(&net, tau, EstimatorMode::Delay, idle_threshold);
    let (probe_actual, probe_estimate) =
        queue_run(&net, tau, EstimatorMode::DelayProbe, idle_threshold);
    QueueDemo {
        tau,
        idle_threshold,
        actual,
        delay_estimate,
        probe_actual,
        probe_estimate,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateControlConfig {
    pub routing: PolicySpec,
    pub horizon: u64,
    pub seed: u64,
    /// Moving-average window for delivered rates.
    pub window: u64,
    /// Slots at the end of the run averaged into `tail_rates`.
    pub tail: u64,
}

impl Default for RateControlConfig {
    fn default() -> Self {
        Self {
            routing: PolicySpec::oorp(EstimatorMode::Exact),
            horizon: 200_000,
            seed: 1,
            window: 5_000,
            tail: 50_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateControlReport {
    pub scenario: String,
    pub policy: String,
    /// `moving[t][k]`: commodity `k`'s delivered rate over the window ending
    /// at slot `t`.
    #[serde(skip)]
    pub moving: Vec<Vec<f64>>,
    /// Average over the final window.
    pub converged: Vec<f64>,
    /// Average over the final `tail` slots.
    pub tail_rates: Vec<f64>,
    pub utility: f64,
}

impl RateControlReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let k = self.converged.len();
        write!(w, "slot")?;
        for c in 0..k {
            write!(w, ",rate_{c}")?;
        }
        writeln!(w)?;
        for (t, row) in self.moving.iter().enumerate() {
            write!(w, "{t}")?;
            for r in row {
                write!(w, ",{r:.6}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Runs the scenario with admission control at every source and no external
/// arrivals.
pub fn rate_control_experiment(
    scenario: &Scenario,
    config: &RateControlConfig,
) -> Result<RateControlReport, ScenarioError> {
    if config.window == 0
        || config.tail == 0
        || config.window > config.horizon
        || config.tail > config.horizon
    {
        return Err(ScenarioError::Invalid(
            "window and tail must be in 1..=horizon".into(),
        ));
    }
    let net = &scenario.network;
    let controllers = scenario
        .utilities
        .iter()
        .map(|u| RateControllerConfig {
            weight: u.weight,
            cap: u.cap,
        })
        .collect();
    let routing = config
        .routing
        .build()
        .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
    let mut policy = RateControlled::new(routing, controllers);
    let result = sim::run(
        net,
        &mut policy,
        &ArrivalSpec::none(),
        &scenario.background,
        config.horizon,
        config.seed,
    )
    .map_err(|e| ScenarioError::Invalid(e.to_string()))?;

    let k = net.num_commodities();
    let h = config.horizon as usize;
    let delivered_by = |c: usize, t: usize| -> u64 {
        if t == 0 {
            0
        } else {
            result.delivered[c][t - 1]
        }
    };
    let average = |c: usize, span: usize| {
        (delivered_by(c, h) - delivered_by(c, h - span)) as f64 / span as f64
    };
    let w = config.window as usize;
    let moving = (0..h)
        .map(|t| {
            let end = t + 1;
            let start = end.saturating_sub(w);
            (0..k)
                .map(|c| {
                    (delivered_by(c, end) - delivered_by(c, start)) as f64 / (end - start) as f64
                })
                .collect()
        })
        .collect();
    let converged: Vec<f64> = (0..k).map(|c| average(c, w)).collect();
    let tail_rates: Vec<f64> = (0..k).map(|c| average(c, config.tail as usize)).collect();
    let utility = scenario
        .utilities
        .iter()
        .zip(&tail_rates)
        .map(|(u, &r)| u.value(r))
        .sum();
    Ok(RateControlReport {
        scenario: scenario.name.clone(),
        policy: policy.name(),
        moving,
        converged,
        tail_rates,
        utility,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub scenario: String,
    pub lambda_max: Vec<f64>,
    /// Largest `θ` with `θ · lambda_max` supportable, background included.
    pub max_load: f64,
    /// Largest supportable rate of each commodity on its own.
    pub commodity_max: Vec<f64>,
    pub utility_rates: Vec<f64>,
    pub utility: f64,
}

/// Fluid-model ground truth for a scenario.
pub fn oracle_report(scenario: &Scenario) -> Result<OracleReport, lp::LpError> {
    let net = &scenario.network;
    let capacity = scenario.capacities();
    let max_load = scenario.max_load()?;
    let mut commodity_max = Vec::with_capacity(net.num_commodities());
    for k in 0..net.num_commodities() {
        let mut unit = vec![0.0; net.num_commodities()];
        unit[k] = 1.0;
        commodity_max.push(lp::max_scaling(net, &scenario.node_rates(&unit), &capacity)?.theta);
    }
    let opt = lp::utility_optimum_oracle(net, &scenario.utilities, &capacity)?;
    Ok(OracleReport {
        scenario: scenario.name.clone(),
        lambda_max: scenario.lambda_max.clone(),
        max_load,
        commodity_max,
        utility_rates: opt.rates,
        utility: opt.utility,
    })
}
