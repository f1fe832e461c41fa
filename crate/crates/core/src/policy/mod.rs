//! Routing policies. Each one turns the start-of-slot network state into a
//! [`SlotDecision`].

mod backpressure;
mod centralized;
mod estimator;
mod oorp;
mod rate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::LpError;
use crate::network::OverlayNetwork;
use crate::sim::{NetworkState, SlotDecision, SlotTrace};
use crate::tunnels::TunnelId;

pub use backpressure::{Backpressure, OverlayBackpressure};
pub use centralized::{Centralized, CentralizedConfig};
pub use estimator::{EstimatorConfig, EstimatorMode, EstimatorState};
pub use oorp::Oorp;
pub use rate::{rate_control_choose, RateControlled, RateControllerConfig};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("linear program failed: {0}")]
    Lp(#[from] LpError),
    #[error("invalid policy configuration: {0}")]
    Config(String),
}

pub trait Policy: Send {
    fn name(&self) -> String;

    /// Fills `out` (already cleared) from the start-of-slot `state`.
    fn decide(
        &mut self,
        net: &OverlayNetwork,
        state: &NetworkState,
        out: &mut SlotDecision,
    ) -> Result<(), PolicyError>;

    /// Called after the engine applied the decision.
    fn observe(&mut self, _net: &OverlayNetwork, _state: &NetworkState, _trace: &SlotTrace) {}
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn decide(
        &mut self,
        net: &OverlayNetwork,
        state: &NetworkState,
        out: &mut SlotDecision,
    ) -> Result<(), PolicyError> {
        (**self).decide(net, state, out)
    }

    fn observe(&mut self, net: &OverlayNetwork, state: &NetworkState, trace: &SlotTrace) {
        (**self).observe(net, state, trace)
    }
}

/// For every first-link group, the `(tunnel, commodity)` of largest weight
/// (lowest index on ties) gets the link's whole capacity if its weight is
/// positive.
pub(crate) fn max_weight_per_group(
    net: &OverlayNetwork,
    out: &mut SlotDecision,
    mut weight: impl FnMut(TunnelId, usize) -> i64,
) {
    for group in net.first_link_groups() {
        let mut best: Option<(TunnelId, usize, i64)> = None;
        for &l in &group.tunnels {
            for &k in net.usable(l) {
                let w = weight(l, k);
                if best.is_none_or(|(_, _, bw)| w > bw) {
                    best = Some((l, k, w));
                }
            }
        }
        if let Some((l, k, w)) = best {
            if w > 0 {
                out.send(l, k, group.capacity);
            }
        }
    }
}

/// Overlay backlog at the ends of a tunnel.
pub(crate) fn end_backlogs(
    net: &OverlayNetwork,
    state: &NetworkState,
    l: TunnelId,
    k: usize,
) -> (i64, i64) {
    let t = net.tunnel(l);
    (
        state.overlay_backlog(net, t.head(), k) as i64,
        state.overlay_backlog(net, t.tail(), k) as i64,
    )
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Bp,
    Obp,
    Centralized,
    Oorp,
}

impl std::str::FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bp" | "backpressure" => Ok(PolicyKind::Bp),
            "obp" => Ok(PolicyKind::Obp),
            "centralized" | "central" => Ok(PolicyKind::Centralized),
            "oorp" => Ok(PolicyKind::Oorp),
            other => Err(format!(
                "unknown policy `{other}` (expected bp, obp, centralized, oorp)"
            )),
        }
    }
}

/// Serializable description of a policy and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    #[serde(default)]
    pub estimator: EstimatorMode,
    #[serde(default = "default_interval")]
    pub probe_interval: u64,
    #[serde(default = "default_interval")]
    pub idle_threshold: u64,
    #[serde(default = "default_frame")]
    pub frame_length: u64,
    #[serde(default)]
    pub capacity_shrink: f64,
}

fn default_interval() -> u64 {
    10
}

fn default_frame() -> u64 {
    100
}

impl PolicySpec {
    pub fn new(kind: PolicyKind) -> Self {
        Self {
            kind,
            estimator: EstimatorMode::Exact,
            probe_interval: default_interval(),
            idle_threshold: default_interval(),
            frame_length: default_frame(),
            capacity_shrink: 0.0,
        }
    }

    pub fn oorp(estimator: EstimatorMode) -> Self {
        Self {
            estimator,
            ..Self::new(PolicyKind::Oorp)
        }
    }

    pub fn estimator_config(&self) -> EstimatorConfig {
        EstimatorConfig {
            mode: self.estimator,
            probe_interval: self.probe_interval,
            idle_threshold: self.idle_threshold,
        }
    }

    /// Short label such as `oorp-priority-probe-T10`.
    pub fn label(&self) -> String {
        match self.kind {
            PolicyKind::Bp => "bp".into(),
            PolicyKind::Obp => "obp".into(),
            PolicyKind::Centralized => format!("centralized-T{}", self.frame_length),
            PolicyKind::Oorp => match self.estimator {
                EstimatorMode::Exact => "oorp-exact".into(),
                EstimatorMode::Delay => "oorp-delay".into(),
                EstimatorMode::DelayProbe => format!("oorp-delay-probe-P{}", self.idle_threshold),
                EstimatorMode::PriorityProbe => {
                    format!("oorp-priority-probe-T{}", self.probe_interval)
                }
            },
        }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.probe_interval == 0 || self.idle_threshold == 0 {
            return Err(PolicyError::Config(
                "probe interval and idle threshold must be positive".into(),
            ));
        }
        if self.frame_length == 0 {
            return Err(PolicyError::Config("frame length must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.capacity_shrink) {
            return Err(PolicyError::Config(
                "capacity shrink must be in [0, 1)".into(),
            ));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Box<dyn Policy>, PolicyError> {
        self.validate()?;
        Ok(match self.kind {
            PolicyKind::Bp => Box::new(Backpressure),
            PolicyKind::Obp => Box::new(OverlayBackpressure),
            PolicyKind::Centralized => Box::new(Centralized::new(CentralizedConfig {
                frame_length: self.frame_length,
                capacity_shrink: self.capacity_shrink,
                ..CentralizedConfig::default()
            })),
            PolicyKind::Oorp => Box::new(Oorp::new(self.estimator_config())),
        })
    }
}
