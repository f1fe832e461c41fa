use crate::network::OverlayNetwork;
use crate::sim::{NetworkState, SlotDecision, SlotTrace};

use super::{
    end_backlogs, max_weight_per_group, EstimatorConfig, EstimatorState, Policy, PolicyError,
};

/// Distributed optimal overlay routing: queues act as dual prices, so each
/// first link carries the `(tunnel, commodity)` maximizing
/// `Q_head^k - B_l - Q_tail^k`, where `B_l` estimates the tunnel's underlay
/// backlog.
#[derive(Clone, Debug)]
pub struct Oorp {
    config: EstimatorConfig,
    estimator: Option<EstimatorState>,
}

impl Oorp {
    pub fn new(config: EstimatorConfig) -> Self {
        Self {
            config,
            estimator: None,
        }
    }

    pub fn estimator(&self) -> Option<&EstimatorState> {
        self.estimator.as_ref()
    }
}

impl Policy for Oorp {
    fn name(&self) -> String {
        format!("oorp-{:?}", self.config.mode).to_lowercase()
    }

    fn decide(
        &mut self,
        net: &OverlayNetwork,
        state: &NetworkState,
        out: &mut SlotDecision,
    ) -> Result<(), PolicyError> {
        let est = self
            .estimator
            .get_or_insert_with(|| EstimatorState::new(net, self.config));
        max_weight_per_group(net, out, |l, k| {
            let (head, tail) = end_backlogs(net, state, l, k);
            head - est.estimate(net, state, l) as i64 - tail
        });
        est.request_probes(state.slot(), out);
        Ok(())
    }

    fn observe(&mut self, _net: &OverlayNetwork, _state: &NetworkState, trace: &SlotTrace) {
        if let Some(est) = &mut self.estimator {
            est.observe(trace);
        }
    }
}
