use serde::{Deserialize, Serialize};

use crate::network::OverlayNetwork;
use crate::sim::{NetworkState, SlotDecision, SlotTrace};

use super::{Policy, PolicyError};

/// Log utility `weight · ln λ` with admission cap `cap`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateControllerConfig {
    pub weight: f64,
    pub cap: f64,
}

impl Default for RateControllerConfig {
    fn default() -> Self {
        Self {
            weight: 20.0,
            cap: 20.0,
        }
    }
}

/// `argmax_{0 <= λ <= M} w ln λ - q λ`, i.e. `min(M, w / q)`.
pub fn rate_control_choose(config: &RateControllerConfig, q: f64) -> f64 {
    if q > 0.0 {
        (config.weight / q).min(config.cap)
    } else {
        config.cap
    }
}

/// Wraps a routing policy with per-commodity admission control at the
/// sources. Fractional rates are admitted by credit accumulation.
pub struct RateControlled<P> {
    inner: P,
    configs: Vec<RateControllerConfig>,
    credit: Vec<f64>,
    rates: Vec<f64>,
}

impl<P: Policy> RateControlled<P> {
    pub fn new(inner: P, configs: Vec<RateControllerConfig>) -> Self {
        let n = configs.len();
        Self {
            inner,
            configs,
            credit: vec![0.0; n],
            rates: vec![0.0; n],
        }
    }

    /// Rates chosen in the most recent slot.
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: Policy> Policy for RateControlled<P> {
    fn name(&self) -> String {
        format!("{}+rate-control", self.inner.name())
    }

    fn decide(
        &mut self,
        net: &OverlayNetwork,
        state: &NetworkState,
        out: &mut SlotDecision,
    ) -> Result<(), PolicyError> {
        if self.configs.len() != net.num_commodities() {
            return Err(PolicyError::Config(format!(
                "{} rate controllers for {} commodities",
                self.configs.len(),
                net.num_commodities()
            )));
        }
        self.inner.decide(net, state, out)?;
        for (k, c) in net.commodities().iter().enumerate() {
            let q = state.overlay_backlog(net, c.source, k) as f64;
            let rate = rate_control_choose(&self.configs[k], q);
            self.rates[k] = rate;
            self.credit[k] += rate;
            let n = self.credit[k].floor();
            self.credit[k] -= n;
            if n > 0.0 {
                out.admissions.push((k, n as u64));
            }
        }
        Ok(())
    }

    fn observe(&mut self, net: &OverlayNetwork, state: &NetworkState, trace: &SlotTrace) {
        self.inner.observe(net, state, trace)
    }
}
