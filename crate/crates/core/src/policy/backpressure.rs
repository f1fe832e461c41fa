use crate::network::OverlayNetwork;
use crate::sim::{NetworkState, SlotDecision};

use super::{end_backlogs, max_weight_per_group, Policy, PolicyError};

/// Classic backpressure that treats every tunnel as a plain link with the
/// capacity of its first hop: weight `Q_head^k - Q_tail^k`.
#[derive(Clone, Debug, Default)]
pub struct Backpressure;

impl Policy for Backpressure {
    fn name(&self) -> String {
        "bp".into()
    }

    fn decide(
        &mut self,
        net: &OverlayNetwork,
        state: &NetworkState,
        out: &mut SlotDecision,
    ) -> Result<(), PolicyError> {
        max_weight_per_group(net, out, |l, k| {
            let (head, tail) = end_backlogs(net, state, l, k);
            head - tail
        });
        Ok(())
    }
}

/// Backpressure with in-flight correction: `W = Q_head^k - H_l^k - Q_tail^k`.
#[derive(Clone, Debug, Default)]
pub struct OverlayBackpressure;

impl Policy for OverlayBackpressure {
    fn name(&self) -> String {
        "obp".into()
    }

    fn decide(
        &mut self,
        net: &OverlayNetwork,
        state: &NetworkState,
        out: &mut SlotDecision,
    ) -> Result<(), PolicyError> {
        max_weight_per_group(net, out, |l, k| {
            let (head, tail) = end_backlogs(net, state, l, k);
            head - state.in_flight(l, k) as i64 - tail
        });
        Ok(())
    }
}
