use serde::{Deserialize, Serialize};

use crate::stats;

/// Thresholds for calling a run unstable.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityCriteria {
    /// Packets per slot.
    #[serde(default = "default_slope")]
    pub slope_threshold: f64,
    #[serde(default = "default_floor")]
    pub backlog_floor: f64,
}

fn default_slope() -> f64 {
    0.01
}

fn default_floor() -> f64 {
    500.0
}

impl Default for StabilityCriteria {
    fn default() -> Self {
        Self {
            slope_threshold: default_slope(),
            backlog_floor: default_floor(),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    /// Least-squares slope of total backlog over the final half.
    pub slope: f64,
    /// Mean total backlog over the final quarter.
    pub final_quarter_mean: f64,
    pub stable: bool,
}

impl StabilityVerdict {
    /// Unstable iff the final-half slope exceeds the threshold and the
    /// final-quarter mean exceeds the floor.
    pub fn classify(total_backlog: &[u64], criteria: &StabilityCriteria) -> Self {
        let n = total_backlog.len();
        let slope = stats::slope_u64(&total_backlog[n / 2..]);
        let final_quarter_mean = stats::mean_u64(&total_backlog[n - n / 4..]);
        let unstable =
            slope > criteria.slope_threshold && final_quarter_mean > criteria.backlog_floor;
        Self {
            slope,
            final_quarter_mean,
            stable: !unstable,
        }
    }
}
