//! Experiment orchestration: scenarios, load sweeps, stability verdicts and
//! the canned experiments.

mod experiments;
mod scenario;
mod sweep;
mod verdict;

pub use experiments::{
    oracle_report, rate_control_experiment, single_queue_demo, single_queue_network, OracleReport,
    QueueDemo, RateControlConfig, RateControlReport,
};
pub use scenario::{
    CommodityEntry, LinkEntry, NodeEntry, RouteEntry, Scenario, ScenarioError, ScenarioFile,
};
pub use sweep::{run_sweep, run_sweep_on, ExperimentConfig, RunRecord, SweepPoint, SweepReport};
pub use verdict::{StabilityCriteria, StabilityVerdict};
