//! Load sweeps: every policy at every load, replicated over seeds.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::policy::PolicySpec;
use crate::sim::{self, BackgroundFlow, RunSummary};

use super::scenario::{Scenario, ScenarioError};
use super::verdict::{StabilityCriteria, StabilityVerdict};

/// Sweep configuration, usually read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Built-in scenario name or path to a scenario file.
    pub topology: String,
    pub policies: Vec<PolicySpec>,
    pub loads: Vec<f64>,
    /// Overrides the scenario's `lambda_max`.
    #[serde(default)]
    pub lambda_max: Option<Vec<f64>>,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default = "default_replications")]
    pub replications: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Overrides the scenario's background flows.
    #[serde(default)]
    pub background: Option<Vec<BackgroundFlow>>,
    #[serde(default)]
    pub stability: StabilityCriteria,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_horizon() -> u64 {
    200_000
}

fn default_replications() -> u32 {
    3
}

fn default_seed() -> u64 {
    1
}

impl ExperimentConfig {
    pub fn new(topology: impl Into<String>, policies: Vec<PolicySpec>, loads: Vec<f64>) -> Self {
        Self {
            topology: topology.into(),
            policies,
            loads,
            lambda_max: None,
            horizon: default_horizon(),
            replications: default_replications(),
            seed: default_seed(),
            background: None,
            stability: StabilityCriteria::default(),
            out: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        Ok(toml::from_str(text)?)
    }

    /// Evenly spaced loads `from, from + step, ..., to` (inclusive).
    pub fn grid(from: f64, to: f64, step: f64) -> Vec<f64> {
        let n = ((to - from) / step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| ((from + i as f64 * step) * 1e6).round() / 1e6)
            .collect()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: &str| Err(ScenarioError::Invalid(m.into()));
        if self.policies.is_empty() {
            return bad("no policies configured");
        }
        if self.loads.iter().any(|&r| !(0.0..=1.0).contains(&r)) {
            return bad("loads must lie in [0, 1]");
        }
        if self.replications == 0 {
            return bad("at least one replication is required");
        }
        if self.horizon < 4 {
            return bad("horizon too short");
        }
        for p in &self.policies {
            p.validate()
                .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        }
        Ok(())
    }

    /// Loads the scenario with this config's overrides applied.
    pub fn scenario(&self) -> Result<Scenario, ScenarioError> {
        let mut s = Scenario::load(&self.topology)?;
        if let Some(l) = &self.lambda_max {
            if l.len() != s.network.num_commodities() {
                return Err(ScenarioError::Invalid("lambda_max length mismatch".into()));
            }
            s.lambda_max = l.clone();
        }
        if let Some(bg) = &self.background {
            s = s.with_background(bg.clone())?;
        }
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub summary: Option<RunSummary>,
    pub verdict: Option<StabilityVerdict>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub policy: String,
    pub spec: PolicySpec,
    pub rho: f64,
    pub runs: Vec<RunRecord>,
    /// Majority verdict over replications that completed.
    pub stable: bool,
    /// Mean over replications of the final-half mean backlog.
    pub mean_backlog: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub scenario: String,
    pub horizon: u64,
    pub lambda_max: Vec<f64>,
    pub points: Vec<SweepPoint>,
    /// Per policy label: largest load of the grid such that it and every
    /// smaller load are stable.
    pub max_stable_load: BTreeMap<String, Option<f64>>,
}

impl SweepReport {
    pub fn point(&self, policy: &str, rho: f64) -> Option<&SweepPoint> {
        self.points
            .iter()
            .find(|p| p.policy == policy && (p.rho - rho).abs() < 1e-9)
    }

    pub fn max_stable(&self, policy: &str) -> Option<f64> {
        self.max_stable_load.get(policy).copied().flatten()
    }
}

struct Job {
    policy: usize,
    load: usize,
    rep: u32,
}

fn run_job(
    config: &ExperimentConfig,
    scenario: &Scenario,
    job: &Job,
    out: Option<&Path>,
) -> RunRecord {
    let spec = &config.policies[job.policy];
    let rho = config.loads[job.load];
    let seed = config.seed + job.rep as u64;
    let result = spec
        .build()
        .map_err(|e| e.to_string())
        .and_then(|mut policy| {
            sim::run(
                &scenario.network,
                &mut policy,
                &scenario.poisson_arrivals(rho),
                &scenario.background,
                config.horizon,
                seed,
            )
            .map_err(|e| e.to_string())
        });
    match result {
        Ok(run) => {
            if let Some(dir) = out {
                let name = format!("{}_rho{:.2}_seed{}.csv", spec.label(), rho, seed);
                let written =
                    fs::File::create(dir.join(name)).and_then(|f| run.write_csv(BufWriter::new(f)));
                if let Err(e) = written {
                    return RunRecord {
                        seed,
                        summary: None,
                        verdict: None,
                        error: Some(e.to_string()),
                    };
                }
            }
            RunRecord {
                seed,
                summary: Some(run.summary()),
                verdict: Some(StabilityVerdict::classify(
                    &run.total_backlog,
                    &config.stability,
                )),
                error: None,
            }
        }
        Err(e) => RunRecord {
            seed,
            summary: None,
            verdict: None,
            error: Some(e),
        },
    }
}

#[cfg(feature = "parallel")]
fn execute(jobs: &[Job], f: impl Fn(&Job) -> RunRecord + Sync + Send) -> Vec<RunRecord> {
    use rayon::prelude::*;
    jobs.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn execute(jobs: &[Job], f: impl Fn(&Job) -> RunRecord) -> Vec<RunRecord> {
    jobs.iter().map(f).collect()
}

/// Runs every `(policy, load, replication)` of `config`. Failed runs are
/// recorded and skipped. With `config.out` set, writes one CSV per run plus
/// `sweep.json`.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepReport, ScenarioError> {
    config.validate()?;
    let scenario = config.scenario()?;
    run_sweep_on(config, &scenario)
}

/// [`run_sweep`] on an already loaded scenario; `config.topology`,
/// `lambda_max` and `background` are ignored.
pub fn run_sweep_on(
    config: &ExperimentConfig,
    scenario: &Scenario,
) -> Result<SweepReport, ScenarioError> {
    config.validate()?;
    let out = config.out.as_deref();
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|source| ScenarioError::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    let mut jobs = Vec::new();
    for policy in 0..config.policies.len() {
        for load in 0..config.loads.len() {
            for rep in 0..config.replications {
                jobs.push(Job { policy, load, rep });
            }
        }
    }
    let records = execute(&jobs, |job| run_job(config, scenario, job, out));

    let mut points = Vec::new();
    let reps = config.replications as usize;
    for (chunk, runs) in jobs.chunks(reps).zip(records.chunks(reps)) {
        let spec = config.policies[chunk[0].policy].clone();
        let done: Vec<&RunRecord> = runs.iter().filter(|r| r.verdict.is_some()).collect();
        let stable_votes = done
            .iter()
            .filter(|r| r.verdict.is_some_and(|v| v.stable))
            .count();
        let mean_backlog = if done.is_empty() {
            f64::NAN
        } else {
            done.iter()
                .map(|r| {
                    r.summary
                        .as_ref()
                        .map_or(0.0, |s| s.mean_backlog_final_half)
                })
                .sum::<f64>()
                / done.len() as f64
        };
        points.push(SweepPoint {
            policy: spec.label(),
            spec,
            rho: config.loads[chunk[0].load],
            runs: runs.to_vec(),
            stable: !done.is_empty() && 2 * stable_votes > done.len(),
            mean_backlog,
        });
    }

    let mut max_stable_load = BTreeMap::new();
    for spec in &config.policies {
        let label = spec.label();
        let mut mine: Vec<&SweepPoint> = points.iter().filter(|p| p.policy == label).collect();
        mine.sort_by(|a, b| a.rho.total_cmp(&b.rho));
        let mut best = None;
        for p in mine {
            if !p.stable {
                break;
            }
            best = Some(p.rho);
        }
        max_stable_load.insert(label, best);
    }

    let report = SweepReport {
        scenario: scenario.name.clone(),
        horizon: config.horizon,
        lambda_max: scenario.lambda_max.clone(),
        points,
        max_stable_load,
    };
    if let Some(dir) = out {
        let path = dir.join("sweep.json");
        let text = serde_json::to_string_pretty(&report).expect("report serializes");
        fs::write(&path, text).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(report)
}
