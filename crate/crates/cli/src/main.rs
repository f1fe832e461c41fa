use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use overlay_routing::harness::{
    self, ExperimentConfig, RateControlConfig, Scenario, StabilityCriteria, StabilityVerdict,
};
use overlay_routing::policy::{EstimatorMode, PolicyKind, PolicySpec};
use overlay_routing::sim;

#[derive(Parser)]
#[command(name = "overlay-sim", version, about = "Overlay routing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load sweep over policies and loads; writes per-run CSVs and sweep.json.
    Sweep(SweepArgs),
    /// Single simulation run; writes one CSV.
    Run(RunArgs),
    /// Single FIFO queue: true backlog against the delay estimators.
    DemoQueue(DemoArgs),
    /// Source rate control with log utilities.
    RateControl(RateArgs),
    /// Fluid-model max-flow and utility optimum as JSON.
    Oracle(ScenarioArgs),
    /// Parse a scenario and list its tunnels.
    ValidateTopology(ScenarioArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file or built-in name (topoA, topoB-sub, topoB-sub-bg, topoC).
    #[arg(long, default_value = "topoA")]
    config: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct PolicyArgs {
    /// bp, obp, centralized or oorp.
    #[arg(long)]
    policy: Option<PolicyKind>,
    /// exact, delay, delay-probe or priority-probe.
    #[arg(long)]
    estimator: Option<EstimatorMode>,
    #[arg(long)]
    probe_interval: Option<u64>,
    #[arg(long)]
    idle_threshold: Option<u64>,
    #[arg(long)]
    frame_length: Option<u64>,
}

impl PolicyArgs {
    fn any(&self) -> bool {
        self.policy.is_some()
            || self.estimator.is_some()
            || self.probe_interval.is_some()
            || self.idle_threshold.is_some()
            || self.frame_length.is_some()
    }

    fn spec(&self) -> PolicySpec {
        let mut s = PolicySpec::new(self.policy.unwrap_or(PolicyKind::Oorp));
        if let Some(e) = self.estimator {
            s.estimator = e;
        }
        if let Some(v) = self.probe_interval {
            s.probe_interval = v;
        }
        if let Some(v) = self.idle_threshold {
            s.idle_threshold = v;
        }
        if let Some(v) = self.frame_length {
            s.frame_length = v;
        }
        s
    }
}

#[derive(Args)]
struct StabilityArgs {
    #[arg(long)]
    slope_threshold: Option<f64>,
    #[arg(long)]
    backlog_floor: Option<f64>,
}

impl StabilityArgs {
    fn apply(&self, c: &mut StabilityCriteria) {
        if let Some(v) = self.slope_threshold {
            c.slope_threshold = v;
        }
        if let Some(v) = self.backlog_floor {
            c.backlog_floor = v;
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment file (TOML).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    replications: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replaces the file's policy list with this one policy.
    #[command(flatten)]
    policy: PolicyArgs,
    #[command(flatten)]
    stability: StabilityArgs,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "topoA")]
    config: String,
    #[arg(long, default_value_t = 0.9)]
    rho: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 200_000)]
    horizon: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    policy: PolicyArgs,
    #[command(flatten)]
    stability: StabilityArgs,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long, default_value_t = 100)]
    tau: u64,
    #[arg(long, default_value_t = 10)]
    idle_threshold: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RateArgs {
    #[arg(long, default_value = "topoC")]
    config: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 200_000)]
    horizon: u64,
    #[arg(long, default_value_t = 5_000)]
    window: u64,
    #[arg(long, default_value_t = 50_000)]
    tail: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    policy: PolicyArgs,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Sweep(a) => sweep(a),
        Command::Run(a) => run(a),
        Command::DemoQueue(a) => demo_queue(a),
        Command::RateControl(a) => rate_control(a),
        Command::Oracle(a) => oracle(a),
        Command::ValidateTopology(a) => validate(a),
    }
}

fn load(spec: &str) -> Result<Scenario> {
    Scenario::load(spec).with_context(|| format!("loading scenario `{spec}`"))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn sweep(a: SweepArgs) -> Result<()> {
    let text =
        fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let mut cfg = ExperimentConfig::from_toml(&text)?;
    // Relative scenario paths are taken relative to the experiment file.
    if Scenario::builtin_source(&cfg.topology).is_none() {
        let base = a.config.parent().unwrap_or(Path::new("."));
        let p = base.join(&cfg.topology);
        if p.exists() {
            cfg.topology = p.display().to_string();
        }
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.horizon {
        cfg.horizon = v;
    }
    if let Some(v) = a.replications {
        cfg.replications = v;
    }
    if a.out.is_some() {
        cfg.out = a.out;
    }
    if a.policy.any() {
        cfg.policies = vec![a.policy.spec()];
    }
    a.stability.apply(&mut cfg.stability);
    let report = harness::run_sweep(&cfg)?;
    for p in &report.points {
        println!(
            "{:<28} rho={:.2} stable={:<5} mean_backlog={:.1}",
            p.policy, p.rho, p.stable, p.mean_backlog
        );
    }
    for (policy, rho) in &report.max_stable_load {
        match rho {
            Some(r) => println!("max stable load {policy}: {r:.2}"),
            None => println!("max stable load {policy}: none"),
        }
    }
    if let Some(dir) = &cfg.out {
        println!("wrote {}", dir.join("sweep.json").display());
    }
    Ok(())
}

fn run(a: RunArgs) -> Result<()> {
    let scenario = load(&a.config)?;
    let spec = a.policy.spec();
    let mut policy = spec.build()?;
    let arrivals = scenario.poisson_arrivals(a.rho);
    let result = sim::run(
        &scenario.network,
        &mut policy,
        &arrivals,
        &scenario.background,
        a.horizon,
        a.seed,
    )?;
    let path = a.out.join(format!(
        "{}_rho{:.2}_seed{}.csv",
        spec.label(),
        a.rho,
        a.seed
    ));
    result.write_csv(create(&path)?)?;
    let mut criteria = StabilityCriteria::default();
    a.stability.apply(&mut criteria);
    let verdict = StabilityVerdict::classify(&result.total_backlog, &criteria);
    let summary = serde_json::json!({
        "scenario": scenario.name,
        "policy": spec.label(),
        "rho": a.rho,
        "summary": result.summary(),
        "verdict": verdict,
        "csv": path,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn demo_queue(a: DemoArgs) -> Result<()> {
    if a.tau == 0 || a.idle_threshold == 0 {
        bail!("tau and idle threshold must be positive");
    }
    let d = harness::single_queue_demo(a.tau, a.idle_threshold);
    let tau = a.tau as usize;
    for t in [tau / 2, tau, 3 * tau / 2, 2 * tau, 3 * tau - 1] {
        println!(
            "t={t:<5} actual={:<5} delay={:<5} | probe run: actual={:<5} estimate={}",
            d.actual[t], d.delay_estimate[t], d.probe_actual[t], d.probe_estimate[t]
        );
    }
    if let Some(path) = &a.out {
        let path = if path.extension().is_some() {
            path.clone()
        } else {
            path.join("demo_queue.csv")
        };
        d.write_csv(create(&path)?)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn rate_control(a: RateArgs) -> Result<()> {
    let scenario = load(&a.config)?;
    let cfg = RateControlConfig {
        routing: a.policy.spec(),
        horizon: a.horizon,
        seed: a.seed,
        window: a.window,
        tail: a.tail,
    };
    let report = harness::rate_control_experiment(&scenario, &cfg)?;
    let oracle = harness::oracle_report(&scenario)?;
    let out = serde_json::json!({
        "report": report,
        "oracle_rates": oracle.utility_rates,
        "oracle_utility": oracle.utility,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    if let Some(dir) = &a.out {
        let path = dir.join(format!("rate_control_{}_seed{}.csv", scenario.name, a.seed));
        report.write_csv(create(&path)?)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn oracle(a: ScenarioArgs) -> Result<()> {
    let scenario = load(&a.config)?;
    let report = harness::oracle_report(&scenario)?;
    let text = serde_json::to_string_pretty(&report)?;
    println!("{text}");
    if let Some(path) = &a.out {
        let path = if path.extension().is_some() {
            path.clone()
        } else {
            path.join(format!("{}.oracle.json", scenario.name))
        };
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn validate(a: ScenarioArgs) -> Result<()> {
    let scenario = load(&a.config)?;
    let net = &scenario.network;
    println!("{}: {}", scenario.name, scenario.description);
    println!(
        "{} overlay nodes, {} underlay links, {} commodities, {} tunnels, {} background flows",
        net.overlay_nodes().len(),
        net.underlay_links().len(),
        net.num_commodities(),
        net.tunnels().len(),
        scenario.background.len()
    );
    for t in net.tunnels() {
        println!("  {} commodities {:?}", t, net.usable(t.id));
    }
    Ok(())
}
