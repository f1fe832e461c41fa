use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use overlay_routing::harness::{run_sweep_on, ExperimentConfig, Scenario};
use overlay_routing::policy::{EstimatorMode, PolicyKind, PolicySpec};
use overlay_routing::sim::run;

fn config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(
        "topoA",
        vec![
            PolicySpec::new(PolicyKind::Bp),
            PolicySpec::new(PolicyKind::Obp),
            PolicySpec::oorp(EstimatorMode::Exact),
            PolicySpec::oorp(EstimatorMode::PriorityProbe),
        ],
        vec![0.5, 0.7, 0.9],
    );
    cfg.horizon = 5_000;
    cfg.replications = 2;
    cfg
}

fn sweep(c: &mut Criterion) {
    let cfg = config();
    let scenario = Scenario::builtin("topoA").unwrap();
    let mut g = c.benchmark_group("sweep");
    g.sample_size(10);
    let threads = rayon::current_num_threads();
    g.bench_function(BenchmarkId::new("parallel", threads), |b| {
        b.iter(|| run_sweep_on(&cfg, &scenario).unwrap())
    });
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    g.bench_function("sequential", |b| {
        b.iter(|| single.install(|| run_sweep_on(&cfg, &scenario).unwrap()))
    });
    g.finish();
}

fn single_run(c: &mut Criterion) {
    let mut g = c.benchmark_group("run_10k_slots");
    g.sample_size(10);
    for name in ["topoA", "topoB-sub"] {
        let s = Scenario::builtin(name).unwrap();
        let arrivals = s.poisson_arrivals(0.9);
        for spec in [
            PolicySpec::oorp(EstimatorMode::Exact),
            PolicySpec::new(PolicyKind::Centralized),
        ] {
            g.bench_function(BenchmarkId::new(spec.label(), name), |b| {
                b.iter(|| {
                    let mut p = spec.build().unwrap();
                    run(&s.network, &mut p, &arrivals, &s.background, 10_000, 1).unwrap()
                })
            });
        }
    }
    g.finish();
}

criterion_group!(benches, sweep, single_run);
criterion_main!(benches);
