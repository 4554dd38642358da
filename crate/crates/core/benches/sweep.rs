use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tdlab_core::harness::{build_problems, run_sweep_with, CurveSelection, RunConfig, Setting, SweepGrid};
use tdlab_core::{Algorithm, Execution, FeatureKind};

fn sweep_modes(c: &mut Criterion) {
    let mut config = RunConfig::new(Algorithm::Htd, Setting::OffPolicy, FeatureKind::Tabular);
    config.n_mdps = 4;
    config.n_runs = 8;
    config.n_steps = 500;
    config.raw = CurveSelection::None;
    let problems = build_problems(&config).unwrap();
    let grid = SweepGrid { alphas: vec![0.01, 0.05, 0.1], etas: vec![0.5, 1.0], lambdas: vec![0.0, 0.5, 0.9] };

    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for mode in [Execution::Sequential, Execution::Parallel] {
        config.execution = mode;
        group.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &config, |b, cfg| {
            b.iter(|| run_sweep_with(cfg, &grid, &problems).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, sweep_modes);
criterion_main!(benches);
