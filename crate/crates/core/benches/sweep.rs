use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use sphere_control::analysis::ConvergenceCriteria;
use sphere_control::par::Execution;
use sphere_control::sweep::{sweep_with, Grid, Param};
use sphere_control::Scenario;

fn gain_grid(c: &mut Criterion) {
    let mut base = Scenario::fig2();
    base.config.t_final = 2.0;
    let grid = Grid::new()
        .axis(Param::Kp, vec![1.0, 5.0, 10.0])
        .axis(Param::Kv, vec![0.5, 1.0, 2.0]);
    let criteria = ConvergenceCriteria::default();

    let mut group = c.benchmark_group("sweep_3x3_2s");
    group.sample_size(10);
    for (name, execution) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &execution, |b, &ex| {
            b.iter(|| sweep_with(black_box(&base), &grid, &criteria, ex).unwrap())
        });
    }
    group.finish();
}

fn single_run(c: &mut Criterion) {
    let mut sc = Scenario::fig2();
    sc.config.t_final = 2.0;
    c.bench_function("simulate_fig2_2s", |b| b.iter(|| sphere_control::simulate(black_box(&sc)).unwrap()));
}

criterion_group!(benches, gain_grid, single_run);
criterion_main!(benches);
