//! Sequential vs. rayon-parallel execution of the data-parallel kernels.

use std::hint::black_box;

use afc_core::susceptibility::{epsilon_broadened, kramers_kronig, symmetric_grid, Boundary};
use afc_core::sweep::{sweep, Axis, Objective, Param, Point, SweepRequest};
use afc_core::{CombShape, CombSpec, Execution, FrequencyGrid, MediumResponse, MediumSpec, Model};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn transfer(c: &mut Criterion) {
    let grid = FrequencyGrid::for_pulse(5.0);
    let comb = CombSpec::with_finesse(CombShape::Square, 5.0).gamma(0.005);
    let mut group = c.benchmark_group("transfer");
    for model in [Model::Broadened, Model::windowed_series(grid, 1.0)] {
        let r = MediumResponse::new(comb, MediumSpec::new(10.0), model).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(model.name(), name), &exec, |b, &exec| {
                b.iter(|| r.sample(black_box(grid), exec).unwrap())
            });
        }
    }
    group.finish();
}

fn hilbert(c: &mut Criterion) {
    let nu = symmetric_grid(40.0, 4001);
    let abs: Vec<f64> = nu
        .iter()
        .map(|&x| epsilon_broadened(x, 0.2, 1.0, 0.05, 9).unwrap().absorption)
        .collect();
    let mut group = c.benchmark_group("kramers_kronig");
    group.sample_size(20);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| kramers_kronig(black_box(&abs), &nu, Boundary::Decaying, 1.0, exec).unwrap())
        });
    }
    group.finish();
}

fn parameter_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for (name, exec) in MODES {
        let req = SweepRequest::new(
            Objective::FirstEcho,
            Point::square(5.0, 10.0, 0.005),
            vec![Axis::linear(Param::OpticalDepth, 1.0, 30.0, 8)],
        )
        .simulated(Model::BroadenedPeriodic)
        .exec(exec)
        .refine(false);
        group.bench_function(name, |b| b.iter(|| sweep(black_box(&req)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, transfer, hilbert, parameter_sweep);
criterion_main!(benches);
