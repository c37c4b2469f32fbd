use criterion::{black_box, criterion_group, criterion_main, Criterion};

use hivoc::optimal::{grid_gradient, integrate_adjoint, solve_iop, switching_function};
use hivoc::{integrate, ControlSchedule, InitialData, ModelParams, Scenario};

fn integrator(c: &mut Criterion) {
    let init = InitialData::default();
    let control = ControlSchedule::bang_bang(44.5);
    for case in Scenario::PRESETS {
        let p = case.apply(&ModelParams::default());
        c.bench_function(&format!("integrate/{case}"), |b| {
            b.iter(|| integrate(black_box(&p), &init, &control, 0.02).unwrap())
        });
    }
}

fn adjoint(c: &mut Criterion) {
    let p = ModelParams::default();
    let control = ControlSchedule::bang_bang(44.5);
    let traj = integrate(&p, &InitialData::default(), &control, 0.02).unwrap();
    c.bench_function("adjoint+phi", |b| {
        b.iter(|| {
            let adj = integrate_adjoint(&p, black_box(&traj), &control).unwrap();
            switching_function(&p, &traj, &adj, &control).unwrap()
        })
    });
    let values = vec![0.5; 2501];
    c.bench_function("grid_gradient", |b| {
        b.iter(|| grid_gradient(&p, &InitialData::default(), black_box(&values), 0.02).unwrap())
    });
}

fn optimizer(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_iop");
    group.sample_size(10);
    for case in Scenario::PRESETS {
        let p = case.apply(&ModelParams::default());
        group.bench_function(case.label(), |b| b.iter(|| solve_iop(black_box(&p)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, integrator, adjoint, optimizer);
criterion_main!(benches);
