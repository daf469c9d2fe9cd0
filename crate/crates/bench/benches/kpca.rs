use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use kpca_core::kpca::{objective_gradient, solve, transcribe, KernelMode, SolverOptions};
use kpca_core::mathcore::rk4_step;
use kpca_core::sim::{example1_kpca, example1_ncc, example2_kpca, reference_state, run_scenario, ControllerSpec, Scenario};

fn problem_of(s: &Scenario) -> (kpca_core::kpca::NlpProblem, Vec<f64>, SolverOptions) {
    let ControllerSpec::Kpca { config, options } = &s.controller else { unreachable!() };
    let x1d = reference_state(&s.model, &s.schedule.values[0]);
    let u = s.model.bounds.midpoint();
    let p = transcribe(config, &s.model, &s.x0, &x1d, &u).unwrap();
    let mut z: Vec<f64> = u.iter().copied().cycle().take(config.horizon * u.len()).collect();
    let k = s.model.kernel_point(&s.x0[..s.model.dims().n1], 0, &config.kernel_free).unwrap();
    z.extend(config.x2d_mask.iter().map(|&i| k[i]));
    (p, z, *options)
}

fn benches(c: &mut Criterion) {
    let s1 = example1_kpca(KernelMode::Bell);
    let s2 = example2_kpca(1.0);
    let (p1, z1, o1) = problem_of(&s1);
    let (p2, z2, o2) = problem_of(&s2);

    c.bench_function("rk4_step_uav3d", |b| {
        let u = s2.model.bounds.midpoint();
        b.iter(|| rk4_step(&s2.model, black_box(&s2.x0), &u, 0.02).unwrap())
    });
    c.bench_function("gradient_example1", |b| b.iter(|| objective_gradient(&p1, black_box(&z1))));
    c.bench_function("gradient_example2", |b| b.iter(|| objective_gradient(&p2, black_box(&z2))));
    c.bench_function("solve_example1_cold", |b| b.iter(|| solve(&p1, black_box(&z1), &o1).unwrap()));
    c.bench_function("solve_example2_cold", |b| b.iter(|| solve(&p2, black_box(&z2), &o2).unwrap()));

    let mut g = c.benchmark_group("closed_loop");
    g.sample_size(10);
    g.bench_function("example1_ncc_60s", |b| b.iter(|| run_scenario(black_box(&example1_ncc())).unwrap()));
    g.bench_function("example1_kpca_bell_60s", |b| b.iter(|| run_scenario(black_box(&s1)).unwrap()));
    g.finish();
}

criterion_group!(kpca, benches);
criterion_main!(kpca);
