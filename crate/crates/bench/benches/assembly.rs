use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use dpg_core::dpg::solver::solve;
use dpg_core::dpg::{assemble_normal_equations, solve_dpg};
use dpg_core::{
    build_spaces, case_degrees, unit_square_mesh, Case, ElementKernel, ExactSolution, SolverOptions,
};

fn local_systems(c: &mut Criterion) {
    let mut group = c.benchmark_group("local_system");
    let mesh = unit_square_mesh(4).unwrap();
    let f = ExactSolution::sine();
    for k in [1, 3, 5] {
        let cfg = case_degrees(Case::One, k).unwrap();
        let kernel = ElementKernel::new(cfg, None).unwrap();
        let spaces = build_spaces(&mesh, cfg);
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, _| {
            b.iter(|| {
                kernel
                    .local_system(&mesh, &spaces, black_box(7), &f.load())
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble_normal_equations");
    group.sample_size(10);
    let f = ExactSolution::sine();
    let cfg = case_degrees(Case::One, 2).unwrap();
    let kernel = ElementKernel::new(cfg, None).unwrap();
    for n in [8, 16, 32] {
        let mesh = unit_square_mesh(n).unwrap();
        let spaces = build_spaces(&mesh, cfg);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| assemble_normal_equations(&kernel, &mesh, &spaces, &f.load()).unwrap())
        });
    }
    group.finish();
}

fn solving(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    let f = ExactSolution::sine();
    let cfg = case_degrees(Case::One, 2).unwrap();
    let kernel = ElementKernel::new(cfg, None).unwrap();
    let mesh = unit_square_mesh(16).unwrap();
    let spaces = build_spaces(&mesh, cfg);
    let sys = assemble_normal_equations(&kernel, &mesh, &spaces, &f.load()).unwrap();
    let probe_off = SolverOptions {
        check_singular: false,
        ..SolverOptions::default()
    };
    group.bench_function("pcg_n16", |b| {
        b.iter(|| solve(&sys.matrix, &sys.rhs, &probe_off).unwrap())
    });
    group.bench_function("pcg_with_probe_n16", |b| {
        b.iter(|| solve(&sys.matrix, &sys.rhs, &SolverOptions::default()).unwrap())
    });
    group.bench_function("full_pipeline_n16", |b| {
        b.iter(|| {
            solve_dpg(
                &kernel,
                &mesh,
                &spaces,
                &f.load(),
                &SolverOptions::default(),
            )
            .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, local_systems, assembly, solving);
criterion_main!(benches);
