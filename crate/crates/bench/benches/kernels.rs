use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use ldg_bench::{random_tensors, tilted_field, unit_params};
use ldg_core::eigen::eig3;
use ldg_core::geometry::project_to_manifold;
use ldg_core::solver::{solve_ldg, SolveConfig};
use std::hint::black_box;

fn pointwise(c: &mut Criterion) {
    let qs = random_tensors(1024, 1.5, 1);
    let p = unit_params(1.0);
    c.bench_function("eig3_1024", |b| {
        b.iter(|| qs.iter().map(|q| eig3(q.as_sym()).values[0]).sum::<f64>())
    });
    c.bench_function("project_1024", |b| {
        b.iter(|| qs.iter().filter_map(|q| project_to_manifold(q, &p).ok()).count())
    });
}

fn stencils(c: &mut Criterion) {
    let f = tilted_field(32);
    c.bench_function("laplacian_32", |b| b.iter(|| black_box(f.laplacian_field())));
    c.bench_function("grad_square_32", |b| b.iter(|| black_box(f.grad_square_field())));
}

fn solver(c: &mut Criterion) {
    let f = tilted_field(16);
    let p = unit_params(0.05);
    let cfg = SolveConfig { max_iters: 1, ..Default::default() };
    c.bench_function("ldg_step_16", |b| {
        b.iter_batched(|| f.clone(), |init| solve_ldg(&init, &p, &cfg), BatchSize::LargeInput)
    });
}

criterion_group!(benches, pointwise, stencils, solver);
criterion_main!(benches);
