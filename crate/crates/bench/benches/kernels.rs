use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use roomgap_core::*;

fn preset_mesh(eps: f64) -> (PeriodCellMesh, f64) {
    let s = ScalingPreset::unit_square(1.0, 1.0, 1.0);
    let cell = build_cell(&asymptotic_preset(&s, eps).unwrap());
    (
        triangulate(&cell, 1.0 / 32.0, 1.3).unwrap(),
        cell.rho_room(),
    )
}

fn assembly(c: &mut Criterion) {
    let (mesh, rho) = preset_mesh(0.125);
    c.bench_function("assemble eps=1/8", |b| {
        b.iter(|| assemble(black_box(&mesh), rho))
    });
}

fn eigensolve(c: &mut Criterion) {
    let (mesh, rho) = preset_mesh(0.0625);
    let pair = assemble(&mesh, rho);
    let fiber =
        apply_quasiperiodic(&pair, &mesh.left_boundary, &mesh.right_boundary, PI / 3.0).unwrap();
    let mut g = c.benchmark_group("eig");
    g.sample_size(10);
    g.bench_function("solve_lowest k=8 eps=1/16", |b| {
        b.iter(|| solve_lowest(black_box(&fiber), 8, 1e-8).unwrap())
    });
    g.finish();
}

fn limit(c: &mut Criterion) {
    let p = LimitParams::new(1.0, 1.0, 1.0);
    c.bench_function("solve_beta_star", |b| {
        b.iter(|| solve_beta_star(black_box(&p)).unwrap())
    });
    c.bench_function("limit_spectrum", |b| {
        b.iter(|| limit_spectrum(black_box(&p)).unwrap())
    });
}

criterion_group!(benches, assembly, eigensolve, limit);
criterion_main!(benches);
