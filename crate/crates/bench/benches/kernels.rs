use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use starisac::expectation::{steering_moments, McSettings};
use starisac::numerics::{eig_hermitian, solve_sdp};
use starisac::star_coeffs::project_phases;
use starisac_bench::{phase_pairs, random_hermitian, unit_diagonal_sdp};

fn eig(c: &mut Criterion) {
    let mut g = c.benchmark_group("eig_hermitian");
    for n in [8, 20, 40] {
        let a = random_hermitian(n, 7);
        g.bench_with_input(BenchmarkId::from_parameter(n), &a, |b, a| {
            b.iter(|| eig_hermitian(black_box(a)).unwrap())
        });
    }
    g.finish();
}

fn sdp(c: &mut Criterion) {
    let mut g = c.benchmark_group("sdp_unit_diagonal");
    g.sample_size(10);
    for n in [5, 10, 20] {
        let p = unit_diagonal_sdp(n, 11);
        g.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| {
            b.iter(|| solve_sdp(black_box(p), 1e-8).unwrap())
        });
    }
    g.finish();
}

fn projection(c: &mut Criterion) {
    let pairs = phase_pairs(1000, 3);
    c.bench_function("project_phases_1000", |b| {
        b.iter(|| {
            pairs
                .iter()
                .map(|&(r, t)| project_phases(black_box(r), black_box(t)).0)
                .sum::<f64>()
        })
    });
}

fn expectation(c: &mut Criterion) {
    let mut g = c.benchmark_group("steering_moments");
    g.sample_size(10);
    let mc = McSettings::default();
    for (nx, nz) in [(5, 4), (8, 5)] {
        g.bench_function(BenchmarkId::from_parameter(nx * nz), |b| {
            b.iter(|| steering_moments(nx, nz, (1.2, 0.3), (0.01, 0.01), &mc, 5, &[0]).unwrap())
        });
    }
    g.finish();
}

criterion_group!(kernels, eig, sdp, projection, expectation);
criterion_main!(kernels);
