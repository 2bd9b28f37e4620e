//! Shared fixtures for the kernel benchmarks.

use starisac::numerics::{BlockTerm, CMat, HermitianMatrix, SdpProblem, Sense, SymTerm};
use starisac::rng::{self, Domain};

/// Seeded random Hermitian matrix of order `n`.
pub fn random_hermitian(n: usize, seed: u64) -> HermitianMatrix {
    let mut g = rng::stream(seed, Domain::Oracle, n as u64);
    let raw = CMat::from_fn(n, n, |_, _| rng::complex_normal(&mut g));
    HermitianMatrix::from_hermitian_part(&raw)
}

/// `max tr(A V)` subject to `V_nn ≤ 1`, `V ⪰ 0`: the shape of the
/// coefficient relaxation.
pub fn unit_diagonal_sdp(n: usize, seed: u64) -> SdpProblem {
    let a = random_hermitian(n, seed);
    let mut p = SdpProblem::default();
    let b = p.add_block(n);
    p.objective.push(BlockTerm::new(b, SymTerm::dense(&a)));
    for i in 0..n {
        p.add_constraint(
            vec![BlockTerm::new(b, SymTerm::diag_entry(i, 1.0))],
            Sense::Le,
            1.0,
        );
    }
    p
}

/// Seeded phase pairs in `[0, 2π)`.
pub fn phase_pairs(count: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut g = rng::stream(seed, Domain::Oracle, 0);
    (0..count)
        .map(|_| {
            (
                rng::uniform(&mut g, 0.0, std::f64::consts::TAU),
                rng::uniform(&mut g, 0.0, std::f64::consts::TAU),
            )
        })
        .collect()
}
