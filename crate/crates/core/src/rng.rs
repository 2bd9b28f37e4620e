//! Counter-style deterministic streams: every random quantity is drawn from a
//! ChaCha8 stream selected by `(seed, domain, index)`, so adding users or
//! samples never perturbs previously drawn values.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Geometry = 1,
    NlosBs = 2,
    NlosIndoor = 3,
    NlosOutdoor = 4,
    AngleEstimate = 5,
    Expectation = 6,
    Evaluation = 7,
    Randomization = 8,
    Oracle = 9,
}

/// Stream for `(seed, domain, index)`.
pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 48) ^ index);
    rng
}

/// Packs small sub-indices into one stream index.
pub fn index(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0u64, |acc, &p| acc.wrapping_mul(1_000_003).wrapping_add(p))
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Circular complex Gaussian with unit total variance.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Complex64::new(s * normal(rng), s * normal(rng))
}

pub fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}
