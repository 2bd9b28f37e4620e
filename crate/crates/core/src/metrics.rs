//! SINR, rates, sensing SNR and transmit power.
//!
//! Metasurface coefficients are passed as the diagonal of `Φ` (a vector), and
//! user `k`'s coefficient vector is the transmission vector for indoor users
//! and the reflection vector for outdoor users.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::expectation::sample_angles;
use crate::numerics::{quad_form, CMat, CVec, Complex64, HermitianMatrix};
use crate::rng::{self, Domain};

/// `diag(φ) H₁`.
pub fn cascade(phi: &CVec, h1: &CMat) -> CMat {
    let mut out = h1.clone();
    for (r, p) in phi.iter().enumerate() {
        for c in 0..out.ncols() {
            out[(r, c)] *= p;
        }
    }
    out
}

/// `A = H₁ᴴ Φᴴ R Φ H₁`, the `M × M` matrix of every quadratic form in `w`.
pub fn effective_matrix(phi: &CVec, r: &HermitianMatrix, h1: &CMat) -> HermitianMatrix {
    let g = cascade(phi, h1);
    HermitianMatrix::from_hermitian_part(&(g.adjoint() * r.as_matrix() * g))
}

fn ratio(num: f64, den: f64) -> Result<f64> {
    if den <= 0.0 {
        if num == 0.0 {
            return Err(Error::invalid(
                "sinr",
                "zero signal over zero interference-plus-noise",
            ));
        }
        return Err(Error::invalid("sinr", "zero interference-plus-noise"));
    }
    Ok(num / den)
}

/// Instantaneous SINR `|h₂ₖᴴ Φ H₁ w_k|² / (Σ_{h≠k} |h₂ₖᴴ Φ H₁ w_h|² + σ²)`.
pub fn sinr(k: usize, w: &CMat, phi_k: &CVec, h1: &CMat, h2k: &CVec, noise: f64) -> Result<f64> {
    if k >= w.ncols() {
        return Err(Error::invalid("k", "user index exceeds beamformer columns"));
    }
    let row = h2k.adjoint() * cascade(phi_k, h1) * w;
    let num = row[k].norm_sqr();
    let den: f64 = row
        .iter()
        .enumerate()
        .filter(|(h, _)| *h != k)
        .map(|(_, z)| z.norm_sqr())
        .sum::<f64>()
        + noise;
    ratio(num, den)
}

/// Ratio-of-expectations SINR with correlation `R(k)`.
pub fn avg_sinr_approx(
    k: usize,
    w: &CMat,
    phi_k: &CVec,
    r_k: &HermitianMatrix,
    h1: &CMat,
    noise: f64,
) -> Result<f64> {
    if k >= w.ncols() {
        return Err(Error::invalid("k", "user index exceeds beamformer columns"));
    }
    let a = effective_matrix(phi_k, r_k, h1);
    sinr_from_matrix(k, w, &a, noise)
}

/// SINR from the effective matrix `A_k`.
pub fn sinr_from_matrix(k: usize, w: &CMat, a: &HermitianMatrix, noise: f64) -> Result<f64> {
    let (s, t) = signal_interference(k, w, a);
    ratio(s, t + noise)
}

/// `(w_kᴴ A w_k, Σ_{h≠k} w_hᴴ A w_h)`.
pub fn signal_interference(k: usize, w: &CMat, a: &HermitianMatrix) -> (f64, f64) {
    let mut s = 0.0;
    let mut t = 0.0;
    for h in 0..w.ncols() {
        let q = quad_form(a.as_matrix(), &w.column(h).into_owned()).max(0.0);
        if h == k {
            s = q;
        } else {
            t += q;
        }
    }
    (s, t)
}

pub fn sum_rate(sinrs: &[f64]) -> f64 {
    sinrs.iter().map(|g| (1.0 + g).log2()).sum()
}

pub fn total_rate(eta: f64, rate_prep: f64, rate_comm: f64) -> f64 {
    eta * rate_prep + (1.0 - eta) * rate_comm
}

pub fn transmit_power(w: &CMat) -> f64 {
    w.iter().map(|z| z.norm_sqr()).sum()
}

/// Average sensing SNR `|α|²/(N_s σ²) tr(Wᴴ H₁ᴴ Φ_Rᴴ R_sense Φ_R H₁ W)`.
pub fn assnr(
    phi_r: &CVec,
    h1: &CMat,
    w: &CMat,
    r_sense: &HermitianMatrix,
    alpha_sq: f64,
    ns: usize,
    sensor_noise: f64,
) -> f64 {
    let g = cascade(phi_r, h1) * w;
    let tr: f64 = (0..g.ncols())
        .map(|c| quad_form(r_sense.as_matrix(), &g.column(c).into_owned()))
        .sum();
    alpha_sq / (ns as f64 * sensor_noise) * tr
}

/// Same quantity via `φ_Rᴴ D φ_R`.
pub fn assnr_hadamard(
    phi_r: &CVec,
    d: &HermitianMatrix,
    alpha_sq: f64,
    ns: usize,
    sensor_noise: f64,
) -> f64 {
    alpha_sq / (ns as f64 * sensor_noise) * d.quad(phi_r)
}

/// Metasurface coefficients of one stage as complex diagonals.
#[derive(Clone, Debug, PartialEq)]
pub struct Coefficients {
    pub phi_t: CVec,
    pub phi_r: CVec,
}

impl Coefficients {
    pub fn for_user(&self, ch: &ChannelSet, k: usize) -> &CVec {
        if ch.is_outdoor(k) {
            &self.phi_r
        } else {
            &self.phi_t
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageMetrics {
    /// Per-user SINR averaged over the evaluation draws.
    pub sinr: Vec<f64>,
    /// Per-user ratio-of-expectations SINR used by the design.
    pub sinr_approx: Vec<f64>,
    /// Monte-Carlo mean of `Σ log₂(1+γ_k)`.
    pub rate: f64,
    /// `Σ log₂(1+γ̄_k)` with the design statistics.
    pub bound_rate: f64,
    /// Monte-Carlo ASSNR per outdoor user (preparation stage only).
    pub assnr: Vec<f64>,
    pub power: f64,
}

/// Evaluation settings for a finished design.
#[derive(Clone, Copy, Debug)]
pub struct EvalSettings {
    pub samples: usize,
    pub noise: f64,
    pub seed: u64,
    pub stream: u64,
}

/// Draws true outdoor angles around `means` and returns `(rate samples,
/// per-user mean SINR)`. Indoor channels are fixed; all users share each draw.
pub fn evaluate_rate_samples(
    ch: &ChannelSet,
    coeffs: &Coefficients,
    w: &CMat,
    means: &[(f64, f64)],
    sigma: (f64, f64),
    ev: &EvalSettings,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let k_total = ch.k();
    let h1 = ch.h1();
    let casc_t = cascade(&coeffs.phi_t, &h1);
    let casc_r = cascade(&coeffs.phi_r, &h1);
    let gt = &casc_t * w;
    let gr = &casc_r * w;
    let degenerate = sigma.0 == 0.0 && sigma.1 == 0.0;
    let draws = if degenerate { 1 } else { ev.samples.max(1) };
    let mut g = rng::stream(ev.seed, Domain::Evaluation, ev.stream);
    let mut rates = Vec::with_capacity(draws);
    let mut mean_sinr = vec![0.0; k_total];
    let user_sinr = |h: &CVec, gm: &CMat, k: usize| -> Result<f64> {
        let row = h.adjoint() * gm;
        let num = row[k].norm_sqr();
        let den: f64 = row
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(_, z)| z.norm_sqr())
            .sum::<f64>()
            + ev.noise;
        ratio(num, den)
    };
    let mut indoor = Vec::with_capacity(ch.k_t());
    for k in 0..ch.k_t() {
        indoor.push(user_sinr(&ch.indoor_channel(k), &gt, k)?);
    }
    for _ in 0..draws {
        let mut rate = 0.0;
        for (k, s) in indoor.iter().enumerate() {
            rate += (1.0 + s).log2();
            mean_sinr[k] += s;
        }
        for j in 0..ch.k_r() {
            let (phi, varphi) = if degenerate {
                means[j]
            } else {
                sample_angles(&mut g, means[j], sigma).0
            };
            let h = ch.outdoor_channel(j, phi, varphi);
            let s = user_sinr(&h, &gr, ch.k_t() + j)?;
            rate += (1.0 + s).log2();
            mean_sinr[ch.k_t() + j] += s;
        }
        rates.push(rate);
    }
    for s in mean_sinr.iter_mut() {
        *s /= draws as f64;
    }
    Ok((rates, mean_sinr))
}

/// Monte-Carlo ASSNR of outdoor user `j` over true-angle draws.
#[allow(clippy::too_many_arguments)]
pub fn assnr_mc(
    ch: &ChannelSet,
    j: usize,
    phi_r: &CVec,
    w: &CMat,
    mean: (f64, f64),
    sigma: (f64, f64),
    alpha_sq: f64,
    sensor_noise: f64,
    ev: &EvalSettings,
) -> f64 {
    let g = cascade(phi_r, &ch.h1()) * w;
    let degenerate = sigma.0 == 0.0 && sigma.1 == 0.0;
    let draws = if degenerate { 1 } else { ev.samples.max(1) };
    let mut r = rng::stream(
        ev.seed,
        Domain::Evaluation,
        rng::index(&[ev.stream, 7, j as u64]),
    );
    let mut acc = 0.0;
    for _ in 0..draws {
        let (phi, varphi) = if degenerate {
            mean
        } else {
            sample_angles(&mut r, mean, sigma).0
        };
        let a = crate::channel::steering_star(phi, varphi, ch.nx, ch.nz).expect("validated dims");
        let row = a.adjoint() * &g;
        // ‖a_S‖² = N_s cancels the 1/N_s normalization.
        acc += row.iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    alpha_sq / sensor_noise * acc / draws as f64
}

/// Helper for unit-modulus coefficient vectors.
pub fn unit_phasors(theta: &[f64]) -> CVec {
    CVec::from_iterator(
        theta.len(),
        theta.iter().map(|t| Complex64::from_polar(1.0, *t)),
    )
}
