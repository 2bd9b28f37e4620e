//! Lagrangian-dual and quadratic transforms of the sum-rate objective.
//!
//! With signal `S_k = w_kᴴ A_k w_k` and total received power
//! `T_k = Σ_h w_hᴴ A_k w_h`, the two surrogates are
//!
//! ```text
//! R̄   = Σ log₂(1+τ_k) + (1/ln 2) [ −Σ τ_k + Σ (1+τ_k) S_k / (T_k + σ²) ]
//! R̄_q = Σ log₂(1+τ_k) + (1/ln 2) [ −Σ τ_k + Σ 2ρ_k √((1+τ_k) S_k) − Σ ρ_k² (T_k + σ²) ]
//! ```
//!
//! `τ_k = S_k / (T_k − S_k + σ²)` maximizes `R̄`, and then `R̄ = Σ log₂(1+τ_k)`;
//! `ρ_k = √((1+τ_k) S_k) / (T_k + σ²)` maximizes `R̄_q`, and then `R̄_q = R̄`.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::metrics::signal_interference;
use crate::numerics::{CMat, HermitianMatrix};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FpState {
    pub tau: Vec<f64>,
    pub rho: Vec<f64>,
}

impl FpState {
    pub fn zeros(k: usize) -> Self {
        Self {
            tau: vec![0.0; k],
            rho: vec![0.0; k],
        }
    }
}

/// `(S_k, T_k)` for every user from effective matrices `A_k`.
pub fn powers(w: &CMat, a: &[HermitianMatrix]) -> (Vec<f64>, Vec<f64>) {
    a.iter()
        .enumerate()
        .map(|(k, ak)| {
            let (s, i) = signal_interference(k, w, ak);
            (s, s + i)
        })
        .unzip()
}

pub fn tau_from_parts(s: &[f64], t: &[f64], noise: f64) -> Vec<f64> {
    s.iter()
        .zip(t)
        .map(|(&s, &t)| {
            if s <= 0.0 {
                0.0
            } else {
                s / ((t - s).max(0.0) + noise)
            }
        })
        .collect()
}

pub fn rho_from_parts(tau: &[f64], s: &[f64], t: &[f64], noise: f64) -> Vec<f64> {
    tau.iter()
        .zip(s.iter().zip(t))
        .map(|(&tau, (&s, &t))| ((1.0 + tau) * s.max(0.0)).sqrt() / (t + noise))
        .collect()
}

/// `τ_k = γ̄_k`.
pub fn update_tau(w: &CMat, a: &[HermitianMatrix], noise: f64) -> Vec<f64> {
    let (s, t) = powers(w, a);
    tau_from_parts(&s, &t, noise)
}

pub fn update_rho(tau: &[f64], w: &CMat, a: &[HermitianMatrix], noise: f64) -> Vec<f64> {
    let (s, t) = powers(w, a);
    rho_from_parts(tau, &s, &t, noise)
}

pub fn dual_from_parts(tau: &[f64], s: &[f64], t: &[f64], noise: f64) -> f64 {
    let mut logs = 0.0;
    let mut lin = 0.0;
    for k in 0..tau.len() {
        logs += (1.0 + tau[k]).log2();
        lin += -tau[k] + (1.0 + tau[k]) * s[k] / (t[k] + noise);
    }
    logs + lin / LN_2
}

pub fn quadratic_from_parts(tau: &[f64], rho: &[f64], s: &[f64], t: &[f64], noise: f64) -> f64 {
    let mut logs = 0.0;
    let mut lin = 0.0;
    for k in 0..tau.len() {
        logs += (1.0 + tau[k]).log2();
        lin += -tau[k] + 2.0 * rho[k] * ((1.0 + tau[k]) * s[k].max(0.0)).sqrt()
            - rho[k] * rho[k] * (t[k] + noise);
    }
    logs + lin / LN_2
}

/// Lagrangian-dual objective `R̄`.
pub fn objective_dual(tau: &[f64], w: &CMat, a: &[HermitianMatrix], noise: f64) -> f64 {
    let (s, t) = powers(w, a);
    dual_from_parts(tau, &s, &t, noise)
}

/// Quadratic-transform objective `R̄_q` in beamformer form.
pub fn objective_q(fp: &FpState, w: &CMat, a: &[HermitianMatrix], noise: f64) -> f64 {
    let (s, t) = powers(w, a);
    quadratic_from_parts(&fp.tau, &fp.rho, &s, &t, noise)
}

/// `(S_k, T_k)` in coefficient form: `S_k = φ_kᴴ E_{k,k} φ_k`,
/// `T_k = Σ_h φ_kᴴ E_{k,h} φ_k`.
pub fn powers_phi(
    phi_of: &dyn Fn(usize) -> crate::numerics::CVec,
    e: &[Vec<HermitianMatrix>],
) -> (Vec<f64>, Vec<f64>) {
    e.iter()
        .enumerate()
        .map(|(k, row)| {
            let phi = phi_of(k);
            let s = row[k].quad(&phi).max(0.0);
            let t = row.iter().map(|m| m.quad(&phi).max(0.0)).sum::<f64>();
            (s, t)
        })
        .unzip()
}

/// Closed-form `(τ, ρ)` pair at the current point.
pub fn update_fp(w: &CMat, a: &[HermitianMatrix], noise: f64) -> FpState {
    let (s, t) = powers(w, a);
    let tau = tau_from_parts(&s, &t, noise);
    let rho = rho_from_parts(&tau, &s, &t, noise);
    FpState { tau, rho }
}

/// `Σ log₂(1+γ̄_k)`, the value both surrogates attain at their optimum.
pub fn bound_rate(w: &CMat, a: &[HermitianMatrix], noise: f64) -> f64 {
    let (s, t) = powers(w, a);
    tau_from_parts(&s, &t, noise)
        .iter()
        .map(|g| (1.0 + g).log2())
        .sum()
}
