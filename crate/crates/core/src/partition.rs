//! Energy-splitting / transmit-only partition of the metasurface.
//!
//! The binary selection `b` is relaxed to `[0, 1]ᴺ` with `Σ b_n = N_part`,
//! and the binarity penalty `χ(b) = Σ (b_n − b_n²)` is subtracted with weight
//! `κ`. Each successive convex approximation step linearizes the concave part
//! `−b²` of the penalty and the convex `√S_k(b)` terms of the rate surrogate,
//! giving a concave quadratic program. The relaxed point is finally rounded
//! by [`project_topk`].
//!
//! Element coefficients follow the blend
//!
//! ```text
//! φ_T,n(b) = e^{jθ_T,n} (1 + b_n (β_T,n − 1))
//! φ_R,n(b) = b_n β_R,n e^{jθ_R,n}
//! ```
//!
//! between a latent energy-splitting configuration (`b_n = 1`) and its
//! transmit-only counterpart (`b_n = 0`).

use std::f64::consts::LN_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fp_core::FpState;
use crate::metrics::Coefficients;
use crate::numerics::{
    solve_real_qcqp, CVec, HermitianMatrix, QcqpStatus, RMat, RVec, RealQcqpProblem,
};
use crate::star_coeffs::{ElementMode, StarState};

/// `χ(b) = Σ (b_n − b_n²)`.
pub fn binarity_penalty(b: &[f64]) -> f64 {
    b.iter().map(|x| x - x * x).sum()
}

/// `χ̂(b; bⁱ) = Σ (b_n − (bⁱ_n)² − 2bⁱ_n (b_n − bⁱ_n))`, an upper bound on `χ`.
pub fn linearized_penalty(b: &[f64], bi: &[f64]) -> f64 {
    b.iter()
        .zip(bi)
        .map(|(x, y)| x - y * y - 2.0 * y * (x - y))
        .sum()
}

/// Mean distance of each entry to the nearer of 0 and 1.
pub fn binarity_gap(b: &[f64]) -> f64 {
    if b.is_empty() {
        return 0.0;
    }
    b.iter().map(|x| x.min(1.0 - x).max(0.0)).sum::<f64>() / b.len() as f64
}

/// Nearest binary vector with exactly `n_part` ones: the `n_part` largest
/// entries, ties broken by lowest index.
pub fn project_topk(b: &[f64], n_part: usize) -> Result<Vec<u8>> {
    if n_part > b.len() {
        return Err(Error::invalid(
            "n_part",
            format!("{} exceeds {} elements", n_part, b.len()),
        ));
    }
    let mut order: Vec<usize> = (0..b.len()).collect();
    order.sort_by(|&i, &j| b[j].total_cmp(&b[i]).then(i.cmp(&j)));
    let mut out = vec![0u8; b.len()];
    for &i in &order[..n_part] {
        out[i] = 1;
    }
    Ok(out)
}

/// Real quadratic `bᵀQb + 2lᵀb + s₀`.
#[derive(Clone, Debug)]
pub struct QuadForm {
    pub q: RMat,
    pub l: RVec,
    pub s0: f64,
}

impl QuadForm {
    pub fn zeros(n: usize) -> Self {
        Self {
            q: RMat::zeros(n, n),
            l: RVec::zeros(n),
            s0: 0.0,
        }
    }

    /// `(c₀ + diag(c₁) b)ᴴ E (c₀ + diag(c₁) b)` for real `b`.
    pub fn from_affine(e: &HermitianMatrix, c0: &CVec, c1: &CVec) -> Self {
        let n = c1.len();
        let em = e.as_matrix();
        let u = em * c0;
        let q = RMat::from_fn(n, n, |i, j| (c1[i].conj() * em[(i, j)] * c1[j]).re);
        let l = RVec::from_fn(n, |i, _| (u[i].conj() * c1[i]).re);
        Self {
            q: (&q + q.transpose()) * 0.5,
            l,
            s0: e.quad(c0),
        }
    }

    pub fn eval(&self, b: &RVec) -> f64 {
        b.dot(&(&self.q * b)) + 2.0 * self.l.dot(b) + self.s0
    }

    pub fn grad(&self, b: &RVec) -> RVec {
        (&self.q * b + &self.l) * 2.0
    }

    pub fn add_assign(&mut self, o: &QuadForm) {
        self.q += &o.q;
        self.l += &o.l;
        self.s0 += o.s0;
    }
}

/// Quadratic-transform objective as a function of `b`.
#[derive(Clone, Debug)]
pub struct RateModel {
    /// `S_k(b)` per user.
    pub signal: Vec<QuadForm>,
    /// `T_k(b)` per user (signal included).
    pub total: Vec<QuadForm>,
    pub fp: FpState,
    pub noise: f64,
}

impl RateModel {
    pub fn dim(&self) -> usize {
        self.signal.first().map_or(0, |f| f.l.len())
    }

    pub fn objective(&self, b: &RVec) -> f64 {
        let mut logs = 0.0;
        let mut lin = 0.0;
        for k in 0..self.signal.len() {
            let (tau, rho) = (self.fp.tau[k], self.fp.rho[k]);
            logs += (1.0 + tau).log2();
            let s = self.signal[k].eval(b).max(0.0);
            let t = self.total[k].eval(b);
            lin += -tau + 2.0 * rho * ((1.0 + tau) * s).sqrt() - rho * rho * (t + self.noise);
        }
        logs + lin / LN_2
    }

    /// Concave quadratic minorizer at `bi`: returns `(H, g)` with the
    /// surrogate `−½bᵀHb + gᵀb` up to a constant.
    fn minorizer(&self, bi: &RVec) -> (RMat, RVec) {
        let n = self.dim();
        let mut h = RMat::zeros(n, n);
        let mut g = RVec::zeros(n);
        for k in 0..self.signal.len() {
            let (tau, rho) = (self.fp.tau[k], self.fp.rho[k]);
            let s = self.signal[k].eval(bi);
            if s > 1e-300 && rho > 0.0 {
                // ∇√S = (Qb + l)/√S.
                let d = (&self.signal[k].q * bi + &self.signal[k].l) / s.sqrt();
                g += d * (2.0 * rho * (1.0 + tau).sqrt() / LN_2);
            }
            let w = rho * rho / LN_2;
            h += &self.total[k].q * (2.0 * w);
            g -= &self.total[k].l * (2.0 * w);
        }
        (h, g)
    }
}

/// Sensing requirement `f_j(b) ≥ rhs_j` with convex `f_j`.
#[derive(Clone, Debug)]
pub struct SensingForm {
    pub form: QuadForm,
    pub rhs: f64,
}

/// Affine coefficient map `b ↦ (φ_T(b), φ_R(b))` around a latent
/// energy-splitting state.
#[derive(Clone, Debug)]
pub struct BModel {
    pub t0: CVec,
    pub t1: CVec,
    pub r1: CVec,
}

/// Amplitude given to transmit-only elements when they enter the blend.
const LATENT_SPLIT: f64 = std::f64::consts::FRAC_1_SQRT_2;

impl BModel {
    pub fn new(latent: &StarState) -> Self {
        let n = latent.n();
        let mut t0 = CVec::zeros(n);
        let mut t1 = CVec::zeros(n);
        let mut r1 = CVec::zeros(n);
        for i in 0..n {
            let (bt, br, tt, tr) = match latent.modes[i] {
                ElementMode::EnergySplit => (
                    latent.beta_t[i],
                    latent.beta_r[i],
                    latent.theta_t[i],
                    latent.theta_r[i],
                ),
                _ => (
                    LATENT_SPLIT,
                    LATENT_SPLIT,
                    latent.theta_t[i],
                    latent.theta_t[i] + std::f64::consts::FRAC_PI_2,
                ),
            };
            let ut = Complex64::from_polar(1.0, tt);
            t0[i] = ut;
            t1[i] = ut * (bt - 1.0);
            r1[i] = Complex64::from_polar(br, tr);
        }
        Self { t0, t1, r1 }
    }

    pub fn coefficients(&self, b: &[f64]) -> Coefficients {
        let n = b.len();
        Coefficients {
            phi_t: CVec::from_fn(n, |i, _| self.t0[i] + self.t1[i] * b[i]),
            phi_r: CVec::from_fn(n, |i, _| self.r1[i] * b[i]),
        }
    }

    /// Rate model from `E[k][h]`; users `k ≥ k_t` see the reflection side.
    pub fn rate_model(
        &self,
        e: &[Vec<HermitianMatrix>],
        fp: &FpState,
        noise: f64,
        k_t: usize,
    ) -> RateModel {
        let n = self.t0.len();
        let zero = CVec::zeros(n);
        let mut signal = Vec::with_capacity(e.len());
        let mut total = Vec::with_capacity(e.len());
        for (k, row) in e.iter().enumerate() {
            let (c0, c1) = if k < k_t {
                (&self.t0, &self.t1)
            } else {
                (&zero, &self.r1)
            };
            signal.push(QuadForm::from_affine(&row[k], c0, c1));
            let mut t = QuadForm::zeros(n);
            for m in row {
                t.add_assign(&QuadForm::from_affine(m, c0, c1));
            }
            total.push(t);
        }
        RateModel {
            signal,
            total,
            fp: fp.clone(),
            noise,
        }
    }

    /// Sensing forms `φ_R(b)ᴴ D_j φ_R(b) ≥ rhs_j`.
    pub fn sensing_forms(&self, d: &[HermitianMatrix], rhs: &[f64]) -> Vec<SensingForm> {
        let zero = CVec::zeros(self.t0.len());
        d.iter()
            .zip(rhs)
            .filter(|(_, &r)| r > 0.0)
            .map(|(dj, &r)| SensingForm {
                form: QuadForm::from_affine(dj, &zero, &self.r1),
                rhs: r,
            })
            .collect()
    }
}

/// Result of one penalized SCA run.
#[derive(Clone, Debug)]
pub struct PartitionOutcome {
    pub b: Vec<f64>,
    /// `ℛ̄_q(b) − κ χ(b)` at the returned point.
    pub penalized: f64,
    pub rate: f64,
    pub iterations: usize,
}

/// Penalized SCA over the relaxed partition.
///
/// Each iterate is accepted only if the penalized objective does not
/// decrease and every sensing requirement stays met.
#[allow(clippy::too_many_arguments)]
pub fn partition_sca(
    model: &RateModel,
    sensing: &[SensingForm],
    kappa: f64,
    b0: &[f64],
    n_part: usize,
    max_iters: usize,
    tol: f64,
) -> Result<PartitionOutcome> {
    let n = b0.len();
    if model.dim() != n && !model.signal.is_empty() {
        return Err(Error::DimensionMismatch {
            context: "partition model",
            expected: n,
            got: model.dim(),
        });
    }
    if n_part > n {
        return Err(Error::invalid(
            "n_part",
            format!("{} exceeds {} elements", n_part, n),
        ));
    }
    if !(kappa >= 0.0) {
        return Err(Error::invalid("kappa", "must be non-negative"));
    }
    let penalized = |b: &RVec| model.objective(b) - kappa * binarity_penalty(b.as_slice());
    let sensing_ok = |b: &RVec| sensing.iter().all(|s| s.form.eval(b) >= s.rhs);
    let mut b = RVec::from_column_slice(b0);
    let mut obj = penalized(&b);
    let mut iterations = 0;
    if n_part == 0 || n_part == n || n < 2 {
        return Ok(PartitionOutcome {
            b: b.as_slice().to_vec(),
            penalized: obj,
            rate: model.objective(&b),
            iterations,
        });
    }

    // b = b_ref + Z y with Z = [I; −1ᵀ] keeps Σ b = N_part.
    let b_ref = RVec::from_element(n, n_part as f64 / n as f64);
    let z = RMat::from_fn(n, n - 1, |i, j| {
        if i == j {
            1.0
        } else if i == n - 1 {
            -1.0
        } else {
            0.0
        }
    });
    for _ in 0..max_iters {
        iterations += 1;
        let (h, mut g) = if model.signal.is_empty() {
            (RMat::zeros(n, n), RVec::zeros(n))
        } else {
            model.minorizer(&b)
        };
        // −κ χ̂: gradient −κ(1 − 2bⁱ).
        for i in 0..n {
            g[i] -= kappa * (1.0 - 2.0 * b[i]);
        }
        // Minimize ½yᵀ(ZᵀHZ)y − (Zᵀ(g − H b_ref))ᵀy.
        let hy = z.transpose() * &h * &z;
        let gy = -(z.transpose() * (&g - &h * &b_ref));
        let mut cons = Vec::with_capacity(2 * n + sensing.len());
        for i in 0..n {
            let row = RVec::from_fn(n - 1, |j, _| z[(i, j)]);
            cons.push((None, -&row, b_ref[i]));
            cons.push((None, row, 1.0 - b_ref[i]));
        }
        for s in sensing {
            // f(bⁱ) + ∇f(bⁱ)ᵀ(b − bⁱ) ≥ rhs.
            let grad = s.form.grad(&b);
            let a = -(z.transpose() * &grad);
            let r = s.form.eval(&b) - s.rhs + grad.dot(&(&b_ref - &b));
            cons.push((None, a, r));
        }
        let start = RVec::from_fn(n - 1, |j, _| b[j] - b_ref[j]);
        let prob = RealQcqpProblem {
            hess: hy,
            grad: gy,
            constraints: cons,
        };
        let sol = solve_real_qcqp(&prob, 1e-9, Some(&start))?;
        if sol.status == QcqpStatus::Infeasible {
            break;
        }
        let mut next = &b_ref + &z * &sol.x;
        for v in next.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        let new_obj = penalized(&next);
        if new_obj < obj || !sensing_ok(&next) {
            break;
        }
        let change = (new_obj - obj).abs() / obj.abs().max(1e-12);
        b = next;
        obj = new_obj;
        if change < tol {
            break;
        }
    }
    Ok(PartitionOutcome {
        rate: model.objective(&b),
        b: b.as_slice().to_vec(),
        penalized: obj,
        iterations,
    })
}

/// State with `b_n = 1` elements in energy-splitting mode and the rest
/// transmit-only, inheriting phases and split amplitudes from `latent`.
pub fn binarize_state(latent: &StarState, b: &[u8]) -> StarState {
    let modes = ElementMode::from_partition(b);
    let mut s = StarState::initial(modes.clone(), latent.coupled);
    for i in 0..latent.n() {
        s.theta_t[i] = latent.theta_t[i];
        match modes[i] {
            ElementMode::EnergySplit if latent.modes[i] == ElementMode::EnergySplit => {
                s.beta_t[i] = latent.beta_t[i];
                s.beta_r[i] = latent.beta_r[i];
                s.theta_r[i] = latent.theta_r[i];
            }
            _ => {
                s.theta_r[i] =
                    crate::star_coeffs::wrap(latent.theta_t[i] + std::f64::consts::FRAC_PI_2);
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topk_examples() {
        assert_eq!(project_topk(&[0.9, 0.2, 0.7], 2).unwrap(), vec![1, 0, 1]);
        assert_eq!(project_topk(&[0.5; 4], 1).unwrap(), vec![1, 0, 0, 0]);
        assert!(project_topk(&[0.5; 2], 3).is_err());
    }

    #[test]
    fn penalty_only_limit_binarizes() {
        let model = RateModel {
            signal: vec![],
            total: vec![],
            fp: FpState::zeros(0),
            noise: 1.0,
        };
        let out = partition_sca(&model, &[], 1e3, &[0.9, 0.2, 0.6, 0.3], 2, 50, 1e-12).unwrap();
        assert!(binarity_penalty(&out.b) <= 1e-6, "{:?}", out.b);
        assert_eq!(project_topk(&out.b, 2).unwrap(), vec![1, 0, 1, 0]);
    }

    #[test]
    fn blend_endpoints() {
        let modes = vec![ElementMode::EnergySplit; 2];
        let mut s = StarState::initial(modes, true);
        s.beta_t = vec![0.6, 0.8];
        s.beta_r = vec![0.8, 0.6];
        let m = BModel::new(&s);
        let ones = m.coefficients(&[1.0, 1.0]);
        assert!((ones.phi_t - s.phi_t()).norm() < 1e-15);
        assert!((ones.phi_r - s.phi_r()).norm() < 1e-15);
        let zeros = m.coefficients(&[0.0, 0.0]);
        assert!(zeros.phi_r.norm() == 0.0);
        assert!(zeros.phi_t.iter().all(|z| (z.norm() - 1.0).abs() < 1e-15));
    }
}
