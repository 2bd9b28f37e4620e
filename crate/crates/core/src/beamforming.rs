//! Transmit beamformer updates at fixed `(τ, ρ)` and metasurface
//! coefficients.
//!
//! The `√(w_kᴴ A_k w_k)` terms of the quadratic-transform objective are
//! convex, so each update maximizes the tight minorizer
//! `Re{v_kᴴ A_k w_k} / √(v_kᴴ A_k v_k)` built at the current beamformer `v`.
//! The resulting subproblem is a concave QCQP:
//!
//! ```text
//! maximize  −Σ_h w_hᴴ Q w_h + 2 Re Σ_k c_kᴴ w_k,   Q = Σ_k ρ_k² A_k
//! ```
//!
//! solved in closed form over the power ball, or by the barrier QCQP solver
//! when affine sensing constraints or per-user rate floors are present.

use crate::error::{Error, Result};
use crate::fp_core::{objective_q, FpState};
use crate::metrics::{cascade, transmit_power};
use crate::numerics::{
    eig_hermitian, solve_ball_qp, solve_qcqp_from, CMat, CVec, Complex64, HermitianMatrix,
    QcqpProblem, QcqpStatus, QuadConstraint,
};

/// Sensing requirement `f_j(W) = Σ_h w_hᴴ P_j w_h ≥ rhs_j` per outdoor user.
#[derive(Clone, Debug)]
pub struct SensingConstraintData {
    pub p: Vec<HermitianMatrix>,
    pub rhs: Vec<f64>,
}

impl SensingConstraintData {
    /// `P_j = H₁ᴴ Φ_Rᴴ R_sense(j) Φ_R H₁`, `rhs_j = δ N_s σ²_ns / |α_j|²`.
    pub fn build(
        phi_r: &CVec,
        h1: &CMat,
        r_sense: &[HermitianMatrix],
        delta: f64,
        ns: usize,
        sensor_noise: f64,
        alpha_sq: f64,
    ) -> Self {
        let g = cascade(phi_r, h1);
        let p = r_sense
            .iter()
            .map(|r| HermitianMatrix::from_hermitian_part(&(g.adjoint() * r.as_matrix() * &g)))
            .collect();
        let rhs = vec![delta * ns as f64 * sensor_noise / alpha_sq; r_sense.len()];
        Self { p, rhs }
    }

    pub fn f(&self, j: usize, w: &CMat) -> f64 {
        (0..w.ncols())
            .map(|h| self.p[j].quad(&w.column(h).into_owned()))
            .sum()
    }

    /// Constraints with a positive requirement.
    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.rhs.len()).filter(|&j| self.rhs[j] > 0.0)
    }

    pub fn is_active(&self) -> bool {
        self.active().next().is_some()
    }

    /// Smallest `f_j(W)/rhs_j` over active constraints (infinite if none).
    pub fn min_ratio(&self, w: &CMat) -> f64 {
        self.active()
            .map(|j| self.f(j, w) / self.rhs[j])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn satisfied(&self, w: &CMat, rel_slack: f64) -> bool {
        self.min_ratio(w) >= 1.0 - rel_slack
    }

    /// Affine lower bound `Σ_h 2Re{(w_hⁱ)ᴴ P_j w_h} − f_j(Wⁱ)` evaluated at `w`.
    pub fn linearized(&self, j: usize, wi: &CMat, w: &CMat) -> f64 {
        let pw = self.p[j].as_matrix() * wi;
        let lin: f64 = pw
            .iter()
            .zip(w.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum();
        2.0 * lin - self.f(j, wi)
    }
}

#[derive(Clone, Debug)]
pub struct BeamformProblem<'a> {
    /// Effective matrices `A_k = H₁ᴴ Φ_kᴴ R(k) Φ_k H₁`.
    pub a: &'a [HermitianMatrix],
    pub fp: &'a FpState,
    pub noise: f64,
    pub p_max: f64,
    pub sensing: Option<&'a SensingConstraintData>,
    /// Per-user SINR floor enforced through its convex inner approximation.
    pub min_sinr: Option<f64>,
    pub max_iters: usize,
    pub tol: f64,
}

#[derive(Clone, Debug)]
pub struct BeamformOutcome {
    pub w: CMat,
    pub objective: f64,
    pub iterations: usize,
    /// False when a requested rate floor could not be imposed.
    pub min_rate_enforced: bool,
}

fn vec_of(w: &CMat) -> CVec {
    CVec::from_iterator(w.len(), w.iter().cloned())
}

fn mat_of(x: &CVec, m: usize, k: usize) -> CMat {
    CMat::from_iterator(m, k, x.iter().cloned())
}

fn block_diag(blocks: &[CMat]) -> CMat {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        out.view_mut((off, off), (b.nrows(), b.ncols()))
            .copy_from(b);
        off += b.nrows();
    }
    out
}

/// Linear terms `c_k` of the minorized objective.
fn linear_terms(p: &BeamformProblem, v: &CMat) -> Result<CMat> {
    let m = v.nrows();
    let mut c = CMat::zeros(m, v.ncols());
    for (k, ak) in p.a.iter().enumerate() {
        let coef = p.fp.rho[k] * (1.0 + p.fp.tau[k]).sqrt();
        if coef == 0.0 {
            continue;
        }
        let vk: CVec = v.column(k).into_owned();
        let mut s = ak.quad(&vk);
        let mut dir = vk;
        if !(s > 1e-300) {
            let e = eig_hermitian(ak)?;
            if e.max() <= 0.0 {
                continue;
            }
            dir = e.vectors.column(0).into_owned();
            s = e.max();
        }
        let col = ak.as_matrix() * dir * Complex64::new(coef / s.sqrt(), 0.0);
        c.set_column(k, &col);
    }
    Ok(c)
}

fn q_matrix(p: &BeamformProblem) -> HermitianMatrix {
    let m = p.a.first().map_or(0, |a| a.dim());
    p.a.iter()
        .zip(&p.fp.rho)
        .fold(HermitianMatrix::zeros(m), |acc, (a, r)| {
            acc.add(&a.scale(r * r))
        })
}

/// One minorize-maximize step from `v`.
fn mm_step(p: &BeamformProblem, v: &CMat, enforce_floor: bool) -> Result<Option<CMat>> {
    let (m, k) = v.shape();
    let q = q_matrix(p);
    let c = linear_terms(p, v)?;
    let sensing_active = p.sensing.is_some_and(|s| s.is_active());
    if !sensing_active && !enforce_floor {
        return solve_ball_qp(&q, &c, p.p_max).map(Some);
    }
    // Work in units of √P_max so the power ball is the unit ball.
    let scale = p.p_max.sqrt();
    let quad = block_diag(&vec![q.as_matrix() * Complex64::new(p.p_max, 0.0); k]);
    let lin = vec_of(&c) * Complex64::new(scale, 0.0);
    let mut constraints = vec![QuadConstraint::ball(m * k, 1.0)];
    if let Some(s) = p.sensing {
        for j in s.active() {
            let g = vec_of(&(s.p[j].as_matrix() * v)) * Complex64::new(scale, 0.0);
            constraints.push(QuadConstraint::affine(-g, -(s.rhs[j] + s.f(j, v))));
        }
    }
    if enforce_floor {
        let gamma = p.min_sinr.unwrap_or(0.0);
        for (kk, ak) in p.a.iter().enumerate() {
            let blocks: Vec<CMat> = (0..k)
                .map(|h| {
                    if h == kk {
                        CMat::zeros(m, m)
                    } else {
                        ak.as_matrix() * Complex64::new(gamma * p.p_max, 0.0)
                    }
                })
                .collect();
            let vk: CVec = v.column(kk).into_owned();
            let mut lin_k = CVec::zeros(m * k);
            lin_k
                .rows_mut(kk * m, m)
                .copy_from(&(-(ak.as_matrix() * &vk) * Complex64::new(scale, 0.0)));
            constraints.push(QuadConstraint {
                quad: Some(HermitianMatrix::from_hermitian_part(&block_diag(&blocks))),
                lin: lin_k,
                rhs: -gamma * p.noise - ak.quad(&vk),
            });
        }
    }
    let prob = QcqpProblem {
        quad: HermitianMatrix::from_hermitian_part(&quad),
        lin,
        constraints,
    };
    let start = vec_of(v) / Complex64::new(scale, 0.0);
    let sol = solve_qcqp_from(&prob, 1e-9, Some(&start))?;
    match sol.status {
        QcqpStatus::Infeasible => Ok(None),
        _ => {
            let mut w = mat_of(&sol.x, m, k) * Complex64::new(scale, 0.0);
            // Barrier iterates are interior; clip rounding past the budget.
            let pw = transmit_power(&w);
            if pw > p.p_max {
                w *= Complex64::new((p.p_max / pw).sqrt(), 0.0);
            }
            Ok(Some(w))
        }
    }
}

fn run_mm(p: &BeamformProblem, w0: &CMat, enforce_floor: bool) -> Result<BeamformOutcome> {
    let mut w = w0.clone();
    let mut obj = objective_q(p.fp, &w, p.a, p.noise);
    let mut iterations = 0;
    let mut floor_ok = enforce_floor;
    for _ in 0..p.max_iters {
        iterations += 1;
        let next = match mm_step(p, &w, floor_ok)? {
            Some(n) => n,
            None if floor_ok => {
                floor_ok = false;
                match mm_step(p, &w, false)? {
                    Some(n) => n,
                    None => break,
                }
            }
            None => break,
        };
        if let Some(s) = p.sensing {
            if s.is_active() && !s.satisfied(&next, 1e-9) && s.satisfied(&w, 1e-9) {
                break;
            }
        }
        let new_obj = objective_q(p.fp, &next, p.a, p.noise);
        if new_obj < obj - 1e-12 * obj.abs().max(1.0) {
            break;
        }
        let change = (new_obj - obj).abs() / obj.abs().max(1e-12);
        w = next;
        obj = new_obj;
        if change < p.tol {
            break;
        }
    }
    Ok(BeamformOutcome {
        w,
        objective: obj,
        iterations,
        min_rate_enforced: floor_ok,
    })
}

/// Communication-stage update under the sum-power budget only.
pub fn beamform_comm(p: &BeamformProblem, w0: &CMat) -> Result<BeamformOutcome> {
    if p.p_max == 0.0 {
        return Ok(BeamformOutcome {
            w: CMat::zeros(w0.nrows(), w0.ncols()),
            objective: objective_q(p.fp, &CMat::zeros(w0.nrows(), w0.ncols()), p.a, p.noise),
            iterations: 0,
            min_rate_enforced: p.min_sinr.is_some(),
        });
    }
    let unconstrained = BeamformProblem {
        sensing: None,
        ..p.clone()
    };
    run_mm(&unconstrained, w0, p.min_sinr.is_some())
}

/// Preparation-stage update with linearized sensing constraints. A warm
/// start that violates the sensing requirement is first repaired by
/// [`restore_sensing`].
pub fn beamform_prep_sca(p: &BeamformProblem, w0: &CMat) -> Result<BeamformOutcome> {
    let Some(s) = p.sensing.filter(|s| s.is_active()) else {
        return beamform_comm(p, w0);
    };
    let start = if s.satisfied(w0, 0.0) {
        w0.clone()
    } else {
        restore_sensing(s, p.p_max, w0.nrows(), w0.ncols(), p.max_iters)?
    };
    run_mm(p, &start, p.min_sinr.is_some())
}

/// Maximizes `min_j f_j(W)/rhs_j` under the power budget by successive
/// linearization, starting from the dominant eigenvector of `Σ_j P_j/rhs_j`.
/// Returns a beamformer meeting every requirement with a small margin, or
/// [`Error::SensingInfeasible`].
pub fn restore_sensing(
    s: &SensingConstraintData,
    p_max: f64,
    m: usize,
    k: usize,
    max_iters: usize,
) -> Result<CMat> {
    let active: Vec<usize> = s.active().collect();
    let infeasible = |w: &CMat| {
        let (j, r) = active
            .iter()
            .map(|&j| (j, s.f(j, w) / s.rhs[j]))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        Error::SensingInfeasible {
            user: j,
            achievable: r * s.rhs[j],
            required: s.rhs[j],
        }
    };
    let mut sum = HermitianMatrix::zeros(m);
    for &j in &active {
        sum = sum.add(&s.p[j].scale(1.0 / s.rhs[j]));
    }
    let e = eig_hermitian(&sum)?;
    let mut w = CMat::zeros(m, k);
    w.set_column(
        0,
        &(e.vectors.column(0) * Complex64::new(p_max.sqrt(), 0.0)),
    );
    // Alternative start: one column per requirement along its own dominant
    // direction, so no linearization starts with a vanishing gradient.
    let mut spread = CMat::zeros(m, k);
    let share = Complex64::new((p_max / active.len().min(k).max(1) as f64).sqrt(), 0.0);
    for (i, &j) in active.iter().enumerate() {
        let ej = eig_hermitian(&s.p[j])?;
        let col = spread.column(i % k) + ej.vectors.column(0) * share;
        spread.set_column(i % k, &col);
    }
    let pw = transmit_power(&spread);
    if pw > 0.0 {
        spread *= Complex64::new((p_max / pw).sqrt(), 0.0);
    }
    if s.min_ratio(&spread) > s.min_ratio(&w) {
        w = spread;
    }
    let margin = 1.0 + 1e-6;
    if s.min_ratio(&w) >= margin {
        return Ok(w);
    }
    // Variables: vec(W)/√P_max stacked with one complex slot whose real part is t.
    let n = m * k;
    let scale = p_max.sqrt();
    for _ in 0..max_iters.max(5) {
        let mut quad = CMat::zeros(n + 1, n + 1);
        quad[(n, n)] = Complex64::new(1e-9, 0.0);
        let mut lin = CVec::zeros(n + 1);
        lin[n] = Complex64::new(0.5, 0.0);
        let mut ball = CMat::zeros(n + 1, n + 1);
        for i in 0..n {
            ball[(i, i)] = Complex64::new(1.0, 0.0);
        }
        let mut constraints = vec![QuadConstraint {
            quad: Some(HermitianMatrix::from_hermitian_part(&ball)),
            lin: CVec::zeros(n + 1),
            rhs: 1.0,
        }];
        for &j in &active {
            // t − l_j(W)/rhs_j ≤ 0.
            let g = vec_of(&(s.p[j].as_matrix() * &w)) * Complex64::new(scale / s.rhs[j], 0.0);
            let mut a = CVec::zeros(n + 1);
            a.rows_mut(0, n).copy_from(&(-g));
            a[n] = Complex64::new(0.5, 0.0);
            constraints.push(QuadConstraint::affine(a, -s.f(j, &w) / s.rhs[j]));
        }
        let prob = QcqpProblem {
            quad: HermitianMatrix::from_hermitian_part(&quad),
            lin,
            constraints,
        };
        let mut start = CVec::zeros(n + 1);
        start
            .rows_mut(0, n)
            .copy_from(&(vec_of(&w) * Complex64::new(0.999 / scale, 0.0)));
        start[n] = Complex64::new(s.min_ratio(&w) - 1.0, 0.0);
        let sol = solve_qcqp_from(&prob, 1e-9, Some(&start))?;
        if sol.status == QcqpStatus::Infeasible {
            break;
        }
        let next = mat_of(&sol.x.rows(0, n).into_owned(), m, k) * Complex64::new(scale, 0.0);
        let improved = s.min_ratio(&next) > s.min_ratio(&w) * (1.0 + 1e-9);
        if !improved {
            break;
        }
        w = next;
        if s.min_ratio(&w) >= margin {
            return Ok(w);
        }
    }
    Err(infeasible(&w))
}

/// Equal-power matched filter along each user's dominant effective direction.
pub fn matched_filter_init(a: &[HermitianMatrix], m: usize, p_max: f64) -> Result<CMat> {
    let k = a.len();
    let mut w = CMat::zeros(m, k);
    if k == 0 || p_max == 0.0 {
        return Ok(w);
    }
    let per = (p_max / k as f64).sqrt();
    for (kk, ak) in a.iter().enumerate() {
        let e = eig_hermitian(ak)?;
        let col = if e.max() > 0.0 {
            e.vectors.column(0).into_owned()
        } else {
            let mut v = CVec::zeros(m);
            v[kk % m] = Complex64::new(1.0, 0.0);
            v
        };
        w.set_column(kk, &(col * Complex64::new(per, 0.0)));
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fp_core::update_fp;
    use crate::numerics::c;

    fn rank_one(g: &[Complex64]) -> HermitianMatrix {
        HermitianMatrix::outer(&CVec::from_vec(g.to_vec()))
    }

    #[test]
    fn zero_budget_gives_zero_beam() {
        let a = vec![rank_one(&[c(1.0, 0.0), c(0.5, 0.5)])];
        let w0 = CMat::from_element(2, 1, c(0.1, 0.0));
        let fp = update_fp(&w0, &a, 1.0);
        let p = BeamformProblem {
            a: &a,
            fp: &fp,
            noise: 1.0,
            p_max: 0.0,
            sensing: None,
            min_sinr: None,
            max_iters: 30,
            tol: 1e-4,
        };
        assert!(beamform_comm(&p, &w0)
            .unwrap()
            .w
            .iter()
            .all(|z| z.norm() == 0.0));
    }

    #[test]
    fn linearization_is_tight_and_a_lower_bound() {
        let p1 =
            rank_one(&[c(1.0, 0.3), c(-0.2, 0.7)]).add(&HermitianMatrix::identity(2).scale(0.1));
        let s = SensingConstraintData {
            p: vec![p1],
            rhs: vec![1.0],
        };
        let wi = CMat::from_row_slice(2, 2, &[c(0.3, 0.1), c(0.0, -0.2), c(0.5, 0.0), c(0.1, 0.4)]);
        assert!((s.linearized(0, &wi, &wi) - s.f(0, &wi)).abs() < 1e-14);
        let w = CMat::from_row_slice(
            2,
            2,
            &[c(-0.6, 0.2), c(0.3, 0.3), c(0.2, -0.9), c(0.0, 0.1)],
        );
        assert!(s.linearized(0, &wi, &w) <= s.f(0, &w) + 1e-14);
    }

    #[test]
    fn restoration_meets_requirement() {
        let s = SensingConstraintData {
            p: vec![
                rank_one(&[c(1.0, 0.0), c(0.0, 0.0)]),
                rank_one(&[c(0.0, 0.0), c(1.0, 0.0)]),
            ],
            rhs: vec![0.3, 0.3],
        };
        let w = restore_sensing(&s, 1.0, 2, 2, 30).unwrap();
        assert!(s.satisfied(&w, 0.0));
        assert!(transmit_power(&w) <= 1.0 + 1e-9);
        let hard = SensingConstraintData {
            p: s.p.clone(),
            rhs: vec![0.8, 0.8],
        };
        assert!(matches!(
            restore_sensing(&hard, 1.0, 2, 2, 30),
            Err(Error::SensingInfeasible { .. })
        ));
    }
}
