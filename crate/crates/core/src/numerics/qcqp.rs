//! Convex QCQP over a complex vector:
//!
//! ```text
//! maximize   -x^H Q x + 2 Re{c^H x}
//! subject to x^H P_i x + 2 Re{a_i^H x} <= r_i
//! ```
//!
//! with `Q, P_i ⪰ 0`. Solved by a log-barrier Newton method on the real
//! embedding `x = a + jb`, with a phase-I slack problem when the start point
//! is not strictly feasible.

use nalgebra::Cholesky;

use super::{eig_hermitian, CMat, CVec, Complex64, HermitianMatrix, RMat, RVec};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct QuadConstraint {
    /// Quadratic part; `None` for an affine constraint.
    pub quad: Option<HermitianMatrix>,
    pub lin: CVec,
    pub rhs: f64,
}

impl QuadConstraint {
    pub fn affine(lin: CVec, rhs: f64) -> Self {
        Self {
            quad: None,
            lin,
            rhs,
        }
    }

    pub fn ball(dim: usize, radius_sq: f64) -> Self {
        Self {
            quad: Some(HermitianMatrix::identity(dim)),
            lin: CVec::zeros(dim),
            rhs: radius_sq,
        }
    }

    pub fn value(&self, x: &CVec) -> f64 {
        let q = self.quad.as_ref().map_or(0.0, |q| q.quad(x));
        q + 2.0 * self.lin.dotc(x).re
    }
}

#[derive(Clone, Debug)]
pub struct QcqpProblem {
    pub quad: HermitianMatrix,
    pub lin: CVec,
    pub constraints: Vec<QuadConstraint>,
}

impl QcqpProblem {
    pub fn dim(&self) -> usize {
        self.lin.len()
    }

    pub fn objective(&self, x: &CVec) -> f64 {
        -self.quad.quad(x) + 2.0 * self.lin.dotc(x).re
    }

    pub fn max_violation(&self, x: &CVec) -> f64 {
        self.constraints
            .iter()
            .map(|c| (c.value(x) - c.rhs).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        let psd = |h: &HermitianMatrix, what: &'static str| -> Result<()> {
            if h.dim() != n {
                return Err(Error::DimensionMismatch {
                    context: what,
                    expected: n,
                    got: h.dim(),
                });
            }
            let e = eig_hermitian(h)?;
            let floor = -1e-9 * (1.0 + e.values.iter().map(|v| v.abs()).sum::<f64>());
            if e.min() < floor {
                return Err(Error::invalid(
                    what,
                    format!("not PSD (min eigenvalue {:.3e})", e.min()),
                ));
            }
            Ok(())
        };
        psd(&self.quad, "qcqp objective")?;
        for c in &self.constraints {
            if c.lin.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "qcqp constraint",
                    expected: n,
                    got: c.lin.len(),
                });
            }
            if !c.rhs.is_finite() {
                return Err(Error::invalid("rhs", "non-finite"));
            }
            if let Some(q) = &c.quad {
                psd(q, "qcqp constraint")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QcqpStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

#[derive(Clone, Debug)]
pub struct QcqpSolution {
    pub status: QcqpStatus,
    pub x: CVec,
    pub objective: f64,
    /// Norm of the Lagrangian gradient relative to `1 + |c|`, on the
    /// internally scaled problem.
    pub kkt_residual: f64,
    /// Multipliers of the internally scaled constraints.
    pub multipliers: Vec<f64>,
    pub newton_steps: usize,
}

pub fn solve_qcqp(p: &QcqpProblem, tol: f64) -> Result<QcqpSolution> {
    solve_qcqp_from(p, tol, None)
}

/// As [`solve_qcqp`], starting the barrier path at `start` when it is
/// strictly feasible.
pub fn solve_qcqp_from(p: &QcqpProblem, tol: f64, start: Option<&CVec>) -> Result<QcqpSolution> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    p.validate()?;
    let n = p.dim();
    let real = RealQcqp::from_complex(p);
    let xi0 = match start {
        Some(x) if x.len() == n => to_real(x),
        Some(x) => {
            return Err(Error::DimensionMismatch {
                context: "qcqp start",
                expected: n,
                got: x.len(),
            })
        }
        None => RVec::zeros(2 * n),
    };
    let out = real.solve(xi0, tol);
    let x = to_complex(&out.xi);
    Ok(QcqpSolution {
        status: out.status,
        objective: p.objective(&x),
        x,
        kkt_residual: out.kkt,
        multipliers: out.lambda,
        newton_steps: out.steps,
    })
}

fn to_real(x: &CVec) -> RVec {
    let n = x.len();
    RVec::from_fn(2 * n, |i, _| if i < n { x[i].re } else { x[i - n].im })
}

fn to_complex(xi: &RVec) -> CVec {
    let n = xi.len() / 2;
    CVec::from_fn(n, |i, _| Complex64::new(xi[i], xi[i + n]))
}

fn embed_sym(q: &HermitianMatrix) -> RMat {
    super::real_embedding(q.as_matrix())
}

fn embed_vec(c: &CVec) -> RVec {
    to_real(c)
}

/// `min ½ξᵀHξ + gᵀξ  s.t.  ½ξᵀP_iξ + q_iᵀξ ≤ r_i`.
struct RealQcqp {
    h: RMat,
    g: RVec,
    cons: Vec<(Option<RMat>, RVec, f64)>,
}

struct RealOut {
    xi: RVec,
    status: QcqpStatus,
    kkt: f64,
    lambda: Vec<f64>,
    steps: usize,
}

const MAX_NEWTON: usize = 600;
const BARRIER_MU: f64 = 16.0;

impl RealQcqp {
    fn from_complex(p: &QcqpProblem) -> Self {
        let cons = p
            .constraints
            .iter()
            .map(|c| {
                (
                    c.quad.as_ref().map(|q| embed_sym(q) * 2.0),
                    embed_vec(&c.lin) * 2.0,
                    c.rhs,
                )
            })
            .collect();
        Self::normalized(embed_sym(&p.quad) * 2.0, -embed_vec(&p.lin) * 2.0, cons)
    }

    fn normalized(h: RMat, g: RVec, cons: Vec<(Option<RMat>, RVec, f64)>) -> Self {
        let scale = h.amax().max(g.amax());
        let obj_scale = if scale > 0.0 { scale } else { 1.0 };
        let cons = cons
            .into_iter()
            .map(|(pm, q, r)| {
                let s = pm.as_ref().map_or(0.0, |m| m.amax()).max(q.amax());
                let s = if s > 0.0 { s } else { 1.0 };
                (pm.map(|m| m / s), q / s, r / s)
            })
            .collect();
        Self {
            h: h / obj_scale,
            g: g / obj_scale,
            cons,
        }
    }

    fn f0(&self, xi: &RVec) -> f64 {
        0.5 * xi.dot(&(&self.h * xi)) + self.g.dot(xi)
    }

    fn con_val(&self, i: usize, xi: &RVec) -> f64 {
        let (p, q, r) = &self.cons[i];
        let quad = p.as_ref().map_or(0.0, |p| 0.5 * xi.dot(&(p * xi)));
        quad + q.dot(xi) - r
    }

    fn con_grad(&self, i: usize, xi: &RVec) -> RVec {
        let (p, q, _) = &self.cons[i];
        match p {
            Some(p) => p * xi + q,
            None => q.clone(),
        }
    }

    fn solve(&self, xi0: RVec, tol: f64) -> RealOut {
        let m = self.cons.len();
        let n = xi0.len();
        if m == 0 {
            return self.unconstrained(n, tol);
        }
        let mut steps = 0usize;
        let feasible = |xi: &RVec| (0..m).all(|i| self.con_val(i, xi) < 0.0);
        let mut xi = if feasible(&xi0) {
            xi0
        } else if feasible(&RVec::zeros(n)) {
            RVec::zeros(n)
        } else {
            match self.phase_one(&xi0, &mut steps) {
                Some(x) => x,
                None => {
                    return RealOut {
                        xi: xi0,
                        status: QcqpStatus::Infeasible,
                        kkt: f64::INFINITY,
                        lambda: vec![0.0; m],
                        steps,
                    }
                }
            }
        };

        let mut t = 1.0f64.max(m as f64 / (1.0 + self.f0(&xi).abs()));
        let mut status = QcqpStatus::MaxIter;
        loop {
            let ok = self.centering(&mut xi, t, &mut steps);
            let f = self.f0(&xi).abs();
            if ok && (m as f64) / t <= 0.1 * tol * (1.0 + f) {
                status = QcqpStatus::Optimal;
                break;
            }
            if steps >= MAX_NEWTON {
                break;
            }
            t *= BARRIER_MU;
        }
        let barrier: Vec<f64> = (0..m)
            .map(|i| 1.0 / (t * (-self.con_val(i, &xi))))
            .collect();
        let (lambda, kkt) = self.refine_multipliers(&xi, barrier);
        RealOut {
            xi,
            status,
            kkt,
            lambda,
            steps,
        }
    }

    fn lagrangian_residual(&self, xi: &RVec, lambda: &[f64]) -> f64 {
        let mut lag = &self.h * xi + &self.g;
        for (i, l) in lambda.iter().enumerate() {
            lag += self.con_grad(i, xi) * *l;
        }
        lag.norm() / (1.0 + self.g.norm())
    }

    /// Keeps the better of the barrier multipliers and a non-negative least
    /// squares fit on the nearly active constraints.
    fn refine_multipliers(&self, xi: &RVec, barrier: Vec<f64>) -> (Vec<f64>, f64) {
        let m = self.cons.len();
        let r_barrier = self.lagrangian_residual(xi, &barrier);
        let mut active: Vec<usize> = (0..m)
            .filter(|&i| -self.con_val(i, xi) <= 1e-6 * (1.0 + self.cons[i].2.abs()))
            .collect();
        let grad_f = &self.h * xi + &self.g;
        let mut best = (barrier, r_barrier);
        while !active.is_empty() {
            let gm = RMat::from_columns(
                &active
                    .iter()
                    .map(|&i| self.con_grad(i, xi))
                    .collect::<Vec<_>>(),
            );
            let gtg = gm.transpose() * &gm;
            let rhs = -(gm.transpose() * &grad_f);
            let Some(sol) = gtg.clone().lu().solve(&rhs) else {
                break;
            };
            if let Some(neg) = (0..active.len()).find(|&j| sol[j] < 0.0) {
                active.remove(neg);
                continue;
            }
            let mut lam = vec![0.0; m];
            for (j, &i) in active.iter().enumerate() {
                lam[i] = sol[j];
            }
            let r = self.lagrangian_residual(xi, &lam);
            if r < best.1 {
                best = (lam, r);
            }
            break;
        }
        best
    }

    fn unconstrained(&self, n: usize, _tol: f64) -> RealOut {
        let rhs = -&self.g;
        let xi = Cholesky::new(self.h.clone())
            .map(|c| c.solve(&rhs))
            .or_else(|| self.h.clone().lu().solve(&rhs));
        match xi {
            Some(xi) => {
                let kkt = (&self.h * &xi + &self.g).norm() / (1.0 + self.g.norm());
                RealOut {
                    xi,
                    status: QcqpStatus::Optimal,
                    kkt,
                    lambda: vec![],
                    steps: 1,
                }
            }
            None => RealOut {
                xi: RVec::zeros(n),
                status: QcqpStatus::MaxIter,
                kkt: f64::INFINITY,
                lambda: vec![],
                steps: 1,
            },
        }
    }

    /// Minimizes `t f0 - Σ log(-h_i)`; true on Newton-decrement convergence.
    fn centering(&self, xi: &mut RVec, t: f64, steps: &mut usize) -> bool {
        let m = self.cons.len();
        let merit = |x: &RVec| -> f64 {
            let mut v = t * self.f0(x);
            for i in 0..m {
                let s = -self.con_val(i, x);
                if s <= 0.0 {
                    return f64::INFINITY;
                }
                v -= s.ln();
            }
            v
        };
        for _ in 0..100 {
            if *steps >= MAX_NEWTON {
                return false;
            }
            *steps += 1;
            let mut grad = (&self.h * &*xi + &self.g) * t;
            let mut hess = &self.h * t;
            for i in 0..m {
                let s = -self.con_val(i, xi);
                let gi = self.con_grad(i, xi);
                grad += &gi / s;
                if let Some(p) = &self.cons[i].0 {
                    hess += p / s;
                }
                hess += (&gi * gi.transpose()) / (s * s);
            }
            let dir = match newton_solve(&hess, &grad) {
                Some(d) => d,
                None => return false,
            };
            let dec = -grad.dot(&dir);
            if dec * 0.5 <= 1e-12 * (1.0 + merit(xi).abs()) || dec <= 1e-14 {
                return true;
            }
            let f_cur = merit(xi);
            let mut alpha = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let cand = &*xi + &dir * alpha;
                let f_new = merit(&cand);
                if f_new.is_finite() && f_new <= f_cur - 0.25 * alpha * dec {
                    *xi = cand;
                    moved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !moved {
                return dec <= 1e-8 * (1.0 + f_cur.abs());
            }
        }
        false
    }

    /// Minimizes `s` subject to `h_i(ξ) ≤ s`, `s ≥ -1`; returns a strictly
    /// feasible point once `s < 0`.
    fn phase_one(&self, xi0: &RVec, steps: &mut usize) -> Option<RVec> {
        let m = self.cons.len();
        let n = xi0.len();
        let mut xi = xi0.clone();
        let mut s = (0..m)
            .map(|i| self.con_val(i, &xi))
            .fold(f64::NEG_INFINITY, f64::max)
            + 1.0;
        let mut t = 1.0;
        let merit = |x: &RVec, s: f64, t: f64| -> f64 {
            if s <= -1.0 {
                return f64::INFINITY;
            }
            let mut v = t * s - (s + 1.0).ln();
            for i in 0..m {
                let sl = s - self.con_val(i, x);
                if sl <= 0.0 {
                    return f64::INFINITY;
                }
                v -= sl.ln();
            }
            v
        };
        for _outer in 0..40 {
            for _ in 0..100 {
                if *steps >= MAX_NEWTON {
                    return None;
                }
                *steps += 1;
                if (0..m).all(|i| self.con_val(i, &xi) < -1e-12) {
                    return Some(xi);
                }
                // Variables (ξ, s).
                let mut grad = RVec::zeros(n + 1);
                let mut hess = RMat::zeros(n + 1, n + 1);
                grad[n] = t - 1.0 / (s + 1.0);
                hess[(n, n)] = 1.0 / ((s + 1.0) * (s + 1.0));
                for i in 0..m {
                    let sl = s - self.con_val(i, &xi);
                    let gi = self.con_grad(i, &xi);
                    let mut full = RVec::zeros(n + 1);
                    full.rows_mut(0, n).copy_from(&gi);
                    full[n] = -1.0;
                    grad += &full / sl;
                    if let Some(p) = &self.cons[i].0 {
                        let mut blk = hess.view_mut((0, 0), (n, n));
                        blk += p / sl;
                    }
                    hess += (&full * full.transpose()) / (sl * sl);
                }
                let dir = newton_solve(&hess, &grad)?;
                let dec = -grad.dot(&dir);
                let f_cur = merit(&xi, s, t);
                if dec * 0.5 <= 1e-12 * (1.0 + f_cur.abs()) {
                    break;
                }
                let mut alpha = 1.0;
                let mut moved = false;
                for _ in 0..60 {
                    let cx = &xi + dir.rows(0, n) * alpha;
                    let cs = s + dir[n] * alpha;
                    let f_new = merit(&cx, cs, t);
                    if f_new.is_finite() && f_new <= f_cur - 0.25 * alpha * dec {
                        xi = cx;
                        s = cs;
                        moved = true;
                        break;
                    }
                    alpha *= 0.5;
                }
                if !moved {
                    break;
                }
            }
            if (0..m).all(|i| self.con_val(i, &xi) < -1e-12) {
                return Some(xi);
            }
            // Certified: the central path minimum of s is within (m+1)/t of optimum.
            if s - (m as f64 + 1.0) / t > -1e-12 && t > 1e10 {
                return None;
            }
            t *= BARRIER_MU;
        }
        None
    }
}

fn newton_solve(hess: &RMat, grad: &RVec) -> Option<RVec> {
    let rhs = -grad;
    if let Some(c) = Cholesky::new(hess.clone()) {
        return Some(c.solve(&rhs));
    }
    let dmax = hess.diagonal().amax().max(1e-300);
    let mut reg = hess.clone();
    for i in 0..reg.nrows() {
        reg[(i, i)] += 1e-10 * dmax;
    }
    Cholesky::new(reg).map(|c| c.solve(&rhs))
}

/// Maximizes `Σ_k (-w_kᴴ Q w_k + 2 Re{c_kᴴ w_k})` subject to
/// `Σ_k ‖w_k‖² ≤ p_max`, where `c_k` are the columns of `c`.
///
/// The maximizer is `W = (Q + νI)^{-1} C` with `ν ≥ 0` set by bisection on the
/// power budget.
pub fn solve_ball_qp(q: &HermitianMatrix, c: &CMat, p_max: f64) -> Result<CMat> {
    let m = q.dim();
    if c.nrows() != m {
        return Err(Error::DimensionMismatch {
            context: "ball qp",
            expected: m,
            got: c.nrows(),
        });
    }
    if !(p_max >= 0.0) {
        return Err(Error::invalid("p_max", "must be non-negative"));
    }
    let k = c.ncols();
    if p_max == 0.0 || c.iter().all(|z| z.norm_sqr() == 0.0) {
        return Ok(CMat::zeros(m, k));
    }
    let e = eig_hermitian(q)?;
    let lam: Vec<f64> = e.values.iter().map(|v| v.max(0.0)).collect();
    let ct = e.vectors.adjoint() * c;
    let weights: Vec<f64> = (0..m)
        .map(|i| ct.row(i).iter().map(|z| z.norm_sqr()).sum())
        .collect();
    let lam_max = lam.iter().cloned().fold(0.0, f64::max);
    let zero_tol = 1e-13 * lam_max.max(f64::MIN_POSITIVE);
    let power = |nu: f64| -> f64 {
        weights
            .iter()
            .zip(&lam)
            .map(|(w, l)| {
                let d = l + nu;
                if d <= 0.0 {
                    if *w > 0.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    }
                } else {
                    w / (d * d)
                }
            })
            .sum()
    };
    let null_energy: f64 = weights
        .iter()
        .zip(&lam)
        .filter(|(_, l)| **l <= zero_tol)
        .map(|(w, _)| *w)
        .sum();
    let total: f64 = weights.iter().sum();
    let nu = if null_energy <= 1e-24 * total && power(0.0) <= p_max {
        0.0
    } else {
        let mut lo = 0.0;
        let mut hi = (total / p_max).sqrt();
        while power(hi) > p_max {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if power(mid) > p_max {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        hi
    };
    let mut scaled = ct;
    for i in 0..m {
        let d = lam[i] + nu;
        let inv = if d > 0.0 { 1.0 / d } else { 0.0 };
        for j in 0..k {
            scaled[(i, j)] *= inv;
        }
    }
    Ok(&e.vectors * scaled)
}

/// Real-variable convex QCQP:
/// `minimize ½xᵀHx + gᵀx  s.t.  ½xᵀP_i x + q_iᵀx ≤ r_i`.
#[derive(Clone, Debug)]
pub struct RealQcqpProblem {
    pub hess: RMat,
    pub grad: RVec,
    /// `(P_i, q_i, r_i)`; `None` marks an affine constraint.
    pub constraints: Vec<(Option<RMat>, RVec, f64)>,
}

#[derive(Clone, Debug)]
pub struct RealQcqpSolution {
    pub status: QcqpStatus,
    pub x: RVec,
    pub objective: f64,
    pub kkt_residual: f64,
}

pub fn solve_real_qcqp(
    p: &RealQcqpProblem,
    tol: f64,
    start: Option<&RVec>,
) -> Result<RealQcqpSolution> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    let n = p.grad.len();
    if p.hess.nrows() != n || p.hess.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "real qcqp hessian",
            expected: n,
            got: p.hess.nrows(),
        });
    }
    for (pm, q, r) in &p.constraints {
        if q.len() != n
            || pm
                .as_ref()
                .is_some_and(|m| m.nrows() != n || m.ncols() != n)
        {
            return Err(Error::DimensionMismatch {
                context: "real qcqp constraint",
                expected: n,
                got: q.len(),
            });
        }
        if !r.is_finite() {
            return Err(Error::invalid("rhs", "non-finite right-hand side"));
        }
    }
    let real = RealQcqp::normalized(p.hess.clone(), p.grad.clone(), p.constraints.clone());
    let x0 = match start {
        Some(x) if x.len() == n => x.clone(),
        Some(x) => {
            return Err(Error::DimensionMismatch {
                context: "real qcqp start",
                expected: n,
                got: x.len(),
            })
        }
        None => RVec::zeros(n),
    };
    let out = real.solve(x0, tol);
    let objective = 0.5 * out.xi.dot(&(&p.hess * &out.xi)) + p.grad.dot(&out.xi);
    Ok(RealQcqpSolution {
        status: out.status,
        x: out.xi,
        objective,
        kkt_residual: out.kkt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::c;

    fn ls_problem() -> QcqpProblem {
        QcqpProblem {
            quad: HermitianMatrix::identity(2),
            lin: CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]),
            constraints: vec![],
        }
    }

    #[test]
    fn unconstrained_stationary_point() {
        let s = solve_qcqp(&ls_problem(), 1e-9).unwrap();
        assert_eq!(s.status, QcqpStatus::Optimal);
        assert!((s.x[0] - c(1.0, 0.0)).norm() < 1e-9);
        assert!(s.x[1].norm() < 1e-9);
    }

    #[test]
    fn ball_clips_to_half() {
        let mut p = ls_problem();
        p.constraints.push(QuadConstraint::ball(2, 0.25));
        let s = solve_qcqp(&p, 1e-9).unwrap();
        assert_eq!(s.status, QcqpStatus::Optimal);
        assert!((s.x[0] - c(0.5, 0.0)).norm() < 1e-6, "{}", s.x[0]);
        assert!(
            s.kkt_residual < 1e-6,
            "{} {}",
            s.kkt_residual,
            s.newton_steps
        );
    }

    #[test]
    fn infeasible_pair_detected() {
        let mut p = ls_problem();
        p.constraints.push(QuadConstraint::ball(2, 1.0));
        p.constraints.push(QuadConstraint::affine(
            CVec::from_vec(vec![c(-1.0, 0.0), c(0.0, 0.0)]),
            -4.0,
        ));
        let s = solve_qcqp(&p, 1e-8).unwrap();
        assert_eq!(s.status, QcqpStatus::Infeasible);
    }

    #[test]
    fn ball_qp_matches_barrier() {
        let q = HermitianMatrix::new(CMat::from_row_slice(
            2,
            2,
            &[c(2.0, 0.0), c(0.5, 0.3), c(0.5, -0.3), c(1.0, 0.0)],
        ))
        .unwrap();
        let cm = CMat::from_row_slice(2, 1, &[c(3.0, 1.0), c(-1.0, 2.0)]);
        let w = solve_ball_qp(&q, &cm, 0.5).unwrap();
        let p = QcqpProblem {
            quad: q,
            lin: cm.column(0).into_owned(),
            constraints: vec![QuadConstraint::ball(2, 0.5)],
        };
        let s = solve_qcqp(&p, 1e-10).unwrap();
        let wv: CVec = w.column(0).into_owned();
        assert!((p.objective(&wv) - s.objective).abs() < 1e-7);
        assert!((wv.norm_squared() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn ball_qp_zero_budget() {
        let w = solve_ball_qp(
            &HermitianMatrix::identity(2),
            &CMat::from_element(2, 1, c(1.0, 0.0)),
            0.0,
        )
        .unwrap();
        assert!(w.iter().all(|z| z.norm() == 0.0));
    }
}
