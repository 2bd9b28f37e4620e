//! Block-diagonal complex Hermitian SDP:
//!
//! ```text
//! maximize   Σ_b <C_b, X_b>
//! subject to Σ_b <A_ib, X_b> (= | <= | >=) r_i,   X_b ⪰ 0
//! ```
//!
//! with `<A, X> = Re tr(A X)`. Linear matrix inequalities are written as PSD
//! blocks tied to the other variables by affine equalities. Scalar
//! nonnegative variables are 1x1 blocks.

use nalgebra::Cholesky;

use super::{eig_hermitian, CMat, Complex64, HermitianMatrix, RMat, RVec};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub enum SymTerm {
    Dense(CMat),
    /// Non-zero entries `(row, col, value)` of a Hermitian matrix; both
    /// triangles must be listed.
    Sparse(Vec<(usize, usize, Complex64)>),
}

impl SymTerm {
    /// `<A, X> = v X_ii`.
    pub fn diag_entry(i: usize, v: f64) -> Self {
        SymTerm::Sparse(vec![(i, i, Complex64::new(v, 0.0))])
    }

    /// `<A, X> = v Re X_ij`.
    pub fn re_entry(i: usize, j: usize, v: f64) -> Self {
        if i == j {
            return Self::diag_entry(i, v);
        }
        let h = Complex64::new(0.5 * v, 0.0);
        SymTerm::Sparse(vec![(i, j, h), (j, i, h)])
    }

    pub fn dense(h: &HermitianMatrix) -> Self {
        SymTerm::Dense(h.as_matrix().clone())
    }

    /// `Re tr(A X)`.
    pub fn inner(&self, x: &CMat) -> f64 {
        match self {
            SymTerm::Dense(a) => super::re_trace_product(a, x),
            SymTerm::Sparse(es) => es
                .iter()
                .map(|&(r, c, v)| {
                    let xv = x[(c, r)];
                    v.re * xv.re - v.im * xv.im
                })
                .sum(),
        }
    }

    fn add_scaled_to(&self, acc: &mut CMat, s: f64) {
        let sc = Complex64::new(s, 0.0);
        match self {
            SymTerm::Dense(a) => *acc += a * sc,
            SymTerm::Sparse(es) => {
                for &(r, c, v) in es {
                    acc[(r, c)] += v * sc;
                }
            }
        }
    }

    fn frob_sq(&self) -> f64 {
        match self {
            SymTerm::Dense(a) => a.iter().map(|z| z.norm_sqr()).sum(),
            SymTerm::Sparse(es) => es.iter().map(|(_, _, v)| v.norm_sqr()).sum(),
        }
    }

    fn scaled(&self, s: f64) -> Self {
        let sc = Complex64::new(s, 0.0);
        match self {
            SymTerm::Dense(a) => SymTerm::Dense(a * sc),
            SymTerm::Sparse(es) => {
                SymTerm::Sparse(es.iter().map(|&(r, c, v)| (r, c, v * sc)).collect())
            }
        }
    }

    fn max_index(&self) -> usize {
        match self {
            SymTerm::Dense(a) => a.nrows().max(a.ncols()),
            SymTerm::Sparse(es) => es.iter().map(|&(r, c, _)| r.max(c) + 1).max().unwrap_or(0),
        }
    }

    /// `X A Zi` for dense `X`, `Zi`.
    fn sandwich(&self, x: &CMat, zi: &CMat) -> CMat {
        match self {
            SymTerm::Dense(a) => x * a * zi,
            SymTerm::Sparse(es) => {
                let n = x.nrows();
                let mut out = CMat::zeros(n, n);
                for &(r, c, v) in es {
                    for i in 0..n {
                        let xv = x[(i, r)] * v;
                        if xv == Complex64::new(0.0, 0.0) {
                            continue;
                        }
                        for j in 0..n {
                            out[(i, j)] += xv * zi[(c, j)];
                        }
                    }
                }
                out
            }
        }
    }

    fn embedded(&self, n: usize) -> SymTerm {
        let h = Complex64::new(0.5, 0.0);
        match self {
            SymTerm::Dense(a) => {
                let e = super::real_embedding(a);
                SymTerm::Dense(e.map(|x| Complex64::new(x, 0.0)) * h)
            }
            SymTerm::Sparse(es) => {
                let mut out = Vec::with_capacity(es.len() * 4);
                for &(r, c, v) in es {
                    out.push((r, c, Complex64::new(0.5 * v.re, 0.0)));
                    out.push((r + n, c + n, Complex64::new(0.5 * v.re, 0.0)));
                    if v.im != 0.0 {
                        out.push((r, c + n, Complex64::new(-0.5 * v.im, 0.0)));
                        out.push((r + n, c, Complex64::new(0.5 * v.im, 0.0)));
                    }
                }
                SymTerm::Sparse(out)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct BlockTerm {
    pub block: usize,
    pub mat: SymTerm,
}

impl BlockTerm {
    pub fn new(block: usize, mat: SymTerm) -> Self {
        Self { block, mat }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Eq,
    Le,
    Ge,
}

#[derive(Clone, Debug)]
pub struct AffineConstraint {
    pub terms: Vec<BlockTerm>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Maximization problem over PSD blocks.
#[derive(Clone, Debug, Default)]
pub struct SdpProblem {
    pub blocks: Vec<usize>,
    pub objective: Vec<BlockTerm>,
    pub constraints: Vec<AffineConstraint>,
}

impl SdpProblem {
    pub fn add_block(&mut self, dim: usize) -> usize {
        self.blocks.push(dim);
        self.blocks.len() - 1
    }

    pub fn add_constraint(&mut self, terms: Vec<BlockTerm>, sense: Sense, rhs: f64) {
        self.constraints
            .push(AffineConstraint { terms, sense, rhs });
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks.iter().any(|&d| d == 0) {
            return Err(Error::invalid("blocks", "zero-sized block"));
        }
        let check = |t: &BlockTerm| -> Result<()> {
            let dim = *self
                .blocks
                .get(t.block)
                .ok_or_else(|| Error::invalid("terms", format!("undeclared block {}", t.block)))?;
            if t.mat.max_index() > dim {
                return Err(Error::DimensionMismatch {
                    context: "sdp term",
                    expected: dim,
                    got: t.mat.max_index(),
                });
            }
            if let SymTerm::Dense(a) = &t.mat {
                if a.nrows() != dim || a.ncols() != dim {
                    return Err(Error::DimensionMismatch {
                        context: "sdp dense term",
                        expected: dim,
                        got: a.nrows(),
                    });
                }
                if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::invalid("terms", "non-finite coefficient"));
                }
            }
            Ok(())
        };
        for t in &self.objective {
            check(t)?;
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(Error::invalid("rhs", "non-finite right-hand side"));
            }
            for t in &c.terms {
                check(t)?;
            }
        }
        Ok(())
    }

    /// Equivalent real-symmetric problem with every block doubled.
    pub fn real_embedded(&self) -> SdpProblem {
        let emb = |t: &BlockTerm| BlockTerm::new(t.block, t.mat.embedded(self.blocks[t.block]));
        SdpProblem {
            blocks: self.blocks.iter().map(|d| 2 * d).collect(),
            objective: self.objective.iter().map(emb).collect(),
            constraints: self
                .constraints
                .iter()
                .map(|c| AffineConstraint {
                    terms: c.terms.iter().map(emb).collect(),
                    sense: c.sense,
                    rhs: c.rhs,
                })
                .collect(),
        }
    }

    /// Objective value at the given blocks.
    pub fn objective_value(&self, x: &[HermitianMatrix]) -> f64 {
        self.objective
            .iter()
            .map(|t| t.mat.inner(x[t.block].as_matrix()))
            .sum()
    }

    /// Largest violation of any affine constraint at the given blocks.
    pub fn max_violation(&self, x: &[HermitianMatrix]) -> f64 {
        self.constraints
            .iter()
            .map(|c| {
                let lhs: f64 = c
                    .terms
                    .iter()
                    .map(|t| t.mat.inner(x[t.block].as_matrix()))
                    .sum();
                match c.sense {
                    Sense::Eq => (lhs - c.rhs).abs(),
                    Sense::Le => (lhs - c.rhs).max(0.0),
                    Sense::Ge => (c.rhs - lhs).max(0.0),
                }
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdpMethod {
    InteriorPoint,
    Admm,
}

#[derive(Clone, Debug)]
pub struct SdpOptions {
    pub tol: f64,
    pub max_iter_ipm: usize,
    pub max_iter_admm: usize,
    pub real_embedding: bool,
    pub admm_fallback: bool,
    pub force_admm: bool,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter_ipm: 200,
            max_iter_admm: 5000,
            real_embedding: false,
            admm_fallback: true,
            force_admm: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub method: SdpMethod,
    pub blocks: Vec<HermitianMatrix>,
    /// Primal objective (maximization sense).
    pub primal_objective: f64,
    /// Dual bound (maximization sense).
    pub dual_objective: f64,
    /// `|p - d| / (1 + |p| + |d|)` on the internally scaled problem.
    pub gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub iterations: usize,
}

pub fn solve_sdp(p: &SdpProblem, tol: f64) -> Result<SdpSolution> {
    solve_sdp_with(
        p,
        &SdpOptions {
            tol,
            ..SdpOptions::default()
        },
    )
}

pub fn solve_sdp_with(p: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    p.validate()?;
    if opts.real_embedding {
        let emb = p.real_embedded();
        let inner = SdpOptions {
            real_embedding: false,
            ..opts.clone()
        };
        let mut sol = solve_sdp_with(&emb, &inner)?;
        sol.blocks = sol
            .blocks
            .iter()
            .zip(&p.blocks)
            .map(|(x, &n)| unembed(x.as_matrix(), n))
            .collect();
        return Ok(sol);
    }

    let std = StdForm::from_problem(p)?;
    let raw = if opts.force_admm {
        admm(&std, opts, None)?
    } else {
        match ipm(&std, opts) {
            Ok(r) if r.status == SdpStatus::MaxIter && opts.admm_fallback => {
                let warm = (r.x.clone(), r.y.clone(), r.z.clone());
                let a = admm(&std, opts, Some(warm))?;
                if a.status == SdpStatus::Optimal || a.score() < r.score() {
                    a
                } else {
                    r
                }
            }
            Ok(r) => r,
            Err(_) if opts.admm_fallback => admm(&std, opts, None)?,
            Err(e) => return Err(e),
        }
    };
    Ok(std.finish(p, raw))
}

fn unembed(x: &CMat, n: usize) -> HermitianMatrix {
    let m = CMat::from_fn(n, n, |i, j| {
        let re = 0.5 * (x[(i, j)].re + x[(i + n, j + n)].re);
        let im = 0.5 * (x[(i + n, j)].re - x[(i, j + n)].re);
        Complex64::new(re, im)
    });
    HermitianMatrix::from_hermitian_part(&m)
}

struct StdForm {
    dims: Vec<usize>,
    n_user_blocks: usize,
    cost: Vec<CMat>,
    rows: Vec<Vec<(usize, SymTerm)>>,
    b: RVec,
    obj_scale: f64,
}

struct Raw {
    x: Vec<CMat>,
    y: RVec,
    z: Vec<CMat>,
    status: SdpStatus,
    method: SdpMethod,
    iterations: usize,
    dobj: f64,
    pinf: f64,
    dinf: f64,
    gap: f64,
}

impl Raw {
    fn score(&self) -> f64 {
        self.pinf.max(self.dinf).max(self.gap)
    }
}

impl StdForm {
    fn from_problem(p: &SdpProblem) -> Result<Self> {
        let mut dims = p.blocks.clone();
        let n_user_blocks = dims.len();
        let mut rows = Vec::with_capacity(p.constraints.len());
        let mut b = Vec::with_capacity(p.constraints.len());
        for c in &p.constraints {
            let mut row: Vec<(usize, SymTerm)> =
                c.terms.iter().map(|t| (t.block, t.mat.clone())).collect();
            match c.sense {
                Sense::Eq => {}
                Sense::Le => {
                    dims.push(1);
                    row.push((dims.len() - 1, SymTerm::diag_entry(0, 1.0)));
                }
                Sense::Ge => {
                    dims.push(1);
                    row.push((dims.len() - 1, SymTerm::diag_entry(0, -1.0)));
                }
            }
            let norm: f64 = row.iter().map(|(_, t)| t.frob_sq()).sum::<f64>().sqrt();
            if norm == 0.0 {
                if c.rhs.abs() > 0.0 {
                    return Err(Error::invalid(
                        "constraints",
                        "empty constraint with non-zero rhs",
                    ));
                }
                continue;
            }
            rows.push(
                row.into_iter()
                    .map(|(blk, t)| (blk, t.scaled(1.0 / norm)))
                    .collect(),
            );
            b.push(c.rhs / norm);
        }
        let mut cost: Vec<CMat> = dims.iter().map(|&d| CMat::zeros(d, d)).collect();
        for t in &p.objective {
            t.mat.add_scaled_to(&mut cost[t.block], -1.0);
        }
        let cnorm = cost
            .iter()
            .map(super::fro)
            .map(|f| f * f)
            .sum::<f64>()
            .sqrt();
        let obj_scale = if cnorm > 0.0 { cnorm } else { 1.0 };
        for m in cost.iter_mut() {
            *m /= Complex64::new(obj_scale, 0.0);
        }
        Ok(Self {
            dims,
            n_user_blocks,
            cost,
            rows,
            b: RVec::from_vec(b),
            obj_scale,
        })
    }

    fn a_op(&self, x: &[CMat]) -> RVec {
        RVec::from_iterator(
            self.rows.len(),
            self.rows
                .iter()
                .map(|row| row.iter().map(|(blk, t)| t.inner(&x[*blk])).sum::<f64>()),
        )
    }

    fn at_op(&self, y: &RVec) -> Vec<CMat> {
        let mut out: Vec<CMat> = self.dims.iter().map(|&d| CMat::zeros(d, d)).collect();
        for (row, &yi) in self.rows.iter().zip(y.iter()) {
            if yi == 0.0 {
                continue;
            }
            for (blk, t) in row {
                t.add_scaled_to(&mut out[*blk], yi);
            }
        }
        out
    }

    fn finish(&self, p: &SdpProblem, raw: Raw) -> SdpSolution {
        let blocks: Vec<HermitianMatrix> = raw
            .x
            .iter()
            .take(self.n_user_blocks)
            .map(HermitianMatrix::from_hermitian_part)
            .collect();
        let primal_objective = p.objective_value(&blocks);
        SdpSolution {
            status: raw.status,
            method: raw.method,
            blocks,
            primal_objective,
            dual_objective: -raw.dobj * self.obj_scale,
            gap: raw.gap,
            primal_infeasibility: raw.pinf,
            dual_infeasibility: raw.dinf,
            iterations: raw.iterations,
        }
    }
}

fn inner_blocks(a: &[CMat], b: &[CMat]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| super::re_trace_product(x, y))
        .sum()
}

fn norm_blocks(a: &[CMat]) -> f64 {
    a.iter()
        .map(|m| m.iter().map(|z| z.norm_sqr()).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}

fn herm(m: &CMat) -> CMat {
    let mut h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    for i in 0..h.nrows() {
        h[(i, i)].im = 0.0;
    }
    h
}

fn chol_inverse(m: &CMat) -> Option<CMat> {
    if m.nrows() == 1 {
        let v = m[(0, 0)].re;
        return (v > 0.0).then(|| CMat::from_element(1, 1, Complex64::new(1.0 / v, 0.0)));
    }
    Cholesky::new(m.clone()).map(|c| herm(&c.inverse()))
}

/// Largest `α` with `X + α dX ⪰ 0` (infinite if unbounded).
fn max_step(x: &CMat, dx: &CMat) -> f64 {
    if x.nrows() == 1 {
        let d = dx[(0, 0)].re;
        return if d < 0.0 {
            -x[(0, 0)].re / d
        } else {
            f64::INFINITY
        };
    }
    let Some(ch) = Cholesky::new(x.clone()) else {
        return 0.0;
    };
    let l = ch.l();
    let Some(m1) = l.solve_lower_triangular(dx) else {
        return 0.0;
    };
    let Some(m2) = l.solve_lower_triangular(&m1.adjoint()) else {
        return 0.0;
    };
    let w = HermitianMatrix::from_hermitian_part(&m2.adjoint());
    match eig_hermitian(&w) {
        Ok(e) => {
            let lmin = e.min();
            if lmin >= 0.0 {
                f64::INFINITY
            } else {
                -1.0 / lmin
            }
        }
        Err(_) => 0.0,
    }
}

fn ipm(s: &StdForm, opts: &SdpOptions) -> Result<Raw> {
    let m = s.rows.len();
    let n_tot: usize = s.dims.iter().sum();
    let bnorm = s.b.norm();
    let cnorm = norm_blocks(&s.cost);
    let bmax = s.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let xi_p = 10f64
        .max((n_tot as f64).sqrt())
        .max(n_tot as f64 * (1.0 + bmax) / 2.0);
    let xi_d = 10f64.max((n_tot as f64).sqrt()).max(cnorm).max(1.0);

    let mut x: Vec<CMat> = s
        .dims
        .iter()
        .map(|&d| CMat::identity(d, d) * Complex64::new(xi_p, 0.0))
        .collect();
    let mut z: Vec<CMat> = s
        .dims
        .iter()
        .map(|&d| CMat::identity(d, d) * Complex64::new(xi_d, 0.0))
        .collect();
    let mut y = RVec::zeros(m);

    let mut last = None;
    let mut stalled = 0usize;
    for it in 0..opts.max_iter_ipm {
        let ay = s.at_op(&y);
        let rp = &s.b - s.a_op(&x);
        let rd: Vec<CMat> = (0..s.dims.len())
            .map(|k| &s.cost[k] - &z[k] - &ay[k])
            .collect();
        let mu = inner_blocks(&x, &z) / n_tot as f64;
        let pobj = inner_blocks(&s.cost, &x);
        let dobj = s.b.dot(&y);
        let pinf = rp.norm() / (1.0 + bnorm);
        let dinf = norm_blocks(&rd) / (1.0 + cnorm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let snapshot = |status, x: &Vec<CMat>, y: &RVec, z: &Vec<CMat>| Raw {
            x: x.clone(),
            y: y.clone(),
            z: z.clone(),
            status,
            method: SdpMethod::InteriorPoint,
            iterations: it,
            dobj,
            pinf,
            dinf,
            gap,
        };
        if pinf <= opts.tol && dinf <= opts.tol && gap <= opts.tol {
            return Ok(snapshot(SdpStatus::Optimal, &x, &y, &z));
        }
        let ynorm = y.norm();
        if ynorm > 1e8 && dobj > 1e6 * (1.0 + pobj.abs()).min(ynorm) && pinf > opts.tol {
            return Ok(snapshot(SdpStatus::Infeasible, &x, &y, &z));
        }
        if stalled >= 8 {
            return Ok(snapshot(SdpStatus::MaxIter, &x, &y, &z));
        }

        let zinv: Vec<CMat> = z
            .iter()
            .map(|b| chol_inverse(b))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Numerical {
                context: "sdp interior point",
                reason: "dual iterate lost positive definiteness".into(),
            })?;

        // Schur complement M_ij = Re tr(A_i X A_j Z^{-1}).
        let g: Vec<Vec<(usize, CMat)>> = s
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|(blk, t)| (*blk, t.sandwich(&x[*blk], &zinv[*blk])))
                    .collect()
            })
            .collect();
        let mut schur = RMat::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                let mut acc = 0.0;
                for (bi, ti) in &s.rows[i] {
                    for (bj, gj) in &g[j] {
                        if bi == bj {
                            acc += ti.inner(gj);
                        }
                    }
                }
                schur[(i, j)] = acc;
            }
        }
        let schur = (&schur + schur.transpose()) * 0.5;
        let chol = match Cholesky::new(schur.clone()) {
            Some(c) => c,
            None => {
                let dmax = (0..m)
                    .map(|i| schur[(i, i)])
                    .fold(0.0f64, f64::max)
                    .max(1e-300);
                let mut reg = schur.clone();
                for i in 0..m {
                    reg[(i, i)] += 1e-12 * dmax;
                }
                Cholesky::new(reg).ok_or_else(|| Error::Numerical {
                    context: "sdp interior point",
                    reason: "Schur complement not positive definite".into(),
                })?
            }
        };

        let direction = |sigma: f64, corr: Option<&Vec<CMat>>| -> (Vec<CMat>, RVec, Vec<CMat>) {
            let nb = s.dims.len();
            let t: Vec<CMat> = (0..nb)
                .map(|k| &zinv[k] * Complex64::new(sigma * mu, 0.0) - &x[k])
                .collect();
            let u: Vec<CMat> = (0..nb)
                .map(|k| {
                    let mut v = &x[k] * &rd[k];
                    if let Some(cr) = corr {
                        v += &cr[k];
                    }
                    v * &zinv[k]
                })
                .collect();
            let rhs = &rp - s.a_op(&t) + s.a_op(&u);
            let dy = chol.solve(&rhs);
            let atdy = s.at_op(&dy);
            let dz: Vec<CMat> = (0..nb).map(|k| &rd[k] - &atdy[k]).collect();
            let dx: Vec<CMat> = (0..nb)
                .map(|k| {
                    let mut v = &x[k] * &dz[k];
                    if let Some(cr) = corr {
                        v += &cr[k];
                    }
                    &t[k] - herm(&(v * &zinv[k]))
                })
                .collect();
            (dx, dy, dz)
        };
        let steps = |dx: &Vec<CMat>, dz: &Vec<CMat>| -> (f64, f64) {
            let ap = x
                .iter()
                .zip(dx)
                .map(|(a, d)| max_step(a, d))
                .fold(f64::INFINITY, f64::min);
            let ad = z
                .iter()
                .zip(dz)
                .map(|(a, d)| max_step(a, d))
                .fold(f64::INFINITY, f64::min);
            (ap, ad)
        };

        let (dx_a, _dy_a, dz_a) = direction(0.0, None);
        let (ap, ad) = steps(&dx_a, &dz_a);
        let ap = ap.min(1.0);
        let ad = ad.min(1.0);
        let xa: Vec<CMat> = x
            .iter()
            .zip(&dx_a)
            .map(|(a, d)| a + d * Complex64::new(ap, 0.0))
            .collect();
        let za: Vec<CMat> = z
            .iter()
            .zip(&dz_a)
            .map(|(a, d)| a + d * Complex64::new(ad, 0.0))
            .collect();
        let mu_aff = inner_blocks(&xa, &za) / n_tot as f64;
        let sigma = if mu > 0.0 {
            (mu_aff / mu).clamp(0.0, 1.0).powi(3)
        } else {
            0.0
        };
        let corr: Vec<CMat> = dx_a.iter().zip(&dz_a).map(|(a, b)| a * b).collect();

        let (dx, dy, dz) = direction(sigma, Some(&corr));
        let (ap, ad) = steps(&dx, &dz);
        let gamma = 0.98;
        let ap = (gamma * ap).min(1.0);
        let ad = (gamma * ad).min(1.0);
        if ap < 1e-10 && ad < 1e-10 {
            stalled += 1;
        } else {
            stalled = 0;
        }
        for k in 0..s.dims.len() {
            x[k] = herm(&(&x[k] + &dx[k] * Complex64::new(ap, 0.0)));
            z[k] = herm(&(&z[k] + &dz[k] * Complex64::new(ad, 0.0)));
        }
        y += dy * ad;
        last = Some(it);
    }
    let ay = s.at_op(&y);
    let rp = &s.b - s.a_op(&x);
    let rd: Vec<CMat> = (0..s.dims.len())
        .map(|k| &s.cost[k] - &z[k] - &ay[k])
        .collect();
    let pobj = inner_blocks(&s.cost, &x);
    let dobj = s.b.dot(&y);
    Ok(Raw {
        pinf: rp.norm() / (1.0 + bnorm),
        dinf: norm_blocks(&rd) / (1.0 + cnorm),
        gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
        x,
        y,
        z,
        status: SdpStatus::MaxIter,
        method: SdpMethod::InteriorPoint,
        iterations: last.map_or(0, |i| i + 1),
        dobj,
    })
}

fn psd_split(v: &CMat) -> Result<CMat> {
    if v.nrows() == 1 {
        return Ok(CMat::from_element(
            1,
            1,
            Complex64::new(v[(0, 0)].re.max(0.0), 0.0),
        ));
    }
    let e = eig_hermitian(&HermitianMatrix::from_hermitian_part(v))?;
    let n = v.nrows();
    let mut out = CMat::zeros(n, n);
    for (k, &lam) in e.values.iter().enumerate() {
        if lam <= 0.0 {
            continue;
        }
        let u = e.vectors.column(k);
        out += (u * u.adjoint()) * Complex64::new(lam, 0.0);
    }
    Ok(out)
}

/// Dual alternating-direction augmented Lagrangian method.
fn admm(s: &StdForm, opts: &SdpOptions, warm: Option<(Vec<CMat>, RVec, Vec<CMat>)>) -> Result<Raw> {
    let m = s.rows.len();
    let nb = s.dims.len();
    let bnorm = s.b.norm();
    let cnorm = norm_blocks(&s.cost);
    let mut aat = RMat::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let mut acc = 0.0;
            for (bi, ti) in &s.rows[i] {
                for (bj, tj) in &s.rows[j] {
                    if bi == bj {
                        let mut dj = CMat::zeros(s.dims[*bj], s.dims[*bj]);
                        tj.add_scaled_to(&mut dj, 1.0);
                        acc += ti.inner(&dj);
                    }
                }
            }
            aat[(i, j)] = acc;
        }
    }
    for i in 0..m {
        aat[(i, i)] += 1e-14;
    }
    let chol = Cholesky::new(aat).ok_or_else(|| Error::Numerical {
        context: "sdp admm",
        reason: "constraint operator is rank deficient".into(),
    })?;

    let (mut x, mut y, mut z) = match warm {
        Some((x, y, z)) => (x, y, z),
        None => (
            s.dims
                .iter()
                .map(|&d| CMat::zeros(d, d))
                .collect::<Vec<_>>(),
            RVec::zeros(m),
            s.dims
                .iter()
                .map(|&d| CMat::zeros(d, d))
                .collect::<Vec<_>>(),
        ),
    };
    let mut rho = 1.0f64;
    let mut out_status = SdpStatus::MaxIter;
    let mut iters = opts.max_iter_admm;
    let (mut pinf, mut dinf, mut gap) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for it in 0..opts.max_iter_admm {
        let zc: Vec<CMat> = (0..nb).map(|k| &s.cost[k] - &z[k]).collect();
        let rhs = (&s.b - s.a_op(&x)) * rho + s.a_op(&zc);
        y = chol.solve(&rhs);
        let aty = s.at_op(&y);
        for k in 0..nb {
            let v = &s.cost[k] - &aty[k] - &x[k] * Complex64::new(rho, 0.0);
            let vp = psd_split(&v)?;
            x[k] = herm(&((&vp - &v) / Complex64::new(rho, 0.0)));
            z[k] = vp;
        }
        if it % 10 == 9 || it + 1 == opts.max_iter_admm {
            let rp = &s.b - s.a_op(&x);
            let aty = s.at_op(&y);
            let rd: Vec<CMat> = (0..nb).map(|k| &s.cost[k] - &z[k] - &aty[k]).collect();
            pinf = rp.norm() / (1.0 + bnorm);
            dinf = norm_blocks(&rd) / (1.0 + cnorm);
            let pobj = inner_blocks(&s.cost, &x);
            let dobj = s.b.dot(&y);
            gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
            if pinf <= opts.tol && dinf <= opts.tol && gap <= opts.tol {
                out_status = SdpStatus::Optimal;
                iters = it + 1;
                break;
            }
            if it % 50 == 49 {
                if pinf > 10.0 * dinf {
                    rho = (rho * 0.5).max(1e-6);
                } else if dinf > 10.0 * pinf {
                    rho = (rho * 2.0).min(1e6);
                }
            }
        }
    }
    let dobj = s.b.dot(&y);
    Ok(Raw {
        x,
        y,
        z,
        status: out_status,
        method: SdpMethod::Admm,
        iterations: iters,
        dobj,
        pinf,
        dinf,
        gap,
    })
}
