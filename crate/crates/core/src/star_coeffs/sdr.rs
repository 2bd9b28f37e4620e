//! Lifted coefficient subproblem.
//!
//! With `V_a = φ_a φ_aᴴ` and auxiliary `z_k ≤ √tr(E_{k,k} V_a)`:
//!
//! ```text
//! maximize   Σ_k 2ρ_k √(1+τ_k) z_k − Σ_k tr(C_k V_a)
//! subject to [tr(E_{k,k} V_a)  z_k ; z_k  1] ⪰ 0
//!            diag(V_T) + diag(V_R) ≤ 1
//!            tr(D_j V_R) ≥ δ N_s σ²_ns / |α_j|²     (preparation stage)
//!            V_T, V_R ⪰ 0
//! ```
//!
//! Each 2×2 LMI is a PSD block tied to `V_a` by an affine equality on its
//! `(0,0)` entry, scaled by `ζ_k = √‖E_{k,k}‖_F`.

use std::f64::consts::LN_2;

use super::ElementMode;
use crate::error::{Error, Result};
use crate::fp_core::FpState;
use crate::numerics::{
    eig_hermitian, solve_sdp_with, BlockTerm, HermitianMatrix, SdpOptions, SdpProblem, SdpStatus,
    Sense, SymTerm,
};

/// Data of one coefficient subproblem.
#[derive(Clone, Debug)]
pub struct SdrInput<'a> {
    /// `E[k][h]` for every user pair, `N×N`.
    pub e: &'a [Vec<HermitianMatrix>],
    pub fp: &'a FpState,
    pub noise: f64,
    /// Users `k ≥ k_t` see the reflection side.
    pub k_t: usize,
    pub modes: &'a [ElementMode],
    /// `(D_j, rhs_j)` per sensed user.
    pub sensing: Option<(&'a [HermitianMatrix], &'a [f64])>,
}

#[derive(Clone, Debug)]
pub struct SdrSolution {
    /// Element indices spanned by `V_T` and `V_R`.
    pub t_idx: Vec<usize>,
    pub r_idx: Vec<usize>,
    pub v_t: Option<HermitianMatrix>,
    pub v_r: Option<HermitianMatrix>,
    pub z: Vec<f64>,
    /// `λ₂/λ₁` of each lifted block (0 for an absent block).
    pub rank_ratio: (f64, f64),
    /// Relaxed optimum in rate units, an upper bound on the coefficient-form
    /// quadratic-transform objective over the feasible set.
    pub objective: f64,
    pub status: SdpStatus,
    pub gap: f64,
}

impl SdrSolution {
    pub fn is_rank_one(&self, threshold: f64) -> bool {
        self.rank_ratio.0 <= threshold && self.rank_ratio.1 <= threshold
    }
}

fn side_indices(modes: &[ElementMode], transmit: bool) -> Vec<usize> {
    (0..modes.len())
        .filter(|&i| {
            if transmit {
                modes[i].transmits()
            } else {
                modes[i].reflects()
            }
        })
        .collect()
}

fn rank_ratio(v: &Option<HermitianMatrix>) -> Result<f64> {
    let Some(v) = v else { return Ok(0.0) };
    let e = eig_hermitian(v)?;
    if e.values[0] <= 0.0 {
        return Ok(0.0);
    }
    Ok(e.values.get(1).map_or(0.0, |l| l.max(0.0) / e.values[0]))
}

/// Objective constant so that the relaxed value is in rate units.
fn constant(fp: &FpState, noise: f64) -> f64 {
    fp.tau
        .iter()
        .zip(&fp.rho)
        .map(|(t, r)| (1.0 + t).log2() - (t + r * r * noise) / LN_2)
        .sum()
}

struct Layout {
    problem: SdpProblem,
    t_idx: Vec<usize>,
    r_idx: Vec<usize>,
    block_t: Option<usize>,
    block_r: Option<usize>,
    z_blocks: Vec<Option<(usize, f64)>>,
}

fn build(inp: &SdrInput) -> Layout {
    let k = inp.e.len();
    let t_idx = side_indices(inp.modes, true);
    let r_idx = side_indices(inp.modes, false);
    let mut p = SdpProblem::default();
    let block_t = (!t_idx.is_empty()).then(|| p.add_block(t_idx.len()));
    let block_r = (!r_idx.is_empty()).then(|| p.add_block(r_idx.len()));
    let side = |u: usize| -> (Option<usize>, &[usize]) {
        if u < inp.k_t {
            (block_t, &t_idx)
        } else {
            (block_r, &r_idx)
        }
    };

    let mut z_blocks = vec![None; k];
    for u in 0..k {
        let (Some(b), idx) = side(u) else { continue };
        let rho = inp.fp.rho[u];
        let c = inp.e[u]
            .iter()
            .fold(HermitianMatrix::zeros(inp.e[u][0].dim()), |acc, m| {
                acc.add(m)
            })
            .scale(rho * rho)
            .principal_submatrix(idx);
        p.objective
            .push(BlockTerm::new(b, SymTerm::dense(&c.scale(-1.0))));
        let weight = 2.0 * rho * (1.0 + inp.fp.tau[u]).sqrt();
        if weight <= 0.0 {
            continue;
        }
        let ekk = inp.e[u][u].principal_submatrix(idx);
        let zeta = ekk.as_matrix().norm().sqrt();
        if zeta == 0.0 {
            continue;
        }
        let zb = p.add_block(2);
        p.objective
            .push(BlockTerm::new(zb, SymTerm::re_entry(0, 1, weight * zeta)));
        p.add_constraint(
            vec![
                BlockTerm::new(zb, SymTerm::diag_entry(0, 1.0)),
                BlockTerm::new(b, SymTerm::dense(&ekk.scale(-1.0 / (zeta * zeta)))),
            ],
            Sense::Eq,
            0.0,
        );
        p.add_constraint(
            vec![BlockTerm::new(zb, SymTerm::diag_entry(1, 1.0))],
            Sense::Eq,
            1.0,
        );
        z_blocks[u] = Some((zb, zeta));
    }

    for n in 0..inp.modes.len() {
        let mut terms = Vec::new();
        if let (Some(b), Some(pos)) = (block_t, t_idx.iter().position(|&i| i == n)) {
            terms.push(BlockTerm::new(b, SymTerm::diag_entry(pos, 1.0)));
        }
        if let (Some(b), Some(pos)) = (block_r, r_idx.iter().position(|&i| i == n)) {
            terms.push(BlockTerm::new(b, SymTerm::diag_entry(pos, 1.0)));
        }
        if !terms.is_empty() {
            p.add_constraint(terms, Sense::Le, 1.0);
        }
    }

    if let (Some((d, rhs)), Some(b)) = (inp.sensing, block_r) {
        for (dj, &r) in d.iter().zip(rhs) {
            if r > 0.0 {
                let term = dj.principal_submatrix(&r_idx).scale(1.0 / r);
                p.add_constraint(
                    vec![BlockTerm::new(b, SymTerm::dense(&term))],
                    Sense::Ge,
                    1.0,
                );
            }
        }
    }

    Layout {
        problem: p,
        t_idx,
        r_idx,
        block_t,
        block_r,
        z_blocks,
    }
}

/// Largest `tr(D V)` over `V ⪰ 0` with unit-bounded diagonal.
fn max_sensing_trace(d: &HermitianMatrix, opts: &SdpOptions) -> Result<f64> {
    let mut p = SdpProblem::default();
    let b = p.add_block(d.dim());
    p.objective.push(BlockTerm::new(b, SymTerm::dense(d)));
    for i in 0..d.dim() {
        p.add_constraint(
            vec![BlockTerm::new(b, SymTerm::diag_entry(i, 1.0))],
            Sense::Le,
            1.0,
        );
    }
    Ok(solve_sdp_with(&p, opts)?.primal_objective)
}

/// Solves the relaxed coefficient subproblem.
///
/// Returns [`Error::SensingInfeasible`] with the largest reachable trace when
/// a sensing requirement cannot be met by any relaxed point.
pub fn solve_star_sdr(inp: &SdrInput, opts: &SdpOptions) -> Result<SdrSolution> {
    let k = inp.e.len();
    if inp.fp.tau.len() != k || inp.fp.rho.len() != k {
        return Err(Error::DimensionMismatch {
            context: "fp state vs users",
            expected: k,
            got: inp.fp.tau.len(),
        });
    }
    let lay = build(inp);
    let sol = solve_sdp_with(&lay.problem, opts)?;
    if sol.status == SdpStatus::Infeasible {
        if let Some((d, rhs)) = inp.sensing {
            for (j, (dj, &r)) in d.iter().zip(rhs).enumerate() {
                let sub = dj.principal_submatrix(&lay.r_idx);
                let best = if lay.r_idx.is_empty() {
                    0.0
                } else {
                    max_sensing_trace(&sub, opts)?
                };
                if best < r {
                    return Err(Error::SensingInfeasible {
                        user: j,
                        achievable: best,
                        required: r,
                    });
                }
            }
        }
        return Err(Error::Numerical {
            context: "coefficient relaxation",
            reason: "solver reported infeasibility".into(),
        });
    }
    let v_t = lay.block_t.map(|b| sol.blocks[b].clone());
    let v_r = lay.block_r.map(|b| sol.blocks[b].clone());
    let z = lay
        .z_blocks
        .iter()
        .map(|zb| zb.map_or(0.0, |(b, zeta)| sol.blocks[b][(0, 1)].re * zeta))
        .collect();
    let rank_ratio = (rank_ratio(&v_t)?, rank_ratio(&v_r)?);
    Ok(SdrSolution {
        t_idx: lay.t_idx,
        r_idx: lay.r_idx,
        v_t,
        v_r,
        z,
        rank_ratio,
        objective: constant(inp.fp, inp.noise) + sol.primal_objective / LN_2,
        status: sol.status,
        gap: sol.gap,
    })
}
