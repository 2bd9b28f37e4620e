//! Rank-one extraction from the lifted solution.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::sdr::SdrSolution;
use super::{restore_feasibility, restore_feasibility_joint, ElementMode, StarState};
use crate::error::Result;
use crate::fp_core::{powers_phi, quadratic_from_parts, FpState};
use crate::numerics::{eig_hermitian, CVec, HermitianMatrix};
use crate::rng::{self, Domain};

/// Relative-phase grid used to align the two sides before projection.
const PSI_GRID: usize = 32;

/// Everything needed to score a candidate coefficient pair.
#[derive(Clone, Debug)]
pub struct RecoveryContext<'a> {
    pub e: &'a [Vec<HermitianMatrix>],
    pub fp: &'a FpState,
    pub noise: f64,
    pub k_t: usize,
    pub modes: &'a [ElementMode],
    pub coupled: bool,
    pub sensing: Option<(&'a [HermitianMatrix], &'a [f64])>,
    pub randomizations: usize,
    pub rank_one_threshold: f64,
    pub seed: u64,
    pub stream: u64,
}

impl RecoveryContext<'_> {
    /// Quadratic-transform objective in coefficient form.
    pub fn objective(&self, s: &StarState) -> f64 {
        let (pt, pr) = (s.phi_t(), s.phi_r());
        let phi_of = |k: usize| if k < self.k_t { pt.clone() } else { pr.clone() };
        let (sp, tp) = powers_phi(&phi_of, self.e);
        quadratic_from_parts(&self.fp.tau, &self.fp.rho, &sp, &tp, self.noise)
    }

    /// Smallest `φ_Rᴴ D_j φ_R / rhs_j` (infinite without sensing).
    pub fn sensing_ratio(&self, s: &StarState) -> f64 {
        let Some((d, rhs)) = self.sensing else {
            return f64::INFINITY;
        };
        let pr = s.phi_r();
        d.iter()
            .zip(rhs)
            .filter(|(_, &r)| r > 0.0)
            .map(|(dj, &r)| dj.quad(&pr) / r)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug)]
pub struct Recovered {
    pub state: StarState,
    pub objective: f64,
    pub sensing_feasible: bool,
    /// The lifted solution was numerically rank one on both sides.
    pub exact: bool,
    /// Index of the winning candidate: 0 principal, 1..=G randomized,
    /// `usize::MAX` incumbent.
    pub winner: usize,
}

fn embed(x: &CVec, idx: &[usize], n: usize) -> CVec {
    let mut out = CVec::zeros(n);
    for (v, &i) in x.iter().zip(idx) {
        out[i] = *v;
    }
    out
}

fn clip_unit(x: &mut CVec) {
    for v in x.iter_mut() {
        let a = v.norm();
        if a > 1.0 {
            *v /= a;
        }
    }
}

/// Rotates `φ_R` by the grid phase that leaves the energy-splitting elements
/// closest to orthogonal, so the phase projection moves them least.
fn align(phi_t: &CVec, phi_r: &mut CVec, modes: &[ElementMode]) {
    let es: Vec<usize> = (0..modes.len())
        .filter(|&i| modes[i] == ElementMode::EnergySplit)
        .collect();
    if es.is_empty() {
        return;
    }
    let score = |psi: f64| -> f64 {
        es.iter()
            .map(|&i| {
                let (a, b) = (phi_r[i], phi_t[i]);
                a.norm() * b.norm() * (a.arg() - b.arg() + psi).sin().abs()
            })
            .sum()
    };
    let mut best = (score(0.0), 0.0);
    for g in 1..PSI_GRID {
        let psi = PI * g as f64 / PSI_GRID as f64;
        let s = score(psi);
        if s > best.0 + 1e-15 {
            best = (s, psi);
        }
    }
    if best.1 != 0.0 {
        *phi_r *= Complex64::from_polar(1.0, best.1);
    }
}

struct Factor {
    values: Vec<f64>,
    vectors: crate::numerics::CMat,
}

fn factor(v: &Option<HermitianMatrix>) -> Result<Option<Factor>> {
    let Some(v) = v else { return Ok(None) };
    let e = eig_hermitian(v)?;
    Ok(Some(Factor {
        values: e.values.iter().map(|l| l.max(0.0)).collect(),
        vectors: e.vectors,
    }))
}

fn principal(f: &Option<Factor>) -> Option<CVec> {
    f.as_ref()
        .map(|f| f.vectors.column(0) * Complex64::new(f.values[0].sqrt(), 0.0))
}

fn sample<R: rand::Rng + ?Sized>(f: &Option<Factor>, rng: &mut R) -> Option<CVec> {
    f.as_ref().map(|f| {
        let d = f.values.len();
        let r = CVec::from_iterator(
            d,
            (0..d).map(|i| rng::complex_normal(rng) * f.values[i].sqrt()),
        );
        &f.vectors * r
    })
}

/// Extracts feasible coefficients from a lifted solution.
///
/// Candidates are the principal eigenvector of each block, plus
/// `randomizations` Gaussian draws `ξ ~ CN(0, V)` when the relaxation is not
/// tight, plus the incumbent if given. Each is clipped to `|φ_n| ≤ 1`,
/// projected onto the element set and scored by the true objective;
/// sensing-feasible candidates win over infeasible ones.
pub fn recover_rank_one(
    sol: &SdrSolution,
    ctx: &RecoveryContext,
    incumbent: Option<&StarState>,
) -> Result<Recovered> {
    let n = ctx.modes.len();
    let ft = factor(&sol.v_t)?;
    let fr = factor(&sol.v_r)?;
    let exact = sol.is_rank_one(ctx.rank_one_threshold);
    let zero = CVec::zeros(n);

    let finish = |xt: Option<CVec>, xr: Option<CVec>| -> Vec<StarState> {
        let mut pt = xt.map_or_else(|| zero.clone(), |x| embed(&x, &sol.t_idx, n));
        let mut pr = xr.map_or_else(|| zero.clone(), |x| embed(&x, &sol.r_idx, n));
        clip_unit(&mut pt);
        clip_unit(&mut pr);
        if !ctx.coupled {
            return vec![restore_feasibility(&pt, &pr, ctx.modes, false)];
        }
        align(&pt, &mut pr, ctx.modes);
        vec![
            restore_feasibility(&pt, &pr, ctx.modes, true),
            restore_feasibility_joint(&pt, &pr, ctx.modes),
        ]
    };

    let mut best: Option<Recovered> = None;
    let mut consider = |state: StarState, idx: usize| {
        let objective = ctx.objective(&state);
        let sensing_feasible = ctx.sensing_ratio(&state) >= 1.0;
        let better = match &best {
            None => true,
            Some(b) => {
                (sensing_feasible && !b.sensing_feasible)
                    || (sensing_feasible == b.sensing_feasible && objective > b.objective)
            }
        };
        if better {
            best = Some(Recovered {
                state,
                objective,
                sensing_feasible,
                exact,
                winner: idx,
            });
        }
    };

    for s in finish(principal(&ft), principal(&fr)) {
        consider(s, 0);
    }
    if !exact {
        let mut g = rng::stream(ctx.seed, Domain::Randomization, ctx.stream);
        for i in 0..ctx.randomizations {
            let xt = sample(&ft, &mut g);
            let xr = sample(&fr, &mut g);
            for s in finish(xt, xr) {
                consider(s, i + 1);
            }
        }
    }
    if let Some(inc) = incumbent {
        consider(inc.clone(), usize::MAX);
    }
    Ok(best.expect("at least one candidate"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SdpStatus;
    use crate::star_coeffs::sdr::SdrSolution;

    fn ctx<'a>(
        e: &'a [Vec<HermitianMatrix>],
        fp: &'a FpState,
        modes: &'a [ElementMode],
    ) -> RecoveryContext<'a> {
        RecoveryContext {
            e,
            fp,
            noise: 1.0,
            k_t: 1,
            modes,
            coupled: true,
            sensing: None,
            randomizations: 50,
            rank_one_threshold: 1e-6,
            seed: 3,
            stream: 0,
        }
    }

    #[test]
    fn rank_one_input_recovers_vector() {
        let phi = CVec::from_vec(vec![
            Complex64::from_polar(1.0, 0.3),
            Complex64::from_polar(1.0, -1.2),
        ]);
        let v = HermitianMatrix::outer(&phi);
        let sol = SdrSolution {
            t_idx: vec![0, 1],
            r_idx: vec![],
            v_t: Some(v),
            v_r: None,
            z: vec![0.0],
            rank_ratio: (0.0, 0.0),
            objective: 0.0,
            status: SdpStatus::Optimal,
            gap: 0.0,
        };
        let e = vec![vec![HermitianMatrix::outer(&phi)]];
        let fp = FpState {
            tau: vec![1.0],
            rho: vec![0.1],
        };
        let modes = vec![ElementMode::TransmitOnly; 2];
        let r = recover_rank_one(&sol, &ctx(&e, &fp, &modes), None).unwrap();
        assert!(r.exact);
        let got = r.state.phi_t();
        let overlap = got.dotc(&phi).norm() / phi.norm_squared();
        assert!((overlap - 1.0).abs() < 1e-9);
    }
}
