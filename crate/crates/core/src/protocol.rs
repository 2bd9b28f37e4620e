//! Two-stage slot protocol and block coordinate ascent.
//!
//! The preparation stage designs with the previous slot's angle estimates
//! under the sensing requirement and optimizes the element partition; the
//! communication stage designs with the current estimates, all elements
//! energy splitting and no sensing requirement. Each outer iteration
//! refreshes `(τ, ρ)` once and then updates the beamformer, the relaxed
//! partition and the metasurface coefficients, accepting a block only when
//! the quadratic-transform objective does not decrease.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::beamforming::{
    beamform_comm, beamform_prep_sca, matched_filter_init, restore_sensing, BeamformProblem,
    SensingConstraintData,
};
use crate::channel::{sample_channels, ChannelSet, Geometry};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::expectation::{build_d, build_e, clamp_angles, AngleStats, ExpectationSet, McSettings};
use crate::fp_core::{
    bound_rate, objective_q, powers_phi, quadratic_from_parts, update_fp, FpState,
};
use crate::metrics::{
    assnr_mc, effective_matrix, evaluate_rate_samples, sinr_from_matrix, total_rate,
    transmit_power, Coefficients, EvalSettings, StageMetrics,
};
use crate::numerics::{eig_hermitian, CMat, HermitianMatrix, SdpOptions};
use crate::partition::{binarity_gap, binarize_state, partition_sca, project_topk, BModel};
use crate::rng::{self, Domain};
use crate::star_coeffs::{
    recover_rank_one, restore_feasibility_joint, solve_star_sdr, ElementMode, RecoveryContext,
    SdrInput, StarState,
};
use crate::Stage;

/// How the element modes of a stage are chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PartitionPlan {
    /// Relaxed SCA over `N_part` energy-splitting elements, the rest
    /// transmit only.
    Optimize {
        n_part: usize,
    },
    Fixed(Vec<ElementMode>),
}

/// Constraints and variables active in one stage design.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StagePlan {
    pub stage: Stage,
    pub sensing: bool,
    pub coupled: bool,
    pub partition: PartitionPlan,
    /// Per-user rate floor in bit/s/Hz.
    pub min_rate: Option<f64>,
}

impl StagePlan {
    pub fn preparation(cfg: &SystemConfig) -> Self {
        Self {
            stage: Stage::Preparation,
            sensing: true,
            coupled: true,
            partition: PartitionPlan::Optimize {
                n_part: cfg.partition.n_part,
            },
            min_rate: None,
        }
    }

    pub fn communication(cfg: &SystemConfig) -> Self {
        Self {
            stage: Stage::Communication,
            sensing: false,
            coupled: true,
            partition: PartitionPlan::Fixed(vec![ElementMode::EnergySplit; cfg.n()]),
            min_rate: None,
        }
    }
}

/// Design plan of a whole slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotPlan {
    pub prep: StagePlan,
    /// `None` reuses the preparation design in the communication phase.
    pub comm: Option<StagePlan>,
    /// Angle spread assumed by the design statistics, radians.
    pub design_sigma: (f64, f64),
}

impl SlotPlan {
    pub fn proposed(cfg: &SystemConfig) -> Self {
        Self {
            prep: StagePlan::preparation(cfg),
            comm: Some(StagePlan::communication(cfg)),
            design_sigma: cfg.sigma_rad(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepairLog {
    pub before: f64,
    pub after: f64,
}

/// Design of one stage.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageOutcome {
    pub stage: Stage,
    /// `Σ log₂(1+γ̄_k)` at the start and after every outer iteration.
    pub trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub star: StarState,
    pub fp: FpState,
    #[serde(skip)]
    pub w: CMat,
    /// Relaxed partition before rounding.
    pub relaxed_partition: Option<Vec<f64>>,
    pub kappa: Option<f64>,
    pub repair: Option<RepairLog>,
    /// Largest duality gap reported by the coefficient relaxations.
    pub max_sdp_gap: f64,
    /// Coefficient relaxations that failed and kept the incumbent.
    pub sdp_failures: usize,
    /// Outer iterations of the coupling-relaxed warm-start run.
    pub warm_iterations: usize,
    /// Objective trace of the warm-start run, empty without one.
    pub warm_trace: Vec<f64>,
}

impl StageOutcome {
    pub fn objective(&self) -> f64 {
        self.trace.last().copied().unwrap_or(0.0)
    }

    /// Outer iterations including the warm-start run.
    pub fn total_iterations(&self) -> usize {
        self.iterations + self.warm_iterations
    }
}

/// Data shared by the blocks of one stage.
pub struct StageContext<'a> {
    pub cfg: &'a SystemConfig,
    pub ch: &'a ChannelSet,
    pub exp: &'a ExpectationSet,
    pub h1: CMat,
    pub seed: u64,
}

impl<'a> StageContext<'a> {
    pub fn new(
        cfg: &'a SystemConfig,
        ch: &'a ChannelSet,
        exp: &'a ExpectationSet,
        seed: u64,
    ) -> Self {
        Self {
            cfg,
            ch,
            exp,
            h1: ch.h1(),
            seed,
        }
    }

    fn k_t(&self) -> usize {
        self.ch.k_t()
    }

    fn effective(&self, c: &Coefficients) -> Vec<HermitianMatrix> {
        (0..self.ch.k())
            .map(|k| effective_matrix(c.for_user(self.ch, k), &self.exp.r[k], &self.h1))
            .collect()
    }

    fn e_matrices(&self, w: &CMat) -> Result<Vec<Vec<HermitianMatrix>>> {
        let cols: Vec<_> = (0..w.ncols()).map(|h| w.column(h).into_owned()).collect();
        self.exp
            .r
            .iter()
            .map(|r| cols.iter().map(|wh| build_e(r, &self.h1, wh)).collect())
            .collect()
    }

    fn d_matrices(&self, w: &CMat) -> Result<Vec<HermitianMatrix>> {
        self.exp
            .r_sense
            .iter()
            .map(|r| build_d(r, &self.h1, w))
            .collect()
    }

    fn sensing_rhs(&self) -> Vec<f64> {
        let c = self.cfg;
        vec![
            c.delta() * c.system.ns as f64 * c.sensor_noise() / c.alpha_sq();
            self.exp.r_sense.len()
        ]
    }

    fn sensing_data(&self, phi_r: &crate::numerics::CVec) -> SensingConstraintData {
        let c = self.cfg;
        SensingConstraintData::build(
            phi_r,
            &self.h1,
            &self.exp.r_sense,
            c.delta(),
            c.system.ns,
            c.sensor_noise(),
            c.alpha_sq(),
        )
    }

    fn sdp_options(&self) -> SdpOptions {
        SdpOptions {
            tol: self.cfg.solver.sdp_tol,
            max_iter_ipm: self.cfg.solver.sdp_max_iter,
            max_iter_admm: self.cfg.solver.admm_max_iter,
            ..SdpOptions::default()
        }
    }
}

/// Quadratic-transform objective in coefficient form.
fn q_phi(
    e: &[Vec<HermitianMatrix>],
    fp: &FpState,
    noise: f64,
    k_t: usize,
    c: &Coefficients,
) -> f64 {
    let phi_of = |k: usize| {
        if k < k_t {
            c.phi_t.clone()
        } else {
            c.phi_r.clone()
        }
    };
    let (s, t) = powers_phi(&phi_of, e);
    quadratic_from_parts(&fp.tau, &fp.rho, &s, &t, noise)
}

fn sensing_ratio(d: &[HermitianMatrix], rhs: &[f64], c: &Coefficients) -> f64 {
    d.iter()
        .zip(rhs)
        .filter(|(_, &r)| r > 0.0)
        .map(|(dj, &r)| dj.quad(&c.phi_r) / r)
        .fold(f64::INFINITY, f64::min)
}

/// `diag(s) E diag(s)` for real `s`.
fn scale_sym(e: &HermitianMatrix, s: &[f64]) -> HermitianMatrix {
    let m = e.as_matrix();
    let n = s.len();
    HermitianMatrix::from_hermitian_part(&CMat::from_fn(n, n, |i, j| m[(i, j)] * (s[i] * s[j])))
}

/// Smallest transmit amplitude used to freeze the blend as a diagonal
/// scaling of the latent coefficients.
const MIN_LATENT_AMPLITUDE: f64 = 1e-3;

/// Mean binarity gap at which the penalty weight stops growing.
const BINARITY_TARGET: f64 = 0.05;

const ACCEPT_SLACK: f64 = 1e-12;

struct Coefficient {
    n_part: Option<usize>,
}

impl Coefficient {
    fn coefficients(&self, latent: &StarState, b: Option<&[f64]>) -> Coefficients {
        match b {
            Some(b) => BModel::new(latent).coefficients(b),
            None => latent.coefficients(),
        }
    }
}

/// Iterate carried from a coupling-relaxed run into the coupled one.
struct WarmStart {
    latent: StarState,
    b: Option<Vec<f64>>,
    kappa: Option<f64>,
    w: CMat,
}

/// Runs the block coordinate ascent of one stage. Phase-coupled stages with
/// energy-splitting elements first run with the coupling relaxed; the result,
/// projected onto the coupled set, starts the coupled run.
pub fn run_stage(ctx: &StageContext, plan: &StagePlan) -> Result<StageOutcome> {
    let has_split = match &plan.partition {
        PartitionPlan::Optimize { n_part } => *n_part > 0,
        PartitionPlan::Fixed(modes) => modes.contains(&ElementMode::EnergySplit),
    };
    let warm_iters = ctx.cfg.solver.warm_start_iters;
    if !plan.coupled || !has_split || warm_iters == 0 {
        return run_bcd(ctx, plan, None, true, ctx.cfg.solver.bcd_max_iter).map(|(o, _)| o);
    }
    let relaxed = StagePlan {
        coupled: false,
        ..plan.clone()
    };
    let (pre, mut warm) = run_bcd(ctx, &relaxed, None, false, warm_iters)?;
    let l = &warm.latent;
    let mut latent = restore_feasibility_joint(&l.phi_t(), &l.phi_r(), &l.modes);
    latent.coupled = true;
    warm.latent = latent;
    let (mut out, _) = run_bcd(ctx, plan, Some(warm), true, ctx.cfg.solver.bcd_max_iter)?;
    out.warm_iterations = pre.iterations;
    out.warm_trace = pre.trace;
    out.max_sdp_gap = out.max_sdp_gap.max(pre.max_sdp_gap);
    out.sdp_failures += pre.sdp_failures;
    Ok(out)
}

fn run_bcd(
    ctx: &StageContext,
    plan: &StagePlan,
    warm: Option<WarmStart>,
    finalize: bool,
    max_iters: usize,
) -> Result<(StageOutcome, WarmStart)> {
    let cfg = ctx.cfg;
    let sol = &cfg.solver;
    let n = ctx.ch.n();
    let m = ctx.ch.m();
    let k_t = ctx.k_t();
    let noise = cfg.noise();
    let p_max = cfg.p_max();
    let sensing = plan.sensing && !ctx.exp.r_sense.is_empty();
    let min_sinr = plan.min_rate.map(|r| 2f64.powf(r) - 1.0);
    let rhs = if sensing {
        ctx.sensing_rhs()
    } else {
        Vec::new()
    };

    let (mut latent, mut b, n_part) = match &plan.partition {
        PartitionPlan::Optimize { n_part } if *n_part > 0 && *n_part < n => (
            StarState::initial(vec![ElementMode::EnergySplit; n], plan.coupled),
            Some(vec![*n_part as f64 / n as f64; n]),
            Some(*n_part),
        ),
        PartitionPlan::Optimize { n_part } => {
            let bits = vec![u8::from(*n_part == n); n];
            (
                StarState::initial(ElementMode::from_partition(&bits), plan.coupled),
                None,
                None,
            )
        }
        PartitionPlan::Fixed(modes) => {
            if modes.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "fixed element modes",
                    expected: n,
                    got: modes.len(),
                });
            }
            (StarState::initial(modes.clone(), plan.coupled), None, None)
        }
    };
    let mut kappa: Option<f64> = None;
    let mut w_start = None;
    if let Some(ws) = warm {
        latent = ws.latent;
        if b.is_some() {
            b = ws.b;
            kappa = ws.kappa;
        }
        w_start = Some(ws.w);
    }
    let helper = Coefficient { n_part };
    let mut coeffs = helper.coefficients(&latent, b.as_deref());
    let mut a = ctx.effective(&coeffs);
    let mut w = match w_start {
        Some(w) => w,
        None => matched_filter_init(&a, m, p_max)?,
    };
    if sensing {
        let s = ctx.sensing_data(&coeffs.phi_r);
        if !s.satisfied(&w, 0.0) {
            w = restore_sensing(&s, p_max, m, ctx.ch.k(), sol.sca_max_iter)?;
        }
    }

    let opts = ctx.sdp_options();
    let mut trace = vec![bound_rate(&w, &a, noise)];
    let mut fp = update_fp(&w, &a, noise);
    let mut converged = false;
    let mut iterations = 0;
    let mut max_gap = 0.0f64;
    let mut failures = 0usize;

    let sdr_round = |latent: &StarState,
                     b: Option<&[f64]>,
                     fp: &FpState,
                     e: &[Vec<HermitianMatrix>],
                     d: &[HermitianMatrix],
                     stream: u64|
     -> Result<Option<(StarState, f64)>> {
        // Relaxed partitions freeze the blend into per-element scalings of
        // the latent coefficients.
        let (e_s, d_s, modes): (
            Vec<Vec<HermitianMatrix>>,
            Vec<HermitianMatrix>,
            Vec<ElementMode>,
        ) = match b {
            Some(bv) => {
                let st: Vec<f64> = (0..n)
                    .map(|i| bv[i] + (1.0 - bv[i]) / latent.beta_t[i].max(MIN_LATENT_AMPLITUDE))
                    .collect();
                let e_s = e
                    .iter()
                    .enumerate()
                    .map(|(k, row)| {
                        row.iter()
                            .map(|x| scale_sym(x, if k < k_t { &st } else { bv }))
                            .collect()
                    })
                    .collect();
                let d_s = d.iter().map(|x| scale_sym(x, bv)).collect();
                (e_s, d_s, latent.modes.clone())
            }
            None => (e.to_vec(), d.to_vec(), latent.modes.clone()),
        };
        let input = SdrInput {
            e: &e_s,
            fp,
            noise,
            k_t,
            modes: &modes,
            sensing: sensing.then_some((d_s.as_slice(), rhs.as_slice())),
        };
        let relaxed = match solve_star_sdr(&input, &opts) {
            Ok(s) => s,
            Err(err) if err.is_infeasible() || matches!(err, Error::Numerical { .. }) => {
                return Ok(None)
            }
            Err(err) => return Err(err),
        };
        let rctx = RecoveryContext {
            e: &e_s,
            fp,
            noise,
            k_t,
            modes: &modes,
            coupled: plan.coupled,
            sensing: sensing.then_some((d_s.as_slice(), rhs.as_slice())),
            randomizations: sol.randomizations,
            rank_one_threshold: sol.rank_one_threshold,
            seed: ctx.seed,
            stream,
        };
        let rec = recover_rank_one(&relaxed, &rctx, Some(latent))?;
        Ok(Some((rec.state, relaxed.gap)))
    };

    let beam_round =
        |w: &CMat, a: &[HermitianMatrix], fp: &FpState, coeffs: &Coefficients| -> Result<CMat> {
            let sdata = ctx.sensing_data(&coeffs.phi_r);
            let problem = BeamformProblem {
                a,
                fp,
                noise,
                p_max,
                sensing: sensing.then_some(&sdata),
                min_sinr,
                max_iters: sol.sca_max_iter,
                tol: sol.sca_tol,
            };
            let q0 = objective_q(fp, w, a, noise);
            let was_ok = !sensing || sdata.satisfied(w, 0.0);
            let out = if sensing {
                beamform_prep_sca(&problem, w)?
            } else {
                beamform_comm(&problem, w)?
            };
            let now_ok = !sensing || sdata.satisfied(&out.w, 0.0);
            let q1 = objective_q(fp, &out.w, a, noise);
            let accept = if was_ok {
                now_ok && q1 >= q0 - ACCEPT_SLACK * q0.abs().max(1.0)
            } else {
                now_ok
            };
            Ok(if accept { out.w } else { w.clone() })
        };

    for it in 0..max_iters {
        iterations = it + 1;
        fp = update_fp(&w, &a, noise);

        w = beam_round(&w, &a, &fp, &coeffs)?;
        let e = ctx.e_matrices(&w)?;
        let d = if sensing {
            ctx.d_matrices(&w)?
        } else {
            Vec::new()
        };
        let mut q = q_phi(&e, &fp, noise, k_t, &coeffs);

        if let (Some(bv), Some(np)) = (b.as_mut(), helper.n_part) {
            let bm = BModel::new(&latent);
            let model = bm.rate_model(&e, &fp, noise, k_t);
            let forms = bm.sensing_forms(&d, &rhs);
            let bvec = crate::numerics::RVec::from_column_slice(bv);
            let k_now = *kappa.get_or_insert_with(|| 0.1 * model.objective(&bvec).abs());
            let out = partition_sca(&model, &forms, k_now, bv, np, sol.sca_max_iter, sol.sca_tol)?;
            let base = model.objective(&bvec);
            let mut step = 1.0;
            for _ in 0..4 {
                let cand: Vec<f64> = bv
                    .iter()
                    .zip(&out.b)
                    .map(|(x, y)| x + step * (y - x))
                    .collect();
                let cv = crate::numerics::RVec::from_column_slice(&cand);
                let feasible = forms.iter().all(|f| f.form.eval(&cv) >= f.rhs);
                let r = model.objective(&cv);
                if feasible && r >= base - ACCEPT_SLACK * base.abs().max(1.0) {
                    *bv = cand;
                    q = r;
                    break;
                }
                step *= 0.5;
            }
            coeffs = helper.coefficients(&latent, Some(bv));
        }

        if let Some((cand, gap)) = sdr_round(
            &latent,
            b.as_deref(),
            &fp,
            &e,
            &d,
            rng::index(&[plan.stage as u64, it as u64]),
        )? {
            max_gap = max_gap.max(gap);
            let c_new = helper.coefficients(&cand, b.as_deref());
            let q_new = q_phi(&e, &fp, noise, k_t, &c_new);
            let ok = !sensing || sensing_ratio(&d, &rhs, &c_new) >= 1.0;
            if ok && q_new >= q - ACCEPT_SLACK * q.abs().max(1.0) {
                latent = cand;
                coeffs = c_new;
            }
        } else {
            failures += 1;
        }

        a = ctx.effective(&coeffs);
        let f = bound_rate(&w, &a, noise);
        let prev = *trace.last().expect("trace starts non-empty");
        trace.push(f);
        if (f - prev).abs() / prev.abs().max(1e-12) < sol.bcd_tol {
            converged = true;
            break;
        }
        if let (Some(k), Some(bv)) = (kappa.as_mut(), b.as_ref()) {
            if binarity_gap(bv) >= BINARITY_TARGET {
                *k *= 2.0;
            }
        }
    }

    let mut repair = None;
    let relaxed_partition = b.clone();
    let carry = WarmStart {
        latent: latent.clone(),
        b: b.clone(),
        kappa,
        w: w.clone(),
    };
    if !finalize {
        b = None;
    }
    if let (Some(bv), Some(np)) = (b.as_ref(), helper.n_part) {
        let bits = project_topk(bv, np)?;
        let mut state = binarize_state(&latent, &bits);
        coeffs = state.coefficients();
        a = ctx.effective(&coeffs);
        let before = bound_rate(&w, &a, noise);
        fp = update_fp(&w, &a, noise);
        let e = ctx.e_matrices(&w)?;
        let d = if sensing {
            ctx.d_matrices(&w)?
        } else {
            Vec::new()
        };
        let q = q_phi(&e, &fp, noise, k_t, &coeffs);
        if let Some((cand, gap)) = sdr_round(
            &state,
            None,
            &fp,
            &e,
            &d,
            rng::index(&[plan.stage as u64, 1 << 20]),
        )? {
            max_gap = max_gap.max(gap);
            let c_new = cand.coefficients();
            let ok = !sensing || sensing_ratio(&d, &rhs, &c_new) >= 1.0;
            if ok && q_phi(&e, &fp, noise, k_t, &c_new) >= q - ACCEPT_SLACK * q.abs().max(1.0) {
                state = cand;
                coeffs = c_new;
            }
        } else {
            failures += 1;
        }
        a = ctx.effective(&coeffs);
        if sensing && !ctx.sensing_data(&coeffs.phi_r).satisfied(&w, 0.0) {
            w = restore_sensing(
                &ctx.sensing_data(&coeffs.phi_r),
                p_max,
                m,
                ctx.ch.k(),
                sol.sca_max_iter,
            )?;
        }
        w = beam_round(&w, &a, &update_fp(&w, &a, noise), &coeffs)?;
        fp = update_fp(&w, &a, noise);
        repair = Some(RepairLog {
            before,
            after: bound_rate(&w, &a, noise),
        });
        latent = state;
    }

    let outcome = StageOutcome {
        stage: plan.stage,
        trace,
        converged,
        iterations,
        star: latent,
        fp,
        w,
        relaxed_partition,
        kappa,
        repair,
        max_sdp_gap: max_gap,
        sdp_failures: failures,
        warm_iterations: 0,
        warm_trace: Vec::new(),
    };
    Ok((outcome, carry))
}

/// Angle estimates `nominal + σ z` produced at the end of slot `t − 1`;
/// `z` is shared across σ and schemes for a given seed.
pub fn angle_estimates(ch: &ChannelSet, sigma: (f64, f64), seed: u64, t: u64) -> Vec<(f64, f64)> {
    ch.outdoor_angles
        .iter()
        .enumerate()
        .map(|(j, &(phi, varphi))| {
            let mut g = rng::stream(seed, Domain::AngleEstimate, rng::index(&[t, j as u64]));
            let (z1, z2) = (rng::normal(&mut g), rng::normal(&mut g));
            clamp_angles(phi + sigma.0 * z1, varphi + sigma.1 * z2)
        })
        .collect()
}

/// Estimates used by each stage of slot `t`: the preparation stage reuses
/// the previous slot's estimates, the communication stage the current ones.
pub fn stage_estimates(
    ch: &ChannelSet,
    sigma: (f64, f64),
    seed: u64,
    t: u64,
) -> [Vec<(f64, f64)>; 2] {
    [
        angle_estimates(ch, sigma, seed, t),
        angle_estimates(ch, sigma, seed, t + 1),
    ]
}

/// Per-instance upper bound `K log₂(1 + P λ_max(R_k) ‖H₁‖²_F / σ²)` on the
/// sum rate of any feasible design.
pub fn rate_upper_bound(
    ch: &ChannelSet,
    exp: &ExpectationSet,
    p_max: f64,
    noise: f64,
) -> Result<f64> {
    let h1 = ch.h1();
    let h_norm = h1.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let mut best = 0.0f64;
    for r in &exp.r {
        best = best.max(eig_hermitian(r)?.max());
    }
    Ok(exp.r.len() as f64 * (1.0 + p_max * best * h_norm / noise).log2())
}

/// Constraint audit of a finished slot.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub energy_residual: f64,
    /// Largest `|cos(θ_R − θ_T)|` on energy-splitting elements.
    pub coupling_residual: f64,
    pub coupling_enforced: bool,
    pub power_ok: bool,
    /// Smallest preparation ASSNR over `δ` (infinite without sensed users).
    pub sensing_margin: f64,
    pub sensing_enforced: bool,
    pub feasible: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlotResult {
    pub seed: u64,
    pub converged: bool,
    pub prep: StageOutcome,
    /// Communication design; equal to `prep` for single-stage plans.
    pub comm: StageOutcome,
    pub single_stage: bool,
    pub prep_metrics: StageMetrics,
    pub comm_metrics: StageMetrics,
    pub rate_total: f64,
    pub rate_prep: f64,
    pub rate_comm: f64,
    pub assnr: Vec<f64>,
    pub power: f64,
    pub estimates: [Vec<(f64, f64)>; 2],
    pub feasibility: FeasibilityReport,
    pub wall_ms: f64,
}

impl SlotResult {
    pub fn iterations(&self) -> usize {
        if self.single_stage {
            self.prep.total_iterations()
        } else {
            self.prep
                .total_iterations()
                .max(self.comm.total_iterations())
        }
    }

    pub fn assnr_min(&self) -> f64 {
        self.assnr.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn stage_metrics(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    exp: &ExpectationSet,
    out: &StageOutcome,
    means: &[(f64, f64)],
    seed: u64,
    stage: Stage,
    sensing: bool,
) -> Result<StageMetrics> {
    let noise = cfg.noise();
    let coeffs = out.star.coefficients();
    let h1 = ch.h1();
    let ev = EvalSettings {
        samples: cfg.monte_carlo.eval_samples,
        noise,
        seed,
        stream: stage as u64,
    };
    let sigma = cfg.sigma_rad();
    let (rates, sinr) = evaluate_rate_samples(ch, &coeffs, &out.w, means, sigma, &ev)?;
    let a: Vec<HermitianMatrix> = (0..ch.k())
        .map(|k| effective_matrix(coeffs.for_user(ch, k), &exp.r[k], &h1))
        .collect();
    let sinr_approx = (0..ch.k())
        .map(|k| sinr_from_matrix(k, &out.w, &a[k], noise))
        .collect::<Result<Vec<_>>>()?;
    let assnr = if sensing {
        (0..ch.k_r())
            .map(|j| {
                assnr_mc(
                    ch,
                    j,
                    &coeffs.phi_r,
                    &out.w,
                    means[j],
                    sigma,
                    cfg.alpha_sq(),
                    cfg.sensor_noise(),
                    &ev,
                )
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(StageMetrics {
        sinr,
        sinr_approx,
        rate: rates.iter().sum::<f64>() / rates.len() as f64,
        bound_rate: bound_rate(&out.w, &a, noise),
        assnr,
        power: transmit_power(&out.w),
    })
}

/// Runs both stages of one slot for `seed` under `plan`.
pub fn run_slot_with(cfg: &SystemConfig, plan: &SlotPlan, seed: u64) -> Result<SlotResult> {
    run_slot_at(cfg, plan, seed, 0)
}

/// Slot `t` of a chained run over a fixed geometry and channel draw.
pub fn run_slot_at(cfg: &SystemConfig, plan: &SlotPlan, seed: u64, t: u64) -> Result<SlotResult> {
    cfg.validate()?;
    let started = Instant::now();
    let geom = Geometry::sample(cfg, seed)?;
    let ch = sample_channels(cfg, &geom, seed)?;
    let sigma = cfg.sigma_rad();
    let est = stage_estimates(&ch, sigma, seed, t);
    let mc = McSettings::from(&cfg.monte_carlo);
    let ns = cfg.system.ns;

    let prep_stats = AngleStats {
        means: est[0].clone(),
        sigma: plan.design_sigma,
    };
    let exp_p = ExpectationSet::build(&ch, Stage::Preparation, &prep_stats, true, ns, &mc, seed)?;
    let prep = run_stage(&StageContext::new(cfg, &ch, &exp_p, seed), &plan.prep)?;

    let (comm, exp_c) = match &plan.comm {
        Some(cp) => {
            let stats = AngleStats {
                means: est[1].clone(),
                sigma: plan.design_sigma,
            };
            let exp_c = ExpectationSet::build(
                &ch,
                Stage::Communication,
                &stats,
                cp.sensing,
                ns,
                &mc,
                seed,
            )?;
            (
                run_stage(&StageContext::new(cfg, &ch, &exp_c, seed), cp)?,
                exp_c,
            )
        }
        None => {
            let stats = AngleStats {
                means: est[1].clone(),
                sigma: plan.design_sigma,
            };
            let exp_c =
                ExpectationSet::build(&ch, Stage::Communication, &stats, false, ns, &mc, seed)?;
            (prep.clone(), exp_c)
        }
    };

    let prep_metrics = stage_metrics(
        cfg,
        &ch,
        &exp_p,
        &prep,
        &est[0],
        seed,
        Stage::Preparation,
        true,
    )?;
    let comm_metrics = stage_metrics(
        cfg,
        &ch,
        &exp_c,
        &comm,
        &est[1],
        seed,
        Stage::Communication,
        false,
    )?;

    let e1 = prep.star.residuals().0;
    let e2 = comm.star.residuals().0;
    let coupling_enforced = plan.prep.coupled && plan.comm.as_ref().map_or(true, |c| c.coupled);
    let power = prep_metrics.power.max(comm_metrics.power);
    let sensing_margin = prep_metrics
        .assnr
        .iter()
        .map(|s| s / cfg.delta())
        .fold(f64::INFINITY, f64::min);
    let power_ok = power <= cfg.p_max() * (1.0 + 1e-8);
    let mut feas = FeasibilityReport {
        energy_residual: e1.max(e2),
        coupling_residual: prep
            .star
            .coupling_violation()
            .max(comm.star.coupling_violation()),
        coupling_enforced,
        power_ok,
        sensing_margin,
        sensing_enforced: plan.prep.sensing,
        feasible: false,
    };
    feas.feasible = feas.energy_residual <= 1e-9
        && (!coupling_enforced || feas.coupling_residual <= 1e-9)
        && power_ok
        && (!plan.prep.sensing || sensing_margin >= 1.0 - 1e-3);

    let single_stage = plan.comm.is_none();
    let rate_prep = prep_metrics.rate;
    let rate_comm = comm_metrics.rate;
    Ok(SlotResult {
        seed,
        converged: prep.converged && (single_stage || comm.converged),
        single_stage,
        assnr: prep_metrics.assnr.clone(),
        rate_total: total_rate(cfg.system.eta, rate_prep, rate_comm),
        rate_prep,
        rate_comm,
        power,
        prep,
        comm,
        prep_metrics,
        comm_metrics,
        estimates: est,
        feasibility: feas,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

/// Runs one slot of the proposed two-stage design.
pub fn run_slot(cfg: &SystemConfig, seed: u64) -> Result<SlotResult> {
    run_slot_with(cfg, &SlotPlan::proposed(cfg), seed)
}

/// Runs `slots` consecutive slots; slot `t` prepares with the estimates the
/// communication stage of slot `t − 1` used.
pub fn run_slots(
    cfg: &SystemConfig,
    plan: &SlotPlan,
    seed: u64,
    slots: usize,
) -> Result<Vec<SlotResult>> {
    (0..slots as u64)
        .map(|t| run_slot_at(cfg, plan, seed, t))
        .collect()
}
