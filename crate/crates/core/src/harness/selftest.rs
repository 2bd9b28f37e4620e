//! Fast oracle checks runnable from the command line.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::fp_core::{dual_from_parts, quadratic_from_parts, rho_from_parts, tau_from_parts};
use crate::numerics::{
    c, eig_hermitian, solve_qcqp, solve_sdp, BlockTerm, CMat, CVec, HermitianMatrix, QcqpProblem,
    QuadConstraint, SdpProblem, Sense, SymTerm,
};
use crate::partition::project_topk;
use crate::rng::{self, Domain};
use crate::star_coeffs::{chi, phase_distance, project_amplitudes, project_phases};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed,
        detail,
    }
}

fn eig_check() -> CheckResult {
    let mut g = rng::stream(7, Domain::Oracle, 1);
    let n = 6;
    let raw = CMat::from_fn(n, n, |_, _| rng::complex_normal(&mut g));
    let a = HermitianMatrix::from_hermitian_part(&raw);
    match eig_hermitian(&a) {
        Ok(e) => {
            let res = (e.reconstruct() - a.as_matrix()).norm() / a.as_matrix().norm();
            check(
                "eig reconstruction",
                res <= 1e-9,
                format!("relative residual {res:.2e}"),
            )
        }
        Err(err) => check("eig reconstruction", false, err.to_string()),
    }
}

fn sdp_check() -> CheckResult {
    let mut p = SdpProblem::default();
    let b = p.add_block(2);
    p.objective.push(BlockTerm::new(
        b,
        SymTerm::dense(&HermitianMatrix::identity(2)),
    ));
    for i in 0..2 {
        p.add_constraint(
            vec![BlockTerm::new(b, SymTerm::diag_entry(i, 1.0))],
            Sense::Le,
            1.0,
        );
    }
    match solve_sdp(&p, 1e-8) {
        Ok(s) => check(
            "sdp box trace",
            (s.primal_objective - 2.0).abs() < 1e-6 && s.gap <= 1e-6,
            format!("objective {:.9}, gap {:.2e}", s.primal_objective, s.gap),
        ),
        Err(err) => check("sdp box trace", false, err.to_string()),
    }
}

fn qcqp_check() -> CheckResult {
    let p = QcqpProblem {
        quad: HermitianMatrix::identity(2),
        lin: CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]),
        constraints: vec![QuadConstraint::ball(2, 0.25)],
    };
    match solve_qcqp(&p, 1e-9) {
        Ok(s) => {
            let err = (s.x[0] - c(0.5, 0.0)).norm() + s.x[1].norm();
            check(
                "qcqp ball clip",
                err < 1e-6,
                format!("distance to a/2 {err:.2e}"),
            )
        }
        Err(e) => check("qcqp ball clip", false, e.to_string()),
    }
}

fn fp_check() -> CheckResult {
    let mut g = rng::stream(5, Domain::Oracle, 2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let k = 3;
        let s: Vec<f64> = (0..k).map(|_| g.random_range(0.1..2.0)).collect();
        let t: Vec<f64> = s.iter().map(|x| x + g.random_range(0.0..2.0)).collect();
        let noise = g.random_range(0.05..1.0);
        let tau = tau_from_parts(&s, &t, noise);
        let rho = rho_from_parts(&tau, &s, &t, noise);
        let h = 1e-5;
        for i in 0..k {
            let mut up = tau.clone();
            let mut dn = tau.clone();
            up[i] += h;
            dn[i] -= h;
            let d = (dual_from_parts(&up, &s, &t, noise) - dual_from_parts(&dn, &s, &t, noise))
                / (2.0 * h);
            worst = worst.max(d.abs());
        }
        let q = quadratic_from_parts(&tau, &rho, &s, &t, noise);
        worst = worst.max((q - dual_from_parts(&tau, &s, &t, noise)).abs() * 1e3);
    }
    check(
        "fractional transforms",
        worst <= 1e-6,
        format!("worst stationarity {worst:.2e}"),
    )
}

fn phase_check() -> CheckResult {
    let mut g = rng::stream(11, Domain::Oracle, 3);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let (tr, tt) = (
            g.random_range(0.0..std::f64::consts::TAU),
            g.random_range(0.0..std::f64::consts::TAU),
        );
        let got = phase_distance((tr, tt), project_phases(tr, tt));
        let mut best = f64::INFINITY;
        for i in 0..3600 {
            let r = (i as f64 * 0.1).to_radians();
            for s in [1.0, -1.0] {
                best = best.min(phase_distance(
                    (tr, tt),
                    (r, r + s * std::f64::consts::FRAC_PI_2),
                ));
            }
        }
        worst = worst.max(got - best);
    }
    check(
        "phase projection",
        worst <= 1e-3,
        format!("worst excess over grid {worst:.2e}"),
    )
}

fn amplitude_check() -> CheckResult {
    let mut g = rng::stream(13, Domain::Oracle, 4);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let (br, bt) = (g.random_range(0.0..1.0), g.random_range(0.0..1.0));
        let (dr, dt) = (g.random_range(-3.2..3.2), g.random_range(-3.2..3.2));
        let (xr, xt) = (chi(br, dr, 0.0), chi(bt, dt, 0.0));
        let (ar, at) = project_amplitudes(xr, xt);
        let got = xr * ar + xt * at;
        let best = (0..=10_000)
            .map(|i| {
                let t = std::f64::consts::FRAC_PI_2 * i as f64 / 10_000.0;
                xr * t.cos() + xt * t.sin()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(best - got);
    }
    check(
        "amplitude projection",
        worst <= 1e-3,
        format!("worst shortfall {worst:.2e}"),
    )
}

fn topk_check() -> CheckResult {
    let mut g = rng::stream(17, Domain::Oracle, 5);
    let n = 8;
    let mut ok = true;
    for trial in 0..20 {
        let b: Vec<f64> = (0..n).map(|_| g.random_range(0.0..1.0)).collect();
        let k = trial % (n + 1);
        let got = match project_topk(&b, k) {
            Ok(v) => v,
            Err(_) => return check("top-k projection", false, "unexpected error".into()),
        };
        let dist =
            |x: &[u8]| -> f64 { x.iter().zip(&b).map(|(&u, v)| (u as f64 - v).powi(2)).sum() };
        let best = (0u32..1 << n)
            .filter(|m| m.count_ones() as usize == k)
            .map(|m| dist(&(0..n).map(|i| ((m >> i) & 1) as u8).collect::<Vec<_>>()))
            .fold(f64::INFINITY, f64::min);
        ok &= (dist(&got) - best).abs() < 1e-12;
    }
    check("top-k projection", ok, "20 instances, N = 8".into())
}

/// Runs every check; each returns quickly.
pub fn selftest() -> Vec<CheckResult> {
    vec![
        eig_check(),
        sdp_check(),
        qcqp_check(),
        fp_check(),
        phase_check(),
        amplitude_check(),
        topk_check(),
    ]
}
