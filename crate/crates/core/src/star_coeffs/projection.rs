//! Closed-form projections onto the phase-coupled, energy-conserving set.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use num_complex::Complex64;

/// Wraps into `[0, 2π)`.
pub fn wrap(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// `|e^{jθ*_R} − e^{jθ_R}|² + |e^{jθ*_T} − e^{jθ_T}|²`.
pub fn phase_distance(target: (f64, f64), theta: (f64, f64)) -> f64 {
    let d = |a: f64, b: f64| 2.0 - 2.0 * (a - b).cos();
    d(target.0, theta.0) + d(target.1, theta.1)
}

/// Nearest orthogonal phase pair `(θ̂_R, θ̂_T)` to `(θ*_R, θ*_T)`.
///
/// Stationary points satisfy `c₁μ² − c₂μ + c₁ = 0` with
/// `c₁ = cos(θ*_R − θ*_T)` and `c₂ = 2`; both roots are evaluated and the
/// closer pair is kept. For `|c₁| = 1` the two candidates are equidistant and
/// the symmetric split `(θ*_R + π/4, θ*_T − π/4)` is returned.
pub fn project_phases(theta_r: f64, theta_t: f64) -> (f64, f64) {
    let c1 = (theta_r - theta_t).cos();
    if c1.abs() < 1e-12 {
        return (theta_r, theta_t);
    }
    if c1.abs() >= 1.0 - 1e-12 {
        return (wrap(theta_r + FRAC_PI_4), wrap(theta_t - FRAC_PI_4));
    }
    let a = Complex64::from_polar(1.0, theta_r);
    let b = Complex64::from_polar(1.0, theta_t);
    // Small root in cancellation-free form; the large root is its reciprocal.
    let mu_s = c1 / (1.0 + (1.0 - c1 * c1).sqrt());
    let x = a - b * mu_s;
    let y = b - a * mu_s;
    let flip = if mu_s > 0.0 { PI } else { 0.0 };
    let small = (x.arg(), y.arg());
    let large = (y.arg() + flip, x.arg() + flip);
    let target = (theta_r, theta_t);
    let (tr, tt) = if phase_distance(target, small) <= phase_distance(target, large) {
        small
    } else {
        large
    };
    // Snap to exact orthogonality on the side the chosen root lies.
    let s = if (tt - tr).sin() >= 0.0 { 1.0 } else { -1.0 };
    (wrap(tr), wrap(tr + s * FRAC_PI_2))
}

/// Maximizes `χ_R β_R + χ_T β_T` over the quarter circle `β_R² + β_T² = 1`,
/// `β ≥ 0`. Returns `(β̂_R, β̂_T)`.
pub fn project_amplitudes(chi_r: f64, chi_t: f64) -> (f64, f64) {
    if chi_r == 0.0 && chi_t == 0.0 {
        return (
            std::f64::consts::FRAC_1_SQRT_2,
            std::f64::consts::FRAC_1_SQRT_2,
        );
    }
    match (chi_r >= 0.0, chi_t >= 0.0) {
        (true, true) => {
            let n = chi_r.hypot(chi_t);
            (chi_r / n, chi_t / n)
        }
        (true, false) => (1.0, 0.0),
        (false, true) => (0.0, 1.0),
        (false, false) => {
            if chi_t >= chi_r {
                (0.0, 1.0)
            } else {
                (1.0, 0.0)
            }
        }
    }
}

/// Joint nearest point `(β_R, β_T, θ_R, θ_T)` to the complex pair
/// `(a_R, a_T)` on the coupled energy-splitting set, weighting each side's
/// phase error by its amplitude.
///
/// For a fixed transmit phase `θ` and sign `s`, the best amplitudes are the
/// normalized positive parts of `x = |a_T| cos(θ − α_T)` and
/// `y = |a_R| cos(θ + sπ/2 − α_R)`, leaving `√(x₊² + y₊²)` to maximize. Its
/// interior maximizers solve `2θ = arg(|a_T|² e^{2jα_T} + |a_R|² e^{2jα'_R})`
/// and the boundary maximizers are `θ = α_T` and `θ = α'_R`.
pub fn project_element_joint(a_r: Complex64, a_t: Complex64) -> (f64, f64, f64, f64) {
    let (mt, at) = (a_t.norm(), a_t.arg());
    let mr = a_r.norm();
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0, 0.0, 0.0);
    for s in [1.0, -1.0] {
        let ar = a_r.arg() - s * FRAC_PI_2;
        let m = Complex64::from_polar(mt * mt, 2.0 * at) + Complex64::from_polar(mr * mr, 2.0 * ar);
        let mid = 0.5 * m.arg();
        for theta in [mid, mid + PI, at, ar] {
            let x = (mt * (theta - at).cos()).max(0.0);
            let y = (mr * (theta - ar).cos()).max(0.0);
            let v = x.hypot(y);
            if v > best.0 {
                let (br, bt) = if v > 0.0 {
                    (y / v, x / v)
                } else {
                    (
                        std::f64::consts::FRAC_1_SQRT_2,
                        std::f64::consts::FRAC_1_SQRT_2,
                    )
                };
                best = (v, br, bt, wrap(theta + s * FRAC_PI_2), wrap(theta));
            }
        }
    }
    (best.1, best.2, best.3, best.4)
}

/// `χ_a = β*_a cos(θ*_a − θ̂_a)`.
pub fn chi(beta_star: f64, theta_star: f64, theta_hat: f64) -> f64 {
    beta_star * (theta_star - theta_hat).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_input_unchanged() {
        let (r, t) = project_phases(0.0, FRAC_PI_2);
        assert_eq!((r, t), (0.0, FRAC_PI_2));
    }

    #[test]
    fn degenerate_split() {
        let (r, t) = project_phases(0.0, 0.0);
        assert!((r - FRAC_PI_4).abs() < 1e-15);
        assert!((wrap(t) - wrap(-FRAC_PI_4)).abs() < 1e-15);
        let d = phase_distance((0.0, 0.0), (r, t));
        assert!((d - 2.0 * (2.0 - 2.0 * FRAC_PI_4.cos())).abs() < 1e-12);
    }

    #[test]
    fn joint_projection_keeps_dominant_phase() {
        let (br, bt, hr, ht) = project_element_joint(
            Complex64::from_polar(1e-3, 2.0),
            Complex64::from_polar(1.0, 0.7),
        );
        assert!(br < 1e-2 && (bt - 1.0).abs() < 1e-4);
        assert!((ht - 0.7).abs() < 1e-3);
        assert!((hr - ht).cos().abs() < 1e-12);
    }

    #[test]
    fn joint_projection_beats_grid() {
        let pts = [
            (0.3, 0.2, 0.9, -1.1),
            (0.8, 2.9, 0.5, 0.4),
            (0.6, -2.0, 0.6, 1.9),
        ];
        for (mr, ar, mt, at) in pts {
            let (a_r, a_t) = (Complex64::from_polar(mr, ar), Complex64::from_polar(mt, at));
            let (br, bt, hr, ht) = project_element_joint(a_r, a_t);
            let dist = |br: f64, bt: f64, hr: f64, ht: f64| {
                (a_r - Complex64::from_polar(br, hr)).norm_sqr()
                    + (a_t - Complex64::from_polar(bt, ht)).norm_sqr()
            };
            let got = dist(br, bt, hr, ht);
            let mut grid = f64::INFINITY;
            for i in 0..720 {
                let th = i as f64 * TAU / 720.0;
                for j in 0..=90 {
                    let psi = j as f64 * FRAC_PI_2 / 90.0;
                    for s in [1.0, -1.0] {
                        grid = grid.min(dist(psi.sin(), psi.cos(), th + s * FRAC_PI_2, th));
                    }
                }
            }
            assert!(got <= grid + 1e-9, "{got} vs {grid}");
        }
    }

    #[test]
    fn amplitude_cases() {
        let (r, t) = project_amplitudes(3.0, 4.0);
        assert!((r - 0.6).abs() < 1e-15 && (t - 0.8).abs() < 1e-15);
        assert_eq!(project_amplitudes(0.2, -0.1), (1.0, 0.0));
        assert_eq!(project_amplitudes(-0.2, 0.1), (0.0, 1.0));
        assert_eq!(project_amplitudes(-0.2, -0.1), (0.0, 1.0));
        assert_eq!(project_amplitudes(-0.1, -0.2), (1.0, 0.0));
    }
}
