//! Metasurface coefficient design: semidefinite relaxation, rank-one
//! recovery and projection back onto the coupled-phase, energy-conserving
//! element set.

mod projection;
mod recovery;
mod sdr;

pub use projection::{
    chi, phase_distance, project_amplitudes, project_element_joint, project_phases, wrap,
};
pub use recovery::{recover_rank_one, Recovered, RecoveryContext};
pub use sdr::{solve_star_sdr, SdrInput, SdrSolution};

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::metrics::Coefficients;
use crate::numerics::CVec;

/// Operating mode of one metasurface element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElementMode {
    EnergySplit,
    TransmitOnly,
    ReflectOnly,
}

impl ElementMode {
    pub fn transmits(self) -> bool {
        self != ElementMode::ReflectOnly
    }

    pub fn reflects(self) -> bool {
        self != ElementMode::TransmitOnly
    }

    /// Modes from a binary partition: `b_n = 1` energy splitting, `b_n = 0`
    /// transmit only.
    pub fn from_partition(b: &[u8]) -> Vec<Self> {
        b.iter()
            .map(|&x| {
                if x == 1 {
                    ElementMode::EnergySplit
                } else {
                    ElementMode::TransmitOnly
                }
            })
            .collect()
    }
}

/// Amplitudes and phases of every element for one stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarState {
    pub beta_t: Vec<f64>,
    pub beta_r: Vec<f64>,
    pub theta_t: Vec<f64>,
    pub theta_r: Vec<f64>,
    pub modes: Vec<ElementMode>,
    /// Whether `cos(θ_R − θ_T) = 0` is enforced on energy-splitting elements.
    pub coupled: bool,
}

impl StarState {
    /// Equal split with orthogonal phases; single-mode elements carry full
    /// amplitude on their active side.
    pub fn initial(modes: Vec<ElementMode>, coupled: bool) -> Self {
        let n = modes.len();
        let mut s = Self {
            beta_t: vec![0.0; n],
            beta_r: vec![0.0; n],
            theta_t: vec![0.0; n],
            theta_r: vec![FRAC_PI_2; n],
            modes,
            coupled,
        };
        for i in 0..n {
            let (br, bt) = match s.modes[i] {
                ElementMode::EnergySplit => (FRAC_1_SQRT_2, FRAC_1_SQRT_2),
                ElementMode::TransmitOnly => (0.0, 1.0),
                ElementMode::ReflectOnly => (1.0, 0.0),
            };
            s.beta_r[i] = br;
            s.beta_t[i] = bt;
        }
        s
    }

    pub fn n(&self) -> usize {
        self.modes.len()
    }

    pub fn phi_t(&self) -> CVec {
        CVec::from_iterator(
            self.n(),
            (0..self.n()).map(|i| Complex64::from_polar(self.beta_t[i], self.theta_t[i])),
        )
    }

    pub fn phi_r(&self) -> CVec {
        CVec::from_iterator(
            self.n(),
            (0..self.n()).map(|i| Complex64::from_polar(self.beta_r[i], self.theta_r[i])),
        )
    }

    pub fn coefficients(&self) -> Coefficients {
        Coefficients {
            phi_t: self.phi_t(),
            phi_r: self.phi_r(),
        }
    }

    /// Binary partition: 1 for energy-splitting elements.
    pub fn partition(&self) -> Vec<u8> {
        self.modes
            .iter()
            .map(|m| u8::from(*m == ElementMode::EnergySplit))
            .collect()
    }

    /// Largest violation of the element constraints:
    /// `(energy residual, phase-coupling residual)`.
    pub fn residuals(&self) -> (f64, f64) {
        let mut energy = 0.0f64;
        let mut coupling = 0.0f64;
        for i in 0..self.n() {
            match self.modes[i] {
                ElementMode::EnergySplit => {
                    energy =
                        energy.max((self.beta_r[i].powi(2) + self.beta_t[i].powi(2) - 1.0).abs());
                    if self.coupled {
                        coupling = coupling.max((self.theta_r[i] - self.theta_t[i]).cos().abs());
                    }
                }
                ElementMode::TransmitOnly => {
                    energy = energy
                        .max((self.beta_t[i] - 1.0).abs())
                        .max(self.beta_r[i].abs());
                }
                ElementMode::ReflectOnly => {
                    energy = energy
                        .max((self.beta_r[i] - 1.0).abs())
                        .max(self.beta_t[i].abs());
                }
            }
        }
        (energy, coupling)
    }

    pub fn feasibility_residual(&self) -> f64 {
        let (e, c) = self.residuals();
        e.max(c)
    }

    /// Largest `|cos(θ_R − θ_T)|` over energy-splitting elements, whether or
    /// not coupling is enforced.
    pub fn coupling_violation(&self) -> f64 {
        (0..self.n())
            .filter(|&i| self.modes[i] == ElementMode::EnergySplit)
            .map(|i| (self.theta_r[i] - self.theta_t[i]).cos().abs())
            .fold(0.0, f64::max)
    }
}

const FEASIBILITY_TOL: f64 = 1e-9;

fn polar(z: Complex64) -> (f64, f64) {
    let a = z.norm().min(1.0);
    let t = if a > 0.0 { wrap(z.arg()) } else { 0.0 };
    (a, t)
}

fn project_element(mode: ElementMode, coupled: bool, tr: (f64, f64), tt: (f64, f64)) -> [f64; 4] {
    let ((br_s, th_r), (bt_s, th_t)) = (tr, tt);
    match mode {
        ElementMode::TransmitOnly => [0.0, 1.0, wrap(th_t + FRAC_PI_2), th_t],
        ElementMode::ReflectOnly => [1.0, 0.0, th_r, wrap(th_r - FRAC_PI_2)],
        ElementMode::EnergySplit => {
            // A vanishing side has no defined phase; align it orthogonally so
            // the other side keeps its phase.
            let (mut th_r, mut th_t) = (th_r, th_t);
            if br_s == 0.0 && bt_s > 0.0 {
                th_r = wrap(th_t + FRAC_PI_2);
            } else if bt_s == 0.0 && br_s > 0.0 {
                th_t = wrap(th_r - FRAC_PI_2);
            }
            let (hr, ht) = if coupled {
                project_phases(th_r, th_t)
            } else {
                (th_r, th_t)
            };
            let (br, bt) = project_amplitudes(chi(br_s, th_r, hr), chi(bt_s, th_t, ht));
            [br, bt, hr, ht]
        }
    }
}

/// Maps raw coefficient vectors onto the feasible element set: amplitudes
/// are clipped to `[0, 1]`, then each energy-splitting element receives the
/// nearest orthogonal phase pair followed by the nearest point on the energy
/// circle. Single-mode elements keep the phase of their active side.
pub fn restore_feasibility(
    phi_t: &CVec,
    phi_r: &CVec,
    modes: &[ElementMode],
    coupled: bool,
) -> StarState {
    let n = modes.len();
    let mut s = StarState::initial(modes.to_vec(), coupled);
    for i in 0..n {
        let [br, bt, hr, ht] = project_element(modes[i], coupled, polar(phi_r[i]), polar(phi_t[i]));
        s.beta_r[i] = br;
        s.beta_t[i] = bt;
        s.theta_r[i] = hr;
        s.theta_t[i] = ht;
    }
    if s.feasibility_residual() > FEASIBILITY_TOL {
        let (pt, pr) = (s.phi_t(), s.phi_r());
        for i in 0..n {
            let [br, bt, hr, ht] = project_element(modes[i], coupled, polar(pr[i]), polar(pt[i]));
            s.beta_r[i] = br;
            s.beta_t[i] = bt;
            s.theta_r[i] = hr;
            s.theta_t[i] = ht;
        }
    }
    s
}

/// As [`restore_feasibility`], but coupled energy-splitting elements take
/// the joint amplitude-weighted nearest point, so a near-silent side cannot
/// pull the phase of the dominant one.
pub fn restore_feasibility_joint(phi_t: &CVec, phi_r: &CVec, modes: &[ElementMode]) -> StarState {
    let n = modes.len();
    let mut s = StarState::initial(modes.to_vec(), true);
    for i in 0..n {
        let clip = |z: Complex64| if z.norm() > 1.0 { z / z.norm() } else { z };
        let [br, bt, hr, ht] = match modes[i] {
            ElementMode::EnergySplit => {
                let (br, bt, hr, ht) = project_element_joint(clip(phi_r[i]), clip(phi_t[i]));
                [br, bt, hr, ht]
            }
            mode => project_element(mode, true, polar(phi_r[i]), polar(phi_t[i])),
        };
        s.beta_r[i] = br;
        s.beta_t[i] = bt;
        s.theta_r[i] = hr;
        s.theta_t[i] = ht;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feasible_input_is_fixed_point() {
        let modes = vec![
            ElementMode::EnergySplit,
            ElementMode::TransmitOnly,
            ElementMode::ReflectOnly,
        ];
        let mut s = StarState::initial(modes.clone(), true);
        s.beta_r[0] = 0.6;
        s.beta_t[0] = 0.8;
        s.theta_t[0] = 1.0;
        s.theta_r[0] = 1.0 + FRAC_PI_2;
        s.theta_t[1] = 2.0;
        s.theta_r[1] = 2.0 + FRAC_PI_2;
        let r = restore_feasibility(&s.phi_t(), &s.phi_r(), &modes, true);
        for i in 0..3 {
            assert!((r.beta_r[i] - s.beta_r[i]).abs() < 1e-12);
            assert!((r.beta_t[i] - s.beta_t[i]).abs() < 1e-12);
            assert!((r.phi_t()[i] - s.phi_t()[i]).norm() < 1e-12);
            assert!((r.phi_r()[i] - s.phi_r()[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn all_transmit_only_zeroes_reflection() {
        let modes = vec![ElementMode::TransmitOnly; 4];
        let raw = CVec::from_element(4, Complex64::new(0.3, 0.4));
        let s = restore_feasibility(&raw, &raw, &modes, true);
        assert!(s.phi_r().iter().all(|z| z.norm() == 0.0));
        assert_eq!(s.feasibility_residual(), 0.0);
    }

    #[test]
    fn residual_zero_after_projection() {
        let modes = vec![ElementMode::EnergySplit; 3];
        let t = CVec::from_vec(vec![
            Complex64::new(0.2, 0.1),
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, 0.0),
        ]);
        let r = CVec::from_vec(vec![
            Complex64::new(0.5, -0.3),
            Complex64::new(0.1, 0.1),
            Complex64::new(0.0, 0.0),
        ]);
        let s = restore_feasibility(&t, &r, &modes, true);
        assert!(s.feasibility_residual() <= 1e-9);
    }
}
