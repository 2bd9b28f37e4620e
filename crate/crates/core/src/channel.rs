//! Geometry, steering vectors, path loss, and Rician channel draws.
//!
//! Angles follow the direction vector `u = (sin φ cos ϕ, cos φ cos ϕ, sin ϕ)`
//! with `φ ∈ [0, π]` (elevation-type) and `ϕ ∈ [-π/2, π/2]` (azimuth-type);
//! the metasurface lies at the origin.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::numerics::{CMat, CVec, Complex64};
use crate::rng::{self, Domain};

fn phasor(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

fn ula(phase_step: f64, len: usize, name: &'static str) -> Result<CVec> {
    if len == 0 {
        return Err(Error::invalid(name, "array size must be at least 1"));
    }
    Ok(CVec::from_fn(len, |m, _| {
        phasor(-PI * m as f64 * phase_step)
    }))
}

/// BS uniform linear array response; entry `m` is `exp(-jπ m cos φ cos ϕ)`.
pub fn steering_bs(phi: f64, varphi: f64, m: usize) -> Result<CVec> {
    ula(phi.cos() * varphi.cos(), m, "m")
}

/// Sensor array response, same convention as [`steering_bs`].
pub fn steering_sensor(phi: f64, varphi: f64, ns: usize) -> Result<CVec> {
    ula(phi.cos() * varphi.cos(), ns, "ns")
}

/// Planar metasurface response `a_x ⊗ a_z` with half-wavelength spacing;
/// element `(ix, iz)` sits at index `ix·Nz + iz`.
pub fn steering_star(phi: f64, varphi: f64, nx: usize, nz: usize) -> Result<CVec> {
    let ax = ula(phi.sin() * varphi.cos(), nx, "nx")?;
    let az = ula(varphi.sin(), nz, "nz")?;
    Ok(ax.kronecker(&az))
}

/// `ς₀ (d/d₀)^{-κ}` in linear scale, with `ς₀` given in dB.
pub fn path_loss(d: f64, kappa: f64, loss0_db: f64, d0: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::invalid("d", "distance must be positive"));
    }
    if !(d0 > 0.0) {
        return Err(Error::invalid("d0", "reference distance must be positive"));
    }
    Ok(10f64.powf(loss0_db / 10.0) * (d / d0).powf(-kappa))
}

/// Power attenuation `ς` of a link: the reference loss grows with distance.
/// Channels are scaled by `√(1/ς)`.
pub fn link_attenuation(d: f64, kappa: f64, loss0_db: f64, d0: f64) -> Result<f64> {
    Ok(1.0 / path_loss(d, kappa, -loss0_db, d0)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserPlacement {
    pub r: f64,
    pub phi: f64,
    pub varphi: f64,
}

impl UserPlacement {
    pub fn position(&self) -> [f64; 3] {
        direction(self.phi, self.varphi).map(|c| c * self.r)
    }
}

pub fn direction(phi: f64, varphi: f64) -> [f64; 3] {
    [
        phi.sin() * varphi.cos(),
        phi.cos() * varphi.cos(),
        varphi.sin(),
    ]
}

/// Angles `(φ, ϕ)` of a point seen from the origin.
pub fn angles_of(p: [f64; 3]) -> (f64, f64) {
    let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    (p[0].atan2(p[1]), (p[2] / r).asin())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub bs_position: [f64; 3],
    pub star_position: [f64; 3],
    pub phi_bs: f64,
    pub varphi_bs: f64,
    pub d_bs: f64,
    pub indoor: Vec<UserPlacement>,
    /// Nominal outdoor placements; angle estimates scatter around these.
    pub outdoor: Vec<UserPlacement>,
}

impl Geometry {
    pub fn sample(cfg: &SystemConfig, seed: u64) -> Result<Self> {
        let ch = &cfg.channel;
        let bs = ch.bs_position;
        let d_bs = (bs[0] * bs[0] + bs[1] * bs[1] + bs[2] * bs[2]).sqrt();
        if !(d_bs > 0.0) {
            return Err(Error::invalid(
                "bs_position",
                "BS must not coincide with the metasurface",
            ));
        }
        let (phi_bs, varphi_bs) = angles_of(bs);
        let place = |side: u64, k: usize| {
            let mut g = rng::stream(seed, Domain::Geometry, rng::index(&[side, k as u64]));
            UserPlacement {
                r: rng::uniform(&mut g, ch.radius_min, ch.radius_max),
                phi: rng::uniform(&mut g, 0.0, PI),
                varphi: rng::uniform(&mut g, -PI / 2.0, PI / 2.0),
            }
        };
        Ok(Self {
            bs_position: bs,
            star_position: [0.0; 3],
            phi_bs,
            varphi_bs,
            d_bs,
            indoor: (0..cfg.system.k_t).map(|k| place(0, k)).collect(),
            outdoor: (0..cfg.system.k_r).map(|k| place(1, k)).collect(),
        })
    }
}

/// `√(1/ς)(√(μ/(1+μ)) LoS + √(1/(1+μ)) NLoS)` weights.
fn rician_weights(mu: f64) -> (f64, f64) {
    if mu.is_infinite() {
        (1.0, 0.0)
    } else {
        ((mu / (1.0 + mu)).sqrt(), (1.0 / (1.0 + mu)).sqrt())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    pub nx: usize,
    pub nz: usize,
    /// `N × M` BS-to-metasurface channel parts.
    pub h1_los: CMat,
    pub h1_nlos: CMat,
    pub mu_bs: f64,
    pub varsigma_bs: f64,
    /// `K_T × N`; row `k` is `h₂ₖᴴ`.
    pub h2_in_los: CMat,
    pub h2_in_nlos: CMat,
    pub mu_in: f64,
    pub varsigma_in: Vec<f64>,
    /// `K_R × N`, LoS built at the nominal outdoor angles.
    pub h2_out_los: CMat,
    pub h2_out_nlos: CMat,
    pub mu_out: f64,
    pub varsigma_out: Vec<f64>,
    pub outdoor_angles: Vec<(f64, f64)>,
}

fn gaussian_matrix(seed: u64, domain: Domain, index: u64, rows: usize, cols: usize) -> CMat {
    let mut g = rng::stream(seed, domain, index);
    let mut m = CMat::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            m[(r, c)] = rng::complex_normal(&mut g);
        }
    }
    m
}

pub fn sample_channels(cfg: &SystemConfig, geom: &Geometry, seed: u64) -> Result<ChannelSet> {
    cfg.validate()?;
    let s = &cfg.system;
    let ch = &cfg.channel;
    let n = cfg.n();
    let (nx, nz) = (s.nx, s.nz);
    if geom.indoor.len() != s.k_t || geom.outdoor.len() != s.k_r {
        return Err(Error::DimensionMismatch {
            context: "geometry users",
            expected: s.k_t + s.k_r,
            got: geom.indoor.len() + geom.outdoor.len(),
        });
    }
    let a_star_bs = steering_star(geom.phi_bs, geom.varphi_bs, nx, nz)?;
    let a_bs = steering_bs(geom.phi_bs, geom.varphi_bs, s.m)?;
    let h1_los = &a_star_bs * a_bs.adjoint();
    let h1_nlos = gaussian_matrix(seed, Domain::NlosBs, 0, n, s.m);

    let rows =
        |users: &[UserPlacement], domain: Domain, kappa: f64| -> Result<(CMat, CMat, Vec<f64>)> {
            let mut los = CMat::zeros(users.len(), n);
            let mut nlos = CMat::zeros(users.len(), n);
            let mut vs = Vec::with_capacity(users.len());
            for (k, u) in users.iter().enumerate() {
                let a = steering_star(u.phi, u.varphi, nx, nz)?;
                los.set_row(k, &a.adjoint());
                nlos.set_row(k, &gaussian_matrix(seed, domain, k as u64, 1, n).row(0));
                vs.push(link_attenuation(u.r, kappa, ch.ref_loss_db, ch.d0)?);
            }
            Ok((los, nlos, vs))
        };
    let (h2_in_los, h2_in_nlos, varsigma_in) = rows(&geom.indoor, Domain::NlosIndoor, ch.kappa_in)?;
    let (h2_out_los, h2_out_nlos, varsigma_out) =
        rows(&geom.outdoor, Domain::NlosOutdoor, ch.kappa_out)?;
    Ok(ChannelSet {
        nx,
        nz,
        h1_los,
        h1_nlos,
        mu_bs: ch.mu_bs,
        varsigma_bs: link_attenuation(geom.d_bs, ch.kappa_bs, ch.ref_loss_db, ch.d0)?,
        h2_in_los,
        h2_in_nlos,
        mu_in: ch.mu_in,
        varsigma_in,
        h2_out_los,
        h2_out_nlos,
        mu_out: ch.mu_out,
        varsigma_out,
        outdoor_angles: geom.outdoor.iter().map(|u| (u.phi, u.varphi)).collect(),
    })
}

impl ChannelSet {
    pub fn n(&self) -> usize {
        self.h1_los.nrows()
    }

    pub fn m(&self) -> usize {
        self.h1_los.ncols()
    }

    pub fn k_t(&self) -> usize {
        self.h2_in_los.nrows()
    }

    pub fn k_r(&self) -> usize {
        self.h2_out_los.nrows()
    }

    pub fn k(&self) -> usize {
        self.k_t() + self.k_r()
    }

    /// Users are indexed indoor first, then outdoor.
    pub fn is_outdoor(&self, k: usize) -> bool {
        k >= self.k_t()
    }

    pub fn h1(&self) -> CMat {
        let (a, b) = rician_weights(self.mu_bs);
        let s = (1.0 / self.varsigma_bs).sqrt();
        (&self.h1_los * Complex64::new(a, 0.0) + &self.h1_nlos * Complex64::new(b, 0.0))
            * Complex64::new(s, 0.0)
    }

    fn compose_row(los: &CMat, nlos: &CMat, k: usize, mu: f64, varsigma: f64) -> CVec {
        let (a, b) = rician_weights(mu);
        let s = (1.0 / varsigma).sqrt();
        let row = (los.row(k) * Complex64::new(a, 0.0) + nlos.row(k) * Complex64::new(b, 0.0))
            * Complex64::new(s, 0.0);
        row.adjoint()
    }

    pub fn h2_in(&self) -> CMat {
        CMat::from_fn(self.k_t(), self.n(), |r, c| {
            Self::compose_row(
                &self.h2_in_los,
                &self.h2_in_nlos,
                r,
                self.mu_in,
                self.varsigma_in[r],
            )[c]
                .conj()
        })
    }

    pub fn h2_out(&self) -> CMat {
        CMat::from_fn(self.k_r(), self.n(), |r, c| {
            self.outdoor_nominal(r)[c].conj()
        })
    }

    /// `h₂ₖ` for indoor user `k` (row `k` of `H₂,in` is its adjoint).
    pub fn indoor_channel(&self, k: usize) -> CVec {
        Self::compose_row(
            &self.h2_in_los,
            &self.h2_in_nlos,
            k,
            self.mu_in,
            self.varsigma_in[k],
        )
    }

    pub fn outdoor_nominal(&self, j: usize) -> CVec {
        Self::compose_row(
            &self.h2_out_los,
            &self.h2_out_nlos,
            j,
            self.mu_out,
            self.varsigma_out[j],
        )
    }

    /// `h₂ₖ` for outdoor user `j` with its LoS part steered to `(φ, ϕ)` and
    /// the NLoS part held at its drawn value.
    pub fn outdoor_channel(&self, j: usize, phi: f64, varphi: f64) -> CVec {
        let (a, b) = rician_weights(self.mu_out);
        let s = (1.0 / self.varsigma_out[j]).sqrt();
        let los = steering_star(phi, varphi, self.nx, self.nz).expect("validated dims");
        let nlos = self.h2_out_nlos.row(j).adjoint();
        (los * Complex64::new(a, 0.0) + nlos * Complex64::new(b, 0.0)) * Complex64::new(s, 0.0)
    }

    pub fn dump(&self) -> ChannelDump {
        ChannelDump {
            n: self.n(),
            m: self.m(),
            k_t: self.k_t(),
            k_r: self.k_r(),
            h1: MatrixDump::from(&self.h1()),
            h2_in: MatrixDump::from(&self.h2_in()),
            h2_out: MatrixDump::from(&self.h2_out()),
            varsigma_bs: self.varsigma_bs,
            varsigma_in: self.varsigma_in.clone(),
            varsigma_out: self.varsigma_out.clone(),
        }
    }
}

/// Row-major `[re, im]` pairs with shape metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixDump {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&CMat> for MatrixDump {
    fn from(m: &CMat) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                data.push([m[(r, c)].re, m[(r, c)].im]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

impl MatrixDump {
    pub fn to_matrix(&self) -> CMat {
        CMat::from_fn(self.rows, self.cols, |r, c| {
            let [re, im] = self.data[r * self.cols + c];
            Complex64::new(re, im)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelDump {
    pub n: usize,
    pub m: usize,
    pub k_t: usize,
    pub k_r: usize,
    pub h1: MatrixDump,
    pub h2_in: MatrixDump,
    pub h2_out: MatrixDump,
    pub varsigma_bs: f64,
    pub varsigma_in: Vec<f64>,
    pub varsigma_out: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::c;

    #[test]
    fn bs_steering_broadside() {
        let a = steering_bs(PI / 2.0, 0.3, 4).unwrap();
        assert!(a.iter().all(|z| (z - c(1.0, 0.0)).norm() < 1e-15));
        let b = steering_bs(0.0, 0.0, 2).unwrap();
        assert!((b[1] - c(-1.0, 0.0)).norm() < 1e-15);
        assert!(steering_bs(0.0, 0.0, 0).is_err());
    }

    #[test]
    fn star_steering_cases() {
        let a = steering_star(0.0, 0.0, 3, 2).unwrap();
        assert_eq!(a.len(), 6);
        assert!(a.iter().all(|z| (z - c(1.0, 0.0)).norm() < 1e-15));
        let b = steering_star(PI / 2.0, 0.0, 2, 1).unwrap();
        assert!((b[1] - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn sensor_steering_cases() {
        assert!(steering_sensor(PI / 2.0, 0.0, 8)
            .unwrap()
            .iter()
            .all(|z| (z - c(1.0, 0.0)).norm() < 1e-14));
        assert_eq!(steering_sensor(0.4, 0.1, 1).unwrap()[0], c(1.0, 0.0));
    }

    #[test]
    fn path_loss_cases() {
        assert!((path_loss(1.0, 2.2, 30.0, 1.0).unwrap() - 1e3).abs() < 1e-9);
        assert_eq!(
            path_loss(7.0, 0.0, 30.0, 1.0).unwrap(),
            path_loss(1.0, 0.0, 30.0, 1.0).unwrap()
        );
        assert!((path_loss(10.0, 2.0, 0.0, 1.0).unwrap() - 0.01).abs() < 1e-15);
        assert!(path_loss(0.0, 2.0, 0.0, 1.0).is_err());
        assert!((link_attenuation(1.0, 2.2, 30.0, 1.0).unwrap() - 1e3).abs() < 1e-9);
    }

    #[test]
    fn bs_angles_point_at_bs() {
        let (phi, varphi) = angles_of([20.0, 30.0, 0.0]);
        let u = direction(phi, varphi);
        let r = (20f64 * 20.0 + 900.0).sqrt();
        assert!(
            (u[0] - 20.0 / r).abs() < 1e-14
                && (u[1] - 30.0 / r).abs() < 1e-14
                && u[2].abs() < 1e-14
        );
    }

    #[test]
    fn same_seed_same_channels() {
        let cfg = SystemConfig::default();
        let g = Geometry::sample(&cfg, 4).unwrap();
        let a = sample_channels(&cfg, &g, 4).unwrap();
        let b = sample_channels(&cfg, &g, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.h1().shape(), (20, 8));
        assert_eq!(a.h2_out().row(1).adjoint(), a.outdoor_nominal(1));
    }
}
