//! Expectation matrices over Gaussian angle errors and the Hadamard-product
//! matrices `E`, `D`, `C` that parameterize the STAR-coefficient subproblems.
//!
//! The metasurface response depends on the angles only through the index
//! differences `(Δx, Δz)`, so `E[a aᴴ]` and `E[a]` are accumulated on the
//! `(2Nx−1)(2Nz−1)` difference lattice instead of on full outer products.
//!
//! Sampling is split into fixed-size chunks, each with its own stream keyed by
//! `(seed, stage, user, chunk)`, and reduced in chunk order. The result is
//! bit-stable for a fixed chunk size.

use std::f64::consts::PI;

use crate::channel::{steering_star, ChannelSet};
use crate::config::MonteCarloSection;
use crate::error::{Error, Result};
use crate::numerics::{fro, CMat, CVec, Complex64, HermitianMatrix};
use crate::rng::{self, Domain};
use crate::Stage;

/// Angle-error statistics for the outdoor users in one stage.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleStats {
    /// Estimated `(φ, ϕ)` per outdoor user.
    pub means: Vec<(f64, f64)>,
    /// Standard deviations `(σ_φ, σ_ϕ)` in radians, shared by all users.
    pub sigma: (f64, f64),
}

impl AngleStats {
    pub fn is_degenerate(&self) -> bool {
        self.sigma.0 == 0.0 && self.sigma.1 == 0.0
    }

    pub fn with_sigma(&self, sigma: (f64, f64)) -> Self {
        Self {
            means: self.means.clone(),
            sigma,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McSettings {
    pub samples: usize,
    pub max_samples: usize,
    pub split_half_tol: f64,
    pub chunk: usize,
}

impl From<&MonteCarloSection> for McSettings {
    fn from(m: &MonteCarloSection) -> Self {
        Self {
            samples: m.samples,
            max_samples: m.max_samples,
            split_half_tol: m.split_half_tol,
            chunk: m.chunk,
        }
    }
}

impl Default for McSettings {
    fn default() -> Self {
        (&MonteCarloSection::default()).into()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct McReport {
    /// Accepted samples (zero for closed-form results).
    pub samples: usize,
    /// Fraction of raw draws rejected by range truncation.
    pub truncation_rate: f64,
    /// Relative Frobenius distance between the two half-sample estimates.
    pub split_half: f64,
}

const PHI_RANGE: (f64, f64) = (0.0, PI);
const VARPHI_RANGE: (f64, f64) = (-PI / 2.0, PI / 2.0);

/// Clamps an angle pair into the physical sampling ranges.
pub fn clamp_angles(phi: f64, varphi: f64) -> (f64, f64) {
    (
        phi.clamp(PHI_RANGE.0, PHI_RANGE.1),
        varphi.clamp(VARPHI_RANGE.0, VARPHI_RANGE.1),
    )
}

/// Draws `(φ, ϕ)` around `mean` with rejection outside the physical ranges.
/// Returns the pair and the number of rejected draws.
pub fn sample_angles<R: rand::Rng + ?Sized>(
    rng: &mut R,
    mean: (f64, f64),
    sigma: (f64, f64),
) -> ((f64, f64), usize) {
    let mut rejected = 0;
    loop {
        let phi = mean.0 + sigma.0 * rng::normal(rng);
        let varphi = mean.1 + sigma.1 * rng::normal(rng);
        if (PHI_RANGE.0..=PHI_RANGE.1).contains(&phi)
            && (VARPHI_RANGE.0..=VARPHI_RANGE.1).contains(&varphi)
        {
            return ((phi, varphi), rejected);
        }
        rejected += 1;
        if rejected > 1_000_000 {
            // Mean far outside the admissible box: fall back to its projection.
            return (clamp_angles(mean.0, mean.1), rejected);
        }
    }
}

/// Sums of `exp(-jπ(Δx u + Δz v))` over the difference lattice.
#[derive(Clone)]
struct Lattice {
    nx: usize,
    nz: usize,
    sums: Vec<Complex64>,
}

impl Lattice {
    fn new(nx: usize, nz: usize) -> Self {
        Self {
            nx,
            nz,
            sums: vec![Complex64::new(0.0, 0.0); (2 * nx - 1) * (2 * nz - 1)],
        }
    }

    fn slot(&self, dx: isize, dz: isize) -> usize {
        let wz = 2 * self.nz - 1;
        (dx + self.nx as isize - 1) as usize * wz + (dz + self.nz as isize - 1) as usize
    }

    fn add_angles(&mut self, phi: f64, varphi: f64) {
        let u = phi.sin() * varphi.cos();
        let v = varphi.sin();
        let px = Complex64::from_polar(1.0, -PI * u);
        let pz = Complex64::from_polar(1.0, -PI * v);
        let nx = self.nx as isize;
        let nz = self.nz as isize;
        let mut zpow = Vec::with_capacity(2 * self.nz - 1);
        let mut z = Complex64::from_polar(1.0, PI * v * (nz - 1) as f64);
        for _ in 0..(2 * nz - 1) {
            zpow.push(z);
            z *= pz;
        }
        let mut x = Complex64::from_polar(1.0, PI * u * (nx - 1) as f64);
        let wz = 2 * self.nz - 1;
        for ix in 0..(2 * self.nx - 1) {
            let row = &mut self.sums[ix * wz..(ix + 1) * wz];
            for (acc, zp) in row.iter_mut().zip(&zpow) {
                *acc += x * zp;
            }
            x *= px;
        }
    }

    fn merge(&mut self, other: &Lattice) {
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
    }

    /// `(1/S) Σ a aᴴ` and `(1/S) Σ a`.
    fn moments(&self, count: usize) -> (CMat, CVec) {
        let n = self.nx * self.nz;
        let inv = 1.0 / count as f64;
        let idx = |k: usize| ((k / self.nz) as isize, (k % self.nz) as isize);
        let second = CMat::from_fn(n, n, |r, c| {
            let (rx, rz) = idx(r);
            let (cx, cz) = idx(c);
            self.sums[self.slot(rx - cx, rz - cz)] * inv
        });
        let first = CVec::from_fn(n, |r, _| {
            let (rx, rz) = idx(r);
            self.sums[self.slot(rx, rz)] * inv
        });
        (second, first)
    }
}

/// Monte-Carlo `E[a aᴴ]`, `E[a]` of the metasurface response with split-half
/// convergence control.
pub fn steering_moments(
    nx: usize,
    nz: usize,
    mean: (f64, f64),
    sigma: (f64, f64),
    mc: &McSettings,
    seed: u64,
    key: &[u64],
) -> Result<(CMat, CVec, McReport)> {
    if mc.samples < 1 || mc.chunk < 1 {
        return Err(Error::invalid(
            "samples",
            "Monte-Carlo sample count must be at least 1",
        ));
    }
    if sigma.0 == 0.0 && sigma.1 == 0.0 {
        let a = steering_star(mean.0, mean.1, nx, nz)?;
        return Ok((&a * a.adjoint(), a, McReport::default()));
    }
    let mut chunks: Vec<(Lattice, usize, usize)> = Vec::new();
    let mut target = mc.samples;
    loop {
        let need = target.div_ceil(mc.chunk);
        while chunks.len() < need {
            let c = chunks.len();
            let mut idx = key.to_vec();
            idx.push(c as u64);
            let mut g = rng::stream(seed, Domain::Expectation, rng::index(&idx));
            let mut lat = Lattice::new(nx, nz);
            let mut rejected = 0;
            for _ in 0..mc.chunk {
                let ((phi, varphi), rej) = sample_angles(&mut g, mean, sigma);
                rejected += rej;
                lat.add_angles(phi, varphi);
            }
            chunks.push((lat, mc.chunk, rejected));
        }
        let half = chunks.len() / 2;
        let reduce = |part: &[(Lattice, usize, usize)]| {
            let mut acc = Lattice::new(nx, nz);
            let mut count = 0;
            for (l, c, _) in part {
                acc.merge(l);
                count += c;
            }
            (acc, count)
        };
        let (all, count) = reduce(&chunks);
        let (second, first) = all.moments(count);
        let split = if half > 0 {
            let (la, ca) = reduce(&chunks[..half]);
            let (lb, cb) = reduce(&chunks[half..]);
            let (ma, _) = la.moments(ca);
            let (mb, _) = lb.moments(cb);
            fro(&(ma - mb)) / fro(&second).max(f64::MIN_POSITIVE)
        } else {
            f64::INFINITY
        };
        let rejected: usize = chunks.iter().map(|c| c.2).sum();
        let report = McReport {
            samples: count,
            truncation_rate: rejected as f64 / (rejected + count) as f64,
            split_half: split,
        };
        if split <= mc.split_half_tol || target >= mc.max_samples {
            return Ok((second, first, report));
        }
        target = (target * 2).min(mc.max_samples);
    }
}

/// Correlation `E[h₂ₖ h₂ₖᴴ]` of user `k` (indoor users first). Indoor users
/// and zero-variance statistics return the exact outer product.
pub fn estimate_user_correlation(
    ch: &ChannelSet,
    k: usize,
    stage: Stage,
    stats: &AngleStats,
    mc: &McSettings,
    seed: u64,
) -> Result<(HermitianMatrix, McReport)> {
    if k >= ch.k() {
        return Err(Error::invalid("k", format!("user {k} out of range")));
    }
    if !ch.is_outdoor(k) {
        return Ok((
            HermitianMatrix::outer(&ch.indoor_channel(k)),
            McReport::default(),
        ));
    }
    let j = k - ch.k_t();
    let mean = *stats
        .means
        .get(j)
        .ok_or_else(|| Error::invalid("stats", "missing outdoor angle estimate"))?;
    if stats.is_degenerate() {
        return Ok((
            HermitianMatrix::outer(&ch.outdoor_channel(j, mean.0, mean.1)),
            McReport::default(),
        ));
    }
    let (second, first, report) = steering_moments(
        ch.nx,
        ch.nz,
        mean,
        stats.sigma,
        mc,
        seed,
        &[0, stage as u64, j as u64],
    )?;
    let mu = ch.mu_out;
    let (a, b) = if mu.is_infinite() {
        (1.0, 0.0)
    } else {
        ((mu / (1.0 + mu)).sqrt(), (1.0 / (1.0 + mu)).sqrt())
    };
    let g = CVec::from(ch.h2_out_nlos.row(j).adjoint());
    let cross = &first * g.adjoint() * Complex64::new(a * b, 0.0);
    let r = second * Complex64::new(a * a, 0.0)
        + &cross
        + cross.adjoint()
        + (&g * g.adjoint()) * Complex64::new(b * b, 0.0);
    let r = r / Complex64::new(ch.varsigma_out[j], 0.0);
    Ok((HermitianMatrix::from_hermitian_part(&r), report))
}

/// `E[‖a_S‖² a_STAR a_STARᴴ] = N_s E[a_STAR a_STARᴴ]` for outdoor user `j`.
pub fn estimate_sensing_correlation(
    ch: &ChannelSet,
    j: usize,
    ns: usize,
    stats: &AngleStats,
    mc: &McSettings,
    seed: u64,
) -> Result<(HermitianMatrix, McReport)> {
    let mean = *stats
        .means
        .get(j)
        .ok_or_else(|| Error::invalid("stats", "missing outdoor angle estimate"))?;
    let (second, _, report) = steering_moments(
        ch.nx,
        ch.nz,
        mean,
        stats.sigma,
        mc,
        seed,
        &[1, Stage::Preparation as u64, j as u64],
    )?;
    Ok((
        HermitianMatrix::from_hermitian_part(&(second * Complex64::new(ns as f64, 0.0))),
        report,
    ))
}

fn check_dims(r: &HermitianMatrix, h1: &CMat, cols: usize) -> Result<()> {
    if h1.nrows() != r.dim() {
        return Err(Error::DimensionMismatch {
            context: "expectation matrix vs H1 rows",
            expected: r.dim(),
            got: h1.nrows(),
        });
    }
    if h1.ncols() != cols {
        return Err(Error::DimensionMismatch {
            context: "beamformer vs H1 columns",
            expected: h1.ncols(),
            got: cols,
        });
    }
    Ok(())
}

/// `E_{k,h} = R(k) ⊙ (H₁ w_h w_hᴴ H₁ᴴ)ᵀ`.
pub fn build_e(r: &HermitianMatrix, h1: &CMat, w_h: &CVec) -> Result<HermitianMatrix> {
    check_dims(r, h1, w_h.len())?;
    let g = h1 * w_h;
    Ok(r.hadamard_transposed(&HermitianMatrix::outer(&g)))
}

/// `D_k = R_sense(k) ⊙ (H₁ W Wᴴ H₁ᴴ)ᵀ`.
pub fn build_d(r_sense: &HermitianMatrix, h1: &CMat, w: &CMat) -> Result<HermitianMatrix> {
    check_dims(r_sense, h1, w.nrows())?;
    let g = h1 * w;
    Ok(r_sense.hadamard_transposed(&HermitianMatrix::from_hermitian_part(&(&g * g.adjoint()))))
}

/// `C_k = ρ_k² Σ_h E_{k,h}`.
pub fn build_c(rho_k: f64, e_row: &[HermitianMatrix]) -> Result<HermitianMatrix> {
    let n = e_row.first().map_or(0, |e| e.dim());
    let mut acc = HermitianMatrix::zeros(n);
    for e in e_row {
        if e.dim() != n {
            return Err(Error::DimensionMismatch {
                context: "C accumulation",
                expected: n,
                got: e.dim(),
            });
        }
        acc = acc.add(e);
    }
    Ok(acc.scale(rho_k * rho_k))
}

/// Cached expectation matrices of one stage.
#[derive(Clone, Debug)]
pub struct ExpectationSet {
    pub stage: Stage,
    /// `R(k)` for every user, indoor first.
    pub r: Vec<HermitianMatrix>,
    /// `R_sense(j)` per outdoor user; empty outside the preparation stage.
    pub r_sense: Vec<HermitianMatrix>,
    pub reports: Vec<McReport>,
}

impl ExpectationSet {
    pub fn build(
        ch: &ChannelSet,
        stage: Stage,
        stats: &AngleStats,
        with_sensing: bool,
        ns: usize,
        mc: &McSettings,
        seed: u64,
    ) -> Result<Self> {
        let mut r = Vec::with_capacity(ch.k());
        let mut reports = Vec::new();
        for k in 0..ch.k() {
            let (m, rep) = estimate_user_correlation(ch, k, stage, stats, mc, seed)?;
            r.push(m);
            reports.push(rep);
        }
        let mut r_sense = Vec::new();
        if with_sensing {
            for j in 0..ch.k_r() {
                let (m, rep) = estimate_sensing_correlation(ch, j, ns, stats, mc, seed)?;
                r_sense.push(m);
                reports.push(rep);
            }
        }
        Ok(Self {
            stage,
            r,
            r_sense,
            reports,
        })
    }

    pub fn max_truncation_rate(&self) -> f64 {
        self.reports
            .iter()
            .map(|r| r.truncation_rate)
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channels, Geometry};
    use crate::config::SystemConfig;
    use crate::numerics::c;

    #[test]
    fn lattice_moments_match_direct_outer_product() {
        let (nx, nz) = (3, 2);
        let mut lat = Lattice::new(nx, nz);
        lat.add_angles(0.7, -0.3);
        lat.add_angles(1.9, 0.4);
        let (second, first) = lat.moments(2);
        let a1 = steering_star(0.7, -0.3, nx, nz).unwrap();
        let a2 = steering_star(1.9, 0.4, nx, nz).unwrap();
        let direct = (&a1 * a1.adjoint() + &a2 * a2.adjoint()) * c(0.5, 0.0);
        assert!(fro(&(second - direct)) < 1e-12);
        assert!((first - (a1 + a2) * c(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_sigma_is_exact_outer_product() {
        let cfg = SystemConfig::default();
        let g = Geometry::sample(&cfg, 2).unwrap();
        let ch = sample_channels(&cfg, &g, 2).unwrap();
        let stats = AngleStats {
            means: ch.outdoor_angles.clone(),
            sigma: (0.0, 0.0),
        };
        let (r, rep) = estimate_user_correlation(
            &ch,
            3,
            Stage::Communication,
            &stats,
            &McSettings::default(),
            1,
        )
        .unwrap();
        let h = ch.outdoor_nominal(1);
        assert!(fro(&(r.as_matrix() - &h * h.adjoint())) <= 1e-12 * fro(r.as_matrix()));
        assert_eq!(rep.samples, 0);
    }

    #[test]
    fn sensing_trace_is_ns_times_n() {
        let cfg = SystemConfig::default();
        let g = Geometry::sample(&cfg, 3).unwrap();
        let ch = sample_channels(&cfg, &g, 3).unwrap();
        let stats = AngleStats {
            means: ch.outdoor_angles.clone(),
            sigma: (1f64.to_radians(), 1f64.to_radians()),
        };
        let mc = McSettings {
            samples: 5000,
            ..McSettings::default()
        };
        let (r, _) = estimate_sensing_correlation(&ch, 0, 8, &stats, &mc, 9).unwrap();
        assert!((r.trace() - 160.0).abs() < 1e-9);
    }

    #[test]
    fn zero_inputs_give_zero_matrices() {
        let r = HermitianMatrix::identity(3);
        let h1 = CMat::from_element(3, 2, c(1.0, 0.5));
        assert_eq!(
            build_e(&r, &h1, &CVec::zeros(2)).unwrap(),
            HermitianMatrix::zeros(3)
        );
        assert_eq!(
            build_d(&r, &h1, &CMat::zeros(2, 2)).unwrap(),
            HermitianMatrix::zeros(3)
        );
        let e = build_e(&r, &h1, &CVec::from_element(2, c(1.0, 0.0))).unwrap();
        assert_eq!(build_c(0.0, &[e]).unwrap(), HermitianMatrix::zeros(3));
        assert!(build_e(&r, &h1, &CVec::zeros(3)).is_err());
    }
}
