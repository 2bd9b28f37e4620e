//! Scenario, physical, and solver parameters. Every default reproduces the
//! reference simulation setting; fields the reference setting leaves open
//! (path-loss exponents, η, Monte-Carlo sizes) carry documented assumptions.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum Scheme {
    #[serde(rename = "proposed")]
    Proposed,
    #[serde(rename = "cps-star")]
    CpsStar,
    #[serde(rename = "ips-star")]
    IpsStar,
    #[serde(rename = "nostat-star")]
    NoStatStar,
    #[serde(rename = "fixed-star")]
    FixedStar,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Proposed,
        Scheme::CpsStar,
        Scheme::IpsStar,
        Scheme::NoStatStar,
        Scheme::FixedStar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::CpsStar => "cps-star",
            Scheme::IpsStar => "ips-star",
            Scheme::NoStatStar => "nostat-star",
            Scheme::FixedStar => "fixed-star",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == key || sc.name().trim_end_matches("-star") == key)
            .ok_or_else(|| Error::UnknownScheme(s.to_string()))
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    /// BS antennas.
    pub m: usize,
    /// Metasurface elements along x.
    pub nx: usize,
    /// Metasurface elements along z.
    pub nz: usize,
    /// Sensor elements.
    pub ns: usize,
    /// Indoor (transmission-side) users.
    pub k_t: usize,
    /// Outdoor (reflection-side) users, which are also sensing targets.
    pub k_r: usize,
    pub p_max_dbm: f64,
    pub noise_dbm: f64,
    pub sensor_noise_dbm: f64,
    /// Fraction of the slot spent in the preparation stage.
    pub eta: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            m: 8,
            nx: 5,
            nz: 4,
            ns: 8,
            k_t: 2,
            k_r: 2,
            p_max_dbm: 20.0,
            noise_dbm: -110.0,
            sensor_noise_dbm: -110.0,
            eta: 0.3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub mu_bs: f64,
    pub mu_in: f64,
    pub mu_out: f64,
    /// Path loss at the reference distance, in dB.
    pub ref_loss_db: f64,
    pub d0: f64,
    /// Path-loss exponents per link (assumed; not part of the reference setting).
    pub kappa_bs: f64,
    pub kappa_in: f64,
    pub kappa_out: f64,
    pub bs_position: [f64; 3],
    pub radius_min: f64,
    pub radius_max: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            mu_bs: 2.0,
            mu_in: 2.0,
            mu_out: 2.0,
            ref_loss_db: 30.0,
            d0: 1.0,
            kappa_bs: 2.2,
            kappa_in: 2.2,
            kappa_out: 2.2,
            bs_position: [20.0, 30.0, 0.0],
            radius_min: 30.0,
            radius_max: 50.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensingSection {
    pub delta_db: f64,
    /// `|α_k|²` in dB, common to all targets.
    pub alpha_db: f64,
}

impl Default for SensingSection {
    fn default() -> Self {
        Self {
            delta_db: 10.0,
            alpha_db: -10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionSection {
    /// Energy-splitting elements in the preparation stage.
    pub n_part: usize,
}

impl Default for PartitionSection {
    fn default() -> Self {
        Self { n_part: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UncertaintySection {
    /// Standard deviation of the elevation-type angle error φ, degrees.
    pub sigma_phi_deg: f64,
    /// Standard deviation of the azimuth-type angle error ϕ, degrees.
    pub sigma_varphi_deg: f64,
}

impl Default for UncertaintySection {
    fn default() -> Self {
        Self {
            sigma_phi_deg: 0.5,
            sigma_varphi_deg: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSection {
    pub samples: usize,
    pub max_samples: usize,
    /// Split-half relative Frobenius distance accepted before doubling.
    pub split_half_tol: f64,
    /// True-angle draws used to evaluate a finished design.
    pub eval_samples: usize,
    /// Samples per independent stream.
    pub chunk: usize,
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        Self {
            samples: 50_000,
            max_samples: 400_000,
            split_half_tol: 0.005,
            eval_samples: 2000,
            chunk: 4096,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub sdp_tol: f64,
    pub sdp_max_iter: usize,
    pub admm_max_iter: usize,
    pub bcd_tol: f64,
    pub bcd_max_iter: usize,
    pub sca_tol: f64,
    pub sca_max_iter: usize,
    pub randomizations: usize,
    pub rank_one_threshold: f64,
    /// Per-user rate floor of the phase-independent baseline, bit/s/Hz.
    pub ips_min_rate: f64,
    /// Outer iterations of the coupling-relaxed warm start; 0 disables it.
    pub warm_start_iters: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            sdp_tol: 1e-7,
            sdp_max_iter: 200,
            admm_max_iter: 5000,
            bcd_tol: 1e-3,
            bcd_max_iter: 30,
            sca_tol: 1e-4,
            sca_max_iter: 30,
            randomizations: 200,
            rank_one_threshold: 1e-6,
            ips_min_rate: 0.5,
            warm_start_iters: 12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub scheme: Scheme,
    /// Write zero wall-clock times to CSV so repeated runs are byte-identical.
    pub reproducible: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 1,
            scheme: Scheme::Proposed,
            reproducible: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub system: SystemSection,
    pub channel: ChannelSection,
    pub sensing: SensingSection,
    pub partition: PartitionSection,
    pub uncertainty: UncertaintySection,
    pub monte_carlo: MonteCarloSection,
    pub solver: SolverSection,
    pub run: RunSection,
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Near-square `nx × nz` factorization with `nx ≥ nz`.
pub fn factor_elements(n: usize) -> (usize, usize) {
    let mut best = (n, 1);
    for nz in 1..=n {
        if nz * nz > n {
            break;
        }
        if n % nz == 0 {
            best = (n / nz, nz);
        }
    }
    best
}

impl SystemConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: SystemConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.to_toml_string().as_bytes());
        hex::encode(h.finalize())
    }

    pub fn n(&self) -> usize {
        self.system.nx * self.system.nz
    }

    pub fn k(&self) -> usize {
        self.system.k_t + self.system.k_r
    }

    pub fn p_max(&self) -> f64 {
        dbm_to_watts(self.system.p_max_dbm)
    }

    pub fn noise(&self) -> f64 {
        dbm_to_watts(self.system.noise_dbm)
    }

    pub fn sensor_noise(&self) -> f64 {
        dbm_to_watts(self.system.sensor_noise_dbm)
    }

    pub fn delta(&self) -> f64 {
        db_to_linear(self.sensing.delta_db)
    }

    pub fn alpha_sq(&self) -> f64 {
        db_to_linear(self.sensing.alpha_db)
    }

    pub fn sigma_rad(&self) -> (f64, f64) {
        (
            self.uncertainty.sigma_phi_deg.to_radians(),
            self.uncertainty.sigma_varphi_deg.to_radians(),
        )
    }

    /// Sets the element count, keeping a near-square layout.
    pub fn set_elements(&mut self, n: usize) {
        let (nx, nz) = factor_elements(n);
        self.system.nx = nx;
        self.system.nz = nz;
    }

    /// Sets the total user count, split evenly between the two sides.
    pub fn set_users(&mut self, k: usize) {
        self.system.k_r = k / 2;
        self.system.k_t = k - k / 2;
    }

    /// Applies `section.key=value` overrides, validating once at the end.
    /// Values are read as TOML literals, falling back to bare strings.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, assignments: &[S]) -> Result<()> {
        let mut doc: toml::Table =
            toml::from_str(&self.to_toml_string()).map_err(|e| Error::Config(e.to_string()))?;
        for a in assignments {
            let a = a.as_ref();
            let (path, raw) = a
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{a}` is not key=value")))?;
            let (section, key) = path.trim().split_once('.').ok_or_else(|| {
                Error::Config(format!("override key `{path}` is not section.key"))
            })?;
            let raw = raw.trim();
            let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(raw.to_string()));
            let table = doc
                .get_mut(section)
                .and_then(toml::Value::as_table_mut)
                .ok_or_else(|| Error::Config(format!("unknown section `{section}`")))?;
            if !table.contains_key(key) {
                return Err(Error::Config(format!("unknown key `{section}.{key}`")));
            }
            table.insert(key.to_string(), value);
        }
        let text = toml::to_string(&doc).map_err(|e| Error::Config(e.to_string()))?;
        *self = Self::from_toml_str(&text)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.system;
        let bad = |name: &'static str, why: &str| Err(Error::invalid(name, why));
        if s.m == 0 || s.nx == 0 || s.nz == 0 || s.ns == 0 {
            return bad("system", "array sizes must be positive");
        }
        if s.k_t + s.k_r == 0 {
            return bad("system", "at least one user is required");
        }
        if !(0.0..=1.0).contains(&s.eta) {
            return bad("eta", "must lie in [0, 1]");
        }
        for v in [s.p_max_dbm, s.noise_dbm, s.sensor_noise_dbm] {
            if !v.is_finite() {
                return bad("system", "power levels must be finite");
            }
        }
        let c = &self.channel;
        if [c.mu_bs, c.mu_in, c.mu_out].iter().any(|m| !(*m >= 0.0)) {
            return bad("channel", "Rician factors must be non-negative");
        }
        if !(c.d0 > 0.0) || !(c.radius_min > 0.0) || !(c.radius_max >= c.radius_min) {
            return bad("channel", "distances must be positive and ordered");
        }
        if self.partition.n_part > self.n() {
            return bad("n_part", "cannot exceed the element count");
        }
        let u = &self.uncertainty;
        if !(u.sigma_phi_deg >= 0.0) || !(u.sigma_varphi_deg >= 0.0) {
            return bad("uncertainty", "standard deviations must be non-negative");
        }
        let mc = &self.monte_carlo;
        if mc.samples == 0 || mc.chunk == 0 || mc.eval_samples == 0 || mc.max_samples < mc.samples {
            return bad(
                "monte_carlo",
                "sample counts must be positive and max >= samples",
            );
        }
        let sv = &self.solver;
        if !(sv.sdp_tol > 0.0) || !(sv.bcd_tol > 0.0) || !(sv.sca_tol > 0.0) {
            return bad("solver", "tolerances must be positive");
        }
        if sv.bcd_max_iter == 0 || sv.sca_max_iter == 0 || sv.sdp_max_iter == 0 {
            return bad("solver", "iteration caps must be positive");
        }
        Ok(())
    }
}
