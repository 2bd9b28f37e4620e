use serde::{Deserialize, Serialize};

use super::{run_jobs, scheme_plan, RunRecord};
use crate::config::{Scheme, SystemConfig};
use crate::error::{Error, Result};
use crate::protocol::run_slot_with;

/// Swept parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Transmit budget in dBm.
    Power,
    /// Metasurface element count.
    Elements,
    /// Total user count, split evenly between the two sides.
    Users,
    /// Angle-estimation standard deviation in degrees, both angles.
    Error,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Power => "power",
            Axis::Elements => "elements",
            Axis::Users => "users",
            Axis::Error => "error",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "power" => Ok(Axis::Power),
            "elements" | "n" => Ok(Axis::Elements),
            "users" | "k" => Ok(Axis::Users),
            "error" | "sigma" => Ok(Axis::Error),
            other => Err(Error::UnknownAxis(other.to_string())),
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn count(value: f64, what: &'static str) -> Result<usize> {
    if value >= 1.0 && value.fract() == 0.0 && value.is_finite() {
        Ok(value as usize)
    } else {
        Err(Error::invalid(
            what,
            format!("{value} is not a positive integer"),
        ))
    }
}

/// Configuration at one grid point. Changing the element count keeps the
/// energy-splitting share `N_part/N` of the base configuration.
pub fn apply_axis(cfg: &SystemConfig, axis: Axis, value: f64) -> Result<SystemConfig> {
    let mut c = cfg.clone();
    match axis {
        Axis::Power => c.system.p_max_dbm = value,
        Axis::Elements => {
            let n = count(value, "elements")?;
            let share = cfg.partition.n_part as f64 / cfg.n() as f64;
            c.set_elements(n);
            c.partition.n_part = ((share * n as f64).round() as usize).min(n);
        }
        Axis::Users => c.set_users(count(value, "users")?),
        Axis::Error => {
            c.uncertainty.sigma_phi_deg = value;
            c.uncertainty.sigma_varphi_deg = value;
        }
    }
    c.validate()?;
    Ok(c)
}

/// Every `(grid value, scheme, seed)` combination, grid-major.
pub fn sweep(
    axis: Axis,
    grid: &[f64],
    cfg: &SystemConfig,
    schemes: &[Scheme],
    seeds: &[u64],
) -> Result<Vec<RunRecord>> {
    let configs = grid
        .iter()
        .map(|&v| apply_axis(cfg, axis, v).map(|c| (v, c)))
        .collect::<Result<Vec<_>>>()?;
    let mut jobs = Vec::new();
    for (i, (v, _)) in configs.iter().enumerate() {
        for &s in schemes {
            for &seed in seeds {
                jobs.push((i, *v, s, seed));
            }
        }
    }
    run_jobs(jobs, |(i, v, scheme, seed)| {
        let c = &configs[i].1;
        let slot = run_slot_with(c, &scheme_plan(scheme, c), seed)?;
        let mut r = RunRecord::new(c, scheme, slot);
        r.axis = Some(axis);
        r.axis_value = Some(v);
        Ok(r)
    })
}

/// Mean and standard error of the total rate per `(scheme, grid value)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scheme: Scheme,
    pub axis_value: Option<f64>,
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

/// Groups in order of first appearance.
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(Scheme, Option<f64>)> = Vec::new();
    for r in records {
        let key = (r.scheme, r.axis_value);
        if !keys
            .iter()
            .any(|k| k.0 == key.0 && k.1.map(f64::to_bits) == key.1.map(f64::to_bits))
        {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(scheme, v)| {
            let xs: Vec<f64> = records
                .iter()
                .filter(|r| {
                    r.scheme == scheme && r.axis_value.map(f64::to_bits) == v.map(f64::to_bits)
                })
                .map(|r| r.rate_total)
                .collect();
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = if xs.len() > 1 {
                xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            SummaryRow {
                scheme,
                axis_value: v,
                mean,
                stderr: (var / n).sqrt(),
                count: xs.len(),
            }
        })
        .collect()
}
