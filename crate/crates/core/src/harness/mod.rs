//! Baseline schemes, seed batches, parameter sweeps and result files.

mod emit;
mod selftest;
mod sweep;

pub use emit::{read_csv, write_csv, write_json, CsvRow, CSV_COLUMNS};
pub use selftest::{selftest, CheckResult};
pub use sweep::{apply_axis, summarize, sweep, Axis, SummaryRow};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Scheme, SystemConfig};
use crate::error::Result;
use crate::protocol::{run_slot_with, PartitionPlan, SlotPlan, SlotResult, StagePlan};
use crate::star_coeffs::ElementMode;
use crate::Stage;

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "STARISAC_WORKERS";

/// Half transmit-only elements followed by half reflect-only elements.
pub fn fixed_modes(n: usize) -> Vec<ElementMode> {
    (0..n)
        .map(|i| {
            if i < n / 2 {
                ElementMode::TransmitOnly
            } else {
                ElementMode::ReflectOnly
            }
        })
        .collect()
}

/// Slot plan realizing `scheme` on top of the common pipeline.
pub fn scheme_plan(scheme: Scheme, cfg: &SystemConfig) -> SlotPlan {
    let n = cfg.n();
    let all_split = PartitionPlan::Fixed(vec![ElementMode::EnergySplit; n]);
    match scheme {
        Scheme::Proposed => SlotPlan::proposed(cfg),
        Scheme::NoStatStar => SlotPlan {
            design_sigma: (0.0, 0.0),
            ..SlotPlan::proposed(cfg)
        },
        Scheme::CpsStar => SlotPlan {
            prep: StagePlan {
                stage: Stage::Preparation,
                sensing: false,
                coupled: true,
                partition: all_split,
                min_rate: None,
            },
            comm: None,
            design_sigma: (0.0, 0.0),
        },
        Scheme::IpsStar => SlotPlan {
            prep: StagePlan {
                stage: Stage::Preparation,
                sensing: false,
                coupled: false,
                partition: all_split,
                min_rate: Some(cfg.solver.ips_min_rate),
            },
            comm: None,
            design_sigma: (0.0, 0.0),
        },
        Scheme::FixedStar => SlotPlan {
            prep: StagePlan {
                partition: PartitionPlan::Fixed(fixed_modes(n)),
                ..StagePlan::preparation(cfg)
            },
            comm: Some(StagePlan {
                partition: PartitionPlan::Fixed(fixed_modes(n)),
                ..StagePlan::communication(cfg)
            }),
            design_sigma: cfg.sigma_rad(),
        },
    }
}

/// One `(config, seed, scheme)` run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub scheme: Scheme,
    pub seed: u64,
    pub axis: Option<Axis>,
    pub axis_value: Option<f64>,
    pub rate_total: f64,
    pub rate_prep: f64,
    pub rate_comm: f64,
    pub assnr_min: f64,
    pub power: f64,
    pub iters: usize,
    pub converged: bool,
    pub wall_ms: f64,
    pub feasible: bool,
    pub slot: SlotResult,
}

impl RunRecord {
    pub fn new(cfg: &SystemConfig, scheme: Scheme, slot: SlotResult) -> Self {
        Self {
            config_hash: cfg.hash(),
            scheme,
            seed: slot.seed,
            axis: None,
            axis_value: None,
            rate_total: slot.rate_total,
            rate_prep: slot.rate_prep,
            rate_comm: slot.rate_comm,
            assnr_min: slot.assnr_min(),
            power: slot.power,
            iters: slot.iterations(),
            converged: slot.converged,
            wall_ms: slot.wall_ms,
            feasible: slot.feasibility.feasible,
            slot,
        }
    }
}

/// Worker count from [`WORKERS_ENV`], defaulting to the available cores.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs `jobs` on a bounded pool; results keep job order.
pub fn run_jobs<T, R, F>(jobs: Vec<T>, f: F) -> Result<Vec<R>>
where
    T: Send,
    R: Send,
    F: Fn(T) -> Result<R> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| crate::Error::Config(format!("worker pool: {e}")))?;
    pool.install(|| jobs.into_par_iter().map(&f).collect())
}

/// Runs `scheme` for every seed.
pub fn run_scheme(scheme: Scheme, cfg: &SystemConfig, seeds: &[u64]) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let plan = scheme_plan(scheme, cfg);
    run_jobs(seeds.to_vec(), |seed| {
        run_slot_with(cfg, &plan, seed).map(|slot| RunRecord::new(cfg, scheme, slot))
    })
}

/// Runs every scheme for every seed, scheme-major.
pub fn run_baselines(cfg: &SystemConfig, seeds: &[u64]) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let jobs: Vec<(Scheme, u64)> = Scheme::ALL
        .iter()
        .flat_map(|&s| seeds.iter().map(move |&x| (s, x)))
        .collect();
    run_jobs(jobs, |(scheme, seed)| {
        run_slot_with(cfg, &scheme_plan(scheme, cfg), seed)
            .map(|slot| RunRecord::new(cfg, scheme, slot))
    })
}

/// Seeds `1..=count`.
pub fn seed_range(count: usize) -> Vec<u64> {
    (1..=count as u64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_modes_split_in_half() {
        let m = fixed_modes(4);
        assert_eq!(
            m,
            vec![
                ElementMode::TransmitOnly,
                ElementMode::TransmitOnly,
                ElementMode::ReflectOnly,
                ElementMode::ReflectOnly
            ]
        );
    }

    #[test]
    fn plans_follow_scheme_traits() {
        let cfg = SystemConfig::default();
        assert!(scheme_plan(Scheme::CpsStar, &cfg).comm.is_none());
        assert!(!scheme_plan(Scheme::IpsStar, &cfg).prep.coupled);
        assert_eq!(
            scheme_plan(Scheme::NoStatStar, &cfg).design_sigma,
            (0.0, 0.0)
        );
        assert!(scheme_plan(Scheme::Proposed, &cfg).prep.sensing);
    }
}
