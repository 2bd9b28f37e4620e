use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use starisac::harness::{self, Axis, RunRecord};
use starisac::{Scheme, SystemConfig};

/// Two-stage STAR-RIS ISAC optimizer.
#[derive(Parser, Debug)]
#[command(name = "starisac", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scheme for one seed.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scheme: Option<Scheme>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sweep one parameter over a grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        axis: Axis,
        /// Comma-separated grid values.
        #[arg(long)]
        grid: String,
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        /// Schemes to run; repeat or comma-separate. Defaults to all.
        #[arg(long, value_delimiter = ',')]
        scheme: Vec<Scheme>,
    },
    /// Run every scheme over the same seeds.
    Baselines {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        seeds: usize,
    },
    /// Run the built-in oracle checks.
    Selftest,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration; defaults apply to anything missing.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `section.key=value` override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// JSON destination with full traces.
    #[arg(long)]
    json: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> anyhow::Result<SystemConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                SystemConfig::from_file(p).with_context(|| format!("loading {}", p.display()))?
            }
            None => SystemConfig::default(),
        };
        cfg.apply_overrides(&self.overrides)?;
        Ok(cfg)
    }

    fn emit(&self, cfg: &SystemConfig, records: &[RunRecord]) -> anyhow::Result<()> {
        let reproducible = cfg.run.reproducible;
        match &self.csv {
            Some(p) => harness::write_csv(records, reproducible, File::create(p)?)?,
            None => harness::write_csv(records, reproducible, io::stdout().lock())?,
        }
        if let Some(p) = &self.json {
            harness::write_json(records, p)?;
        }
        Ok(())
    }
}

fn parse_grid(s: &str) -> anyhow::Result<Vec<f64>> {
    let grid = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("grid value `{t}`"))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    if grid.is_empty() {
        bail!("empty grid");
    }
    Ok(grid)
}

fn summarize(records: &[RunRecord]) {
    let mut err = io::stderr().lock();
    for row in harness::summarize(records) {
        let at = row
            .axis_value
            .map(|v| format!(" @ {v}"))
            .unwrap_or_default();
        let _ = writeln!(
            err,
            "{}{at}: mean rate {:.4} ± {:.4} over {} seeds",
            row.scheme, row.mean, row.stderr, row.count
        );
    }
    let bad = records.iter().filter(|r| !r.feasible).count();
    if bad > 0 {
        let _ = writeln!(err, "{bad} run(s) failed the feasibility audit");
    }
}

/// Exit status: 0 success, 2 infeasible, 1 other errors.
fn execute(cli: Cli) -> anyhow::Result<u8> {
    let (common, cfg, records) = match cli.command {
        Command::Selftest => {
            let results = harness::selftest();
            let mut out = io::stdout().lock();
            for r in &results {
                writeln!(
                    out,
                    "{} {}: {}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.detail
                )?;
            }
            return Ok(if results.iter().all(|r| r.passed) {
                0
            } else {
                1
            });
        }
        Command::Run {
            common,
            scheme,
            seed,
        } => {
            let cfg = common.load()?;
            let scheme = scheme.unwrap_or(cfg.run.scheme);
            let seed = seed.unwrap_or(cfg.run.seed);
            let records = harness::run_scheme(scheme, &cfg, &[seed])?;
            (common, cfg, records)
        }
        Command::Sweep {
            common,
            axis,
            grid,
            seeds,
            scheme,
        } => {
            let cfg = common.load()?;
            let schemes = if scheme.is_empty() {
                Scheme::ALL.to_vec()
            } else {
                scheme
            };
            let records = harness::sweep(
                axis,
                &parse_grid(&grid)?,
                &cfg,
                &schemes,
                &harness::seed_range(seeds),
            )?;
            (common, cfg, records)
        }
        Command::Baselines { common, seeds } => {
            let cfg = common.load()?;
            let records = harness::run_baselines(&cfg, &harness::seed_range(seeds))?;
            (common, cfg, records)
        }
    };
    common.emit(&cfg, &records)?;
    summarize(&records);
    Ok(if records.iter().all(|r| r.feasible) {
        0
    } else {
        2
    })
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let infeasible = e
                .downcast_ref::<starisac::Error>()
                .is_some_and(starisac::Error::is_infeasible);
            ExitCode::from(if infeasible { 2 } else { 1 })
        }
    }
}
