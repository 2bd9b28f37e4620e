use std::io::{Read, Write};
use std::path::Path;

use super::RunRecord;
use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 11] = [
    "scheme",
    "seed",
    "axis_value",
    "rate_total",
    "rate_prep",
    "rate_comm",
    "assnr_min",
    "power",
    "iters",
    "wall_ms",
    "feasible",
];

/// One parsed CSV line.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub scheme: String,
    pub seed: u64,
    pub axis_value: Option<f64>,
    pub rate_total: f64,
    pub rate_prep: f64,
    pub rate_comm: f64,
    pub assnr_min: f64,
    pub power: f64,
    pub iters: usize,
    pub wall_ms: f64,
    pub feasible: bool,
}

impl CsvRow {
    pub fn from_record(r: &RunRecord, reproducible: bool) -> Self {
        Self {
            scheme: r.scheme.name().to_string(),
            seed: r.seed,
            axis_value: r.axis_value,
            rate_total: r.rate_total,
            rate_prep: r.rate_prep,
            rate_comm: r.rate_comm,
            assnr_min: r.assnr_min,
            power: r.power,
            iters: r.iters,
            wall_ms: if reproducible { 0.0 } else { r.wall_ms },
            feasible: r.feasible,
        }
    }

    fn fields(&self) -> [String; 11] {
        [
            self.scheme.clone(),
            self.seed.to_string(),
            self.axis_value.map_or_else(String::new, |v| v.to_string()),
            self.rate_total.to_string(),
            self.rate_prep.to_string(),
            self.rate_comm.to_string(),
            self.assnr_min.to_string(),
            self.power.to_string(),
            self.iters.to_string(),
            self.wall_ms.to_string(),
            self.feasible.to_string(),
        ]
    }
}

/// Writes the fixed 11-column table. With `reproducible`, wall times are
/// written as zero so identical runs give identical bytes.
pub fn write_csv<W: Write>(records: &[RunRecord], reproducible: bool, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        w.write_record(CsvRow::from_record(r, reproducible).fields())?;
    }
    w.flush()?;
    Ok(())
}

fn parse<T: std::str::FromStr>(s: &str, col: &str) -> Result<T> {
    s.parse::<T>()
        .map_err(|_| Error::Config(format!("column {col}: cannot parse {s:?}")))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<CsvRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != CSV_COLUMNS {
        return Err(Error::Config(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        rows.push(CsvRow {
            scheme: f(0).to_string(),
            seed: parse(f(1), "seed")?,
            axis_value: if f(2).is_empty() {
                None
            } else {
                Some(parse(f(2), "axis_value")?)
            },
            rate_total: parse(f(3), "rate_total")?,
            rate_prep: parse(f(4), "rate_prep")?,
            rate_comm: parse(f(5), "rate_comm")?,
            assnr_min: parse(f(6), "assnr_min")?,
            power: parse(f(7), "power")?,
            iters: parse(f(8), "iters")?,
            wall_ms: parse(f(9), "wall_ms")?,
            feasible: parse(f(10), "feasible")?,
        });
    }
    Ok(rows)
}

/// Full records, traces included, as pretty JSON.
pub fn write_json(records: &[RunRecord], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(f), records)?;
    Ok(())
}
