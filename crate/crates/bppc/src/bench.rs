//! Batch runs over instance sets with best-known-solution comparison.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::time::Instant;

use bppc_core::{run_ils, validate_packing, Clock, Instance, Mode, SearchParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Wall clock started at construction.
#[derive(Debug, Clone, Copy)]
pub struct Stopwatch(Instant);

impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch(Instant::now())
    }
}

impl Clock for Stopwatch {
    fn elapsed(&self) -> std::time::Duration {
        self.0.elapsed()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("run of {instance} with seed {seed} returned an invalid packing: {reason}")]
    Invalid { instance: String, seed: u64, reason: String },
    #[error("best-known-solution file: {0}")]
    Bks(#[from] csv::Error),
    #[error("best-known value for {0} must be positive")]
    ZeroBks(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub instance: String,
    pub n: usize,
    pub density: f64,
    pub k_lb: usize,
    pub bins: usize,
    pub z_bks: Option<usize>,
    /// `100 * (bins - z_bks) / z_bks`.
    pub gap: Option<f64>,
    pub elapsed: f64,
    pub seed: u64,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
struct BksRecord {
    name: String,
    z_bks: usize,
    #[serde(default)]
    #[allow(dead_code)]
    opt: Option<u8>,
}

/// Reads `name,z_bks[,opt]` rows, with a header line.
pub fn read_bks<R: Read>(reader: R) -> Result<BTreeMap<String, usize>, BenchError> {
    let mut map = BTreeMap::new();
    let mut csv = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(reader);
    for record in csv.deserialize() {
        let record: BksRecord = record?;
        if record.z_bks == 0 {
            return Err(BenchError::ZeroBks(record.name));
        }
        map.insert(record.name, record.z_bks);
    }
    Ok(map)
}

pub fn gap(bins: usize, z_bks: usize) -> f64 {
    100.0 * (bins as f64 - z_bks as f64) / z_bks as f64
}

/// Runs every instance `repeats` times with seeds `params.seed + r`, in
/// parallel. Every packing is validated; rows come back ordered by
/// instance then seed.
pub fn run_benchmark(
    instances: &[Instance],
    params: &SearchParams,
    repeats: u64,
    bks: &BTreeMap<String, usize>,
) -> Result<Vec<BenchmarkRow>, BenchError> {
    let jobs: Vec<(usize, u64)> = (0..instances.len())
        .flat_map(|i| (0..repeats).map(move |r| (i, r)))
        .collect();
    let mut rows = jobs
        .par_iter()
        .map(|&(i, r)| {
            let instance = &instances[i];
            let params = SearchParams { seed: params.seed.wrapping_add(r), ..params.clone() };
            let result = run_ils(instance, &params, &Stopwatch::start());
            let invalid = |reason: String| BenchError::Invalid {
                instance: instance.name().to_string(),
                seed: params.seed,
                reason,
            };
            let report = validate_packing(instance, &result.packing).map_err(|e| invalid(e.to_string()))?;
            if report.bins != result.bins || report.is_feasible() != result.feasible {
                return Err(invalid("reported bins or feasibility disagree with the packing".into()));
            }
            if !result.feasible {
                return Err(invalid("packing is infeasible".into()));
            }
            let z_bks = bks.get(instance.name()).copied();
            Ok(BenchmarkRow {
                instance: instance.name().to_string(),
                n: instance.len(),
                density: instance.conflicts().density(),
                k_lb: result.lower_bound,
                bins: result.bins,
                z_bks,
                gap: z_bks.map(|z| gap(result.bins, z)),
                elapsed: result.elapsed.as_secs_f64(),
                seed: params.seed,
                mode: params.mode,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(|a, b| (&a.instance, a.seed).cmp(&(&b.instance, b.seed)));
    Ok(rows)
}

pub fn write_rows<W: Write>(writer: W, rows: &[BenchmarkRow]) -> Result<(), csv::Error> {
    let mut csv = csv::Writer::from_writer(writer);
    for row in rows {
        csv.serialize(row)?;
    }
    csv.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GroupBy {
    Size,
    Density,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupRow {
    pub class: String,
    /// Item count or density rounded to two decimals.
    pub key: String,
    pub runs: usize,
    pub mean_bins: f64,
    pub mean_gap: Option<f64>,
    pub mean_elapsed: f64,
}

/// Instance class, taken as the name up to the first `-`.
pub fn class_of(name: &str) -> &str {
    name.split('-').next().unwrap_or(name)
}

pub fn aggregate(rows: &[BenchmarkRow], by: GroupBy) -> Vec<GroupRow> {
    // Densities are grouped in hundredths so the map key stays ordered.
    let mut groups: BTreeMap<(String, u64), Vec<&BenchmarkRow>> = BTreeMap::new();
    for row in rows {
        let key = match by {
            GroupBy::Size => row.n as u64,
            GroupBy::Density => (row.density * 100.0).round() as u64,
        };
        groups.entry((class_of(&row.instance).to_string(), key)).or_default().push(row);
    }
    groups
        .into_iter()
        .map(|((class, key), members)| {
            let runs = members.len();
            let mean = |f: &dyn Fn(&BenchmarkRow) -> f64| members.iter().map(|r| f(r)).sum::<f64>() / runs as f64;
            let gaps: Vec<f64> = members.iter().filter_map(|r| r.gap).collect();
            GroupRow {
                class,
                key: match by {
                    GroupBy::Size => key.to_string(),
                    GroupBy::Density => format!("{:.2}", key as f64 / 100.0),
                },
                runs,
                mean_bins: mean(&|r| r.bins as f64),
                mean_gap: (gaps.len() == runs).then(|| gaps.iter().sum::<f64>() / runs as f64),
                mean_elapsed: mean(&|r| r.elapsed),
            }
        })
        .collect()
}

pub fn write_groups<W: Write>(writer: W, groups: &[GroupRow]) -> Result<(), csv::Error> {
    let mut csv = csv::Writer::from_writer(writer);
    for group in groups {
        csv.serialize(group)?;
    }
    csv.flush()?;
    Ok(())
}
