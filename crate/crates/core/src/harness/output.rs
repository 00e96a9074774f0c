//! Result files: per-realization CSV, timing CSV, aggregate CSV, convergence
//! CSV and a JSON run manifest.
//!
//! Everything except `timing_*.csv` is a deterministic function of the
//! configuration, so repeated runs produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::harness::config::ExperimentConfig;
use crate::harness::pipeline::MetricsRecord;
use crate::harness::sweep::SweepReport;
use crate::Result;

#[derive(Debug, Serialize)]
struct RealizationRow<'a> {
    sweep_var: f64,
    algo: &'a str,
    realization: usize,
    seed: u64,
    sum_rate_bps_hz: f64,
    iters: usize,
}

#[derive(Debug, Serialize)]
struct TimingRow<'a> {
    sweep_var: f64,
    algo: &'a str,
    realization: usize,
    wall_ms: f64,
}

#[derive(Debug, Serialize)]
struct AggregateRow<'a> {
    sweep_var: f64,
    algo: &'a str,
    count: usize,
    mean: f64,
    std: f64,
    p5: f64,
    p95: f64,
}

#[derive(Debug, Serialize)]
struct ConvergenceRow<'a> {
    algo: &'a str,
    realization: usize,
    seed: u64,
    iteration: usize,
    objective: f64,
    sum_rate_bps_hz: f64,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub code_version: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub sweep_variable: &'static str,
    pub realizations: usize,
    pub excluded: &'a [usize],
    pub files: Vec<String>,
    pub config: &'a ExperimentConfig,
}

/// Paths written by [`write_sweep`].
#[derive(Debug, Clone)]
pub struct SweepFiles {
    pub realizations: PathBuf,
    pub timing: PathBuf,
    pub aggregate: PathBuf,
    pub manifest: PathBuf,
}

pub fn write_sweep(dir: &Path, config: &ExperimentConfig, report: &SweepReport) -> Result<SweepFiles> {
    fs::create_dir_all(dir)?;
    let var = report.variable.name();
    let files = SweepFiles {
        realizations: dir.join(format!("sweep_{var}.csv")),
        timing: dir.join(format!("timing_{var}.csv")),
        aggregate: dir.join(format!("aggregate_{var}.csv")),
        manifest: dir.join("manifest.json"),
    };

    let mut rows = csv::Writer::from_path(&files.realizations)?;
    let mut timing = csv::Writer::from_path(&files.timing)?;
    for r in &report.results {
        let sweep_var = report.values[r.point];
        for m in &r.records {
            rows.serialize(RealizationRow {
                sweep_var,
                algo: m.algorithm.name(),
                realization: r.realization,
                seed: r.seed,
                sum_rate_bps_hz: m.sum_rate,
                iters: m.iterations,
            })?;
            timing.serialize(TimingRow {
                sweep_var,
                algo: m.algorithm.name(),
                realization: r.realization,
                wall_ms: m.wall_ms,
            })?;
        }
    }
    rows.flush()?;
    timing.flush()?;

    let mut agg = csv::Writer::from_path(&files.aggregate)?;
    for a in &report.aggregates {
        agg.serialize(AggregateRow {
            sweep_var: a.sweep_value,
            algo: a.algorithm.name(),
            count: a.count,
            mean: a.mean,
            std: a.std,
            p5: a.p5,
            p95: a.p95,
        })?;
    }
    agg.flush()?;

    let manifest = Manifest {
        code_version: env!("CARGO_PKG_VERSION"),
        config_hash: config.hash_hex(),
        seed: config.seed,
        sweep_variable: var,
        realizations: config.realizations,
        excluded: &report.excluded,
        files: [&files.realizations, &files.timing, &files.aggregate]
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
        config,
    };
    fs::write(&files.manifest, serde_json::to_string_pretty(&manifest)?)?;
    Ok(files)
}

/// Per-iteration objective and sum-rate of each record.
pub fn write_convergence(path: &Path, records: &[(usize, MetricsRecord)]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for (realization, m) in records {
        for (i, (obj, rate)) in m.trajectory.iter().zip(&m.rate_trajectory).enumerate() {
            w.serialize(ConvergenceRow {
                algo: m.algorithm.name(),
                realization: *realization,
                seed: m.seed,
                iteration: i,
                objective: *obj,
                sum_rate_bps_hz: *rate,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}
