//! Seeded Monte-Carlo sweeps.
//!
//! Realization `r` uses seed `splitmix64(master + (r + 1) · φ64)` where
//! `φ64 = 0x9E37_79B9_7F4A_7C15`. Within a realization, the scenario and the
//! initial layout come from separate ChaCha streams of that seed (see
//! [`crate::channel::streams`]). The same realization seed is used at every
//! sweep point, so all points and algorithms see the same channels.

use serde::Serialize;
use statrs::statistics::{Data, OrderStatistics, Statistics};

use crate::channel::sample_scenario;
use crate::harness::config::{Algorithm, ExperimentConfig, SweepVariable};
use crate::harness::pipeline::{run_algorithm, MetricsRecord};
use crate::parallel::Execution;
use crate::{Error, Result};

/// Largest tolerated fraction of failed realizations per sweep point.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.01;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of realization `index` under `master`.
pub fn realization_seed(master: u64, index: usize) -> u64 {
    splitmix64(master.wrapping_add((index as u64 + 1).wrapping_mul(GOLDEN_GAMMA)))
}

/// All algorithm records of one realization at one sweep point.
#[derive(Debug, Clone)]
pub struct RealizationResult {
    pub point: usize,
    pub realization: usize,
    pub seed: u64,
    pub records: Vec<MetricsRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub sweep_value: f64,
    pub algorithm: Algorithm,
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub p5: f64,
    pub p95: f64,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub results: Vec<RealizationResult>,
    pub aggregates: Vec<Aggregate>,
    /// Failed realizations per sweep point.
    pub excluded: Vec<usize>,
}

impl SweepReport {
    /// Final sum-rates of `algorithm` at sweep point `point`, in realization order.
    pub fn rates(&self, point: usize, algorithm: Algorithm) -> Vec<f64> {
        self.records(point, algorithm).map(|r| r.sum_rate).collect()
    }

    pub fn records(&self, point: usize, algorithm: Algorithm) -> impl Iterator<Item = &MetricsRecord> {
        self.results
            .iter()
            .filter(move |r| r.point == point)
            .flat_map(|r| r.records.iter())
            .filter(move |m| m.algorithm == algorithm)
    }

    pub fn aggregate(&self, point: usize, algorithm: Algorithm) -> Option<&Aggregate> {
        let v = self.values[point];
        self.aggregates
            .iter()
            .find(|a| a.sweep_value == v && a.algorithm == algorithm)
    }
}

fn aggregate(values: &[f64], sweep_value: f64, algorithm: Algorithm) -> Aggregate {
    let count = values.len();
    let mean = values.mean();
    let std = if count > 1 { values.std_dev() } else { 0.0 };
    let mut data = Data::new(values.to_vec());
    Aggregate {
        sweep_value,
        algorithm,
        count,
        mean,
        std,
        p5: data.quantile(0.05),
        p95: data.quantile(0.95),
    }
}

/// Run every selected algorithm on `config.realizations` scenarios at each
/// point of `config.sweep`.
pub fn monte_carlo(config: &ExperimentConfig, execution: Execution) -> Result<SweepReport> {
    config.validate()?;
    let values = config.sweep.values.clone();
    let points: Vec<ExperimentConfig> = values.iter().map(|&v| config.at_sweep_point(v)).collect();
    for p in &points {
        p.validate()?;
    }
    let per_point = config.realizations;
    let jobs = points.len() * per_point;
    let outcomes = execution.map(jobs, |job| {
        let (point, realization) = (job / per_point, job % per_point);
        let cfg = &points[point];
        let seed = realization_seed(config.seed, realization);
        let run = || -> Result<Vec<MetricsRecord>> {
            let scenario = sample_scenario(cfg, seed)?;
            cfg.algorithms
                .iter()
                .map(|&alg| run_algorithm(alg, &scenario, cfg, seed))
                .collect()
        };
        (point, realization, seed, run())
    });

    let mut results = Vec::with_capacity(jobs);
    let mut excluded = vec![0usize; points.len()];
    for (point, realization, seed, outcome) in outcomes {
        match outcome {
            Ok(records) => results.push(RealizationResult {
                point,
                realization,
                seed,
                records,
            }),
            Err(e) => {
                log::warn!("point {point} realization {realization} (seed {seed}) excluded: {e}");
                excluded[point] += 1;
            }
        }
    }
    for (point, &n) in excluded.iter().enumerate() {
        if n as f64 > MAX_EXCLUDED_FRACTION * per_point as f64 {
            return Err(Error::Numerical(format!(
                "{n} of {per_point} realizations failed at {} = {}",
                config.sweep.variable.name(),
                values[point]
            )));
        }
        if n > 0 {
            log::info!("{n} realizations excluded at point {point}");
        }
    }

    let mut report = SweepReport {
        variable: config.sweep.variable,
        values: values.clone(),
        results,
        aggregates: Vec::new(),
        excluded,
    };
    for (point, &v) in values.iter().enumerate() {
        for &alg in &config.algorithms {
            let rates = report.rates(point, alg);
            if !rates.is_empty() {
                report.aggregates.push(aggregate(&rates, v, alg));
            }
        }
    }
    Ok(report)
}
