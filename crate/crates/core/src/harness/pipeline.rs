//! Single-realization pipelines: FP-based joint design, ZF-based design and
//! the fixed-array baselines.

use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::channel::{channel_matrix, stream_rng, streams, AntennaLayout, Scenario};
use crate::fp::{sum_rate, update_auxiliaries, update_beamformer, BeamMatrix};
use crate::harness::config::{Algorithm, ExperimentConfig};
use crate::position::{optimize_layout, zf_objective, FpLayoutObjective, ZfLayoutObjective};
use crate::zf::zf_sum_rate;
use crate::{Error, Result};

/// Resampling budget when a random initial layout yields a singular Gram matrix.
const MAX_ZF_INIT_ATTEMPTS: usize = 100;

/// Ridge multiplier and resulting transmit power of one beamformer update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeamUpdateStat {
    pub ridge_multiplier: f64,
    pub transmit_power: f64,
    pub budget: f64,
}

/// Outcome of one algorithm on one realization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub algorithm: Algorithm,
    pub seed: u64,
    /// Final sum-rate, bits/s/Hz.
    pub sum_rate: f64,
    /// Tracked objective before the first and after every outer iteration:
    /// the sum-rate for FP runs, `−tr((HᴴH)⁻¹)` for ZF runs.
    pub trajectory: Vec<f64>,
    /// Sum-rate after every outer iteration (same indexing as `trajectory`).
    pub rate_trajectory: Vec<f64>,
    pub iterations: usize,
    pub wall_ms: f64,
    pub layout: Vec<[f64; 2]>,
    #[serde(skip)]
    pub beam_updates: Vec<BeamUpdateStat>,
}

impl MetricsRecord {
    /// Outer iterations until the tracked objective first comes within
    /// `rel` of its final value.
    pub fn iterations_to_within(&self, rel: f64) -> usize {
        let last = *self.trajectory.last().expect("non-empty trajectory");
        self.trajectory
            .iter()
            .position(|v| (last - v).abs() <= rel * last.abs())
            .unwrap_or(self.trajectory.len() - 1)
    }
}

fn layout_points(layout: &AntennaLayout) -> Vec<[f64; 2]> {
    layout.positions().iter().map(|p| [p.x, p.y]).collect()
}

/// Uniform random feasible layout from the realization's init stream.
pub fn initial_layout(config: &ExperimentConfig, rng: &mut impl Rng) -> Result<AntennaLayout> {
    AntennaLayout::random_feasible(
        config.num_antennas,
        config.region_m(),
        config.min_spacing_m(),
        config.max_init_attempts,
        rng,
    )
}

/// Fixed half-wavelength ULA along the x axis.
pub fn ula_layout(config: &ExperimentConfig) -> Result<AntennaLayout> {
    let lam = config.wavelength();
    let span = (config.num_antennas.saturating_sub(1)) as f64 * lam / 2.0;
    // Fixed geometry: not bound by the MA region or spacing constraint.
    AntennaLayout::uniform_linear(config.num_antennas, lam / 2.0, config.region_m().max(span), 0.0)
}

/// FP alternating loop. With `move_antennas = false` the position stage is
/// skipped and only beamforming is optimized.
fn fp_loop(
    algorithm: Algorithm,
    scenario: &Scenario,
    config: &ExperimentConfig,
    initial: &AntennaLayout,
    seed: u64,
    move_antennas: bool,
) -> Result<MetricsRecord> {
    let started = Instant::now();
    let budget = config.power_w();
    let ls = config.line_search()?;
    let mut layout = initial.clone();
    let mut h = channel_matrix(&layout, scenario);
    let mut w = BeamMatrix::matched_filter(&h, budget).w;
    let mut rate = sum_rate(&h, &w, &scenario.noise)?;
    let mut trajectory = vec![rate];
    let mut beam_updates = Vec::new();
    let mut iterations = 0;
    while iterations < config.max_fp_iters {
        let aux = update_auxiliaries(&h, &w, &scenario.noise)?;
        let update = update_beamformer(&h, &aux, budget)?;
        beam_updates.push(BeamUpdateStat {
            ridge_multiplier: update.ridge_multiplier,
            transmit_power: update.beam.transmit_power(),
            budget,
        });
        w = update.beam.w;
        if move_antennas {
            let objective = FpLayoutObjective {
                scenario,
                w: w.clone(),
                aux,
            };
            layout = optimize_layout(&layout, &objective, &ls)?.layout;
            h = channel_matrix(&layout, scenario);
        }
        let next = sum_rate(&h, &w, &scenario.noise)?;
        trajectory.push(next);
        iterations += 1;
        let change = (next - rate).abs();
        rate = next;
        if change < config.tolerance * rate.abs() {
            break;
        }
    }
    Ok(MetricsRecord {
        algorithm,
        seed,
        sum_rate: rate,
        rate_trajectory: trajectory.clone(),
        trajectory,
        iterations,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
        layout: layout_points(&layout),
        beam_updates,
    })
}

/// FP-based joint beamforming and position design from `initial`.
pub fn run_fp(
    scenario: &Scenario,
    config: &ExperimentConfig,
    initial: &AntennaLayout,
    seed: u64,
) -> Result<MetricsRecord> {
    fp_loop(Algorithm::FpMa, scenario, config, initial, seed, true)
}

fn zf_rate_from_objective(objective: f64, budget: f64, noise: &[f64]) -> f64 {
    let trace = -objective;
    noise.iter().map(|s| (1.0 + budget / s / trace).log2()).sum()
}

fn zf_on_layout(
    algorithm: Algorithm,
    scenario: &Scenario,
    config: &ExperimentConfig,
    initial: &AntennaLayout,
    seed: u64,
    move_antennas: bool,
) -> Result<MetricsRecord> {
    let started = Instant::now();
    let budget = config.power_w();
    let (layout, trajectory, iterations) = if move_antennas {
        let objective = ZfLayoutObjective::normalized_at(scenario, initial)?;
        let out = optimize_layout(initial, &objective, &config.line_search()?)?;
        let raw: Vec<f64> = out.trajectory.iter().map(|v| v / objective.scale).collect();
        (out.layout, raw, out.sweeps)
    } else {
        (initial.clone(), vec![zf_objective(initial, scenario)?], 0)
    };
    let h = channel_matrix(&layout, scenario);
    let rate = zf_sum_rate(&h, budget, &scenario.noise)?;
    let rate_trajectory = trajectory
        .iter()
        .map(|&v| zf_rate_from_objective(v, budget, &scenario.noise))
        .collect();
    Ok(MetricsRecord {
        algorithm,
        seed,
        sum_rate: rate,
        trajectory,
        rate_trajectory,
        iterations,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
        layout: layout_points(&layout),
        beam_updates: Vec::new(),
    })
}

/// ZF-based design: optimize the layout for `−tr((HᴴH)⁻¹)`, then apply ZF.
///
/// Initial layouts are drawn from `rng`; a draw whose Gram matrix is
/// singular is replaced, up to 100 times.
pub fn run_zf(
    scenario: &Scenario,
    config: &ExperimentConfig,
    rng: &mut impl Rng,
    seed: u64,
) -> Result<MetricsRecord> {
    let mut last_err = None;
    for _ in 0..MAX_ZF_INIT_ATTEMPTS {
        let init = initial_layout(config, rng)?;
        match zf_objective(&init, scenario) {
            Ok(_) => return zf_on_layout(Algorithm::ZfMa, scenario, config, &init, seed, true),
            Err(e @ Error::Singular { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::Numerical("no initial layout".into())))
}

/// ZF-based design from a given initial layout (no resampling).
pub fn run_zf_from(
    scenario: &Scenario,
    config: &ExperimentConfig,
    initial: &AntennaLayout,
    seed: u64,
) -> Result<MetricsRecord> {
    zf_on_layout(Algorithm::ZfMa, scenario, config, initial, seed, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Beamforming {
    Fp,
    Zf,
}

/// Fixed-position ULA baseline with FP (beamforming only) or ZF precoding.
pub fn run_fpa_baseline(
    scenario: &Scenario,
    config: &ExperimentConfig,
    beamforming: Beamforming,
    seed: u64,
) -> Result<MetricsRecord> {
    let ula = ula_layout(config)?;
    match beamforming {
        Beamforming::Fp => fp_loop(Algorithm::FpFpa, scenario, config, &ula, seed, false),
        Beamforming::Zf => zf_on_layout(Algorithm::ZfFpa, scenario, config, &ula, seed, false),
    }
}

/// Run `algorithm` on `scenario`. MA runs draw their initial layout from
/// the realization's layout-init stream, so FP and ZF start from the same
/// positions.
pub fn run_algorithm(
    algorithm: Algorithm,
    scenario: &Scenario,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<MetricsRecord> {
    match algorithm {
        Algorithm::FpMa => {
            let mut rng = stream_rng(seed, streams::LAYOUT_INIT);
            let init = initial_layout(config, &mut rng)?;
            run_fp(scenario, config, &init, seed)
        }
        Algorithm::ZfMa => {
            let mut rng = stream_rng(seed, streams::LAYOUT_INIT);
            run_zf(scenario, config, &mut rng, seed)
        }
        Algorithm::FpFpa => run_fpa_baseline(scenario, config, Beamforming::Fp, seed),
        Algorithm::ZfFpa => run_fpa_baseline(scenario, config, Beamforming::Zf, seed),
    }
}
