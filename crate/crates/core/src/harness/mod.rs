//! Experiment orchestration: pipelines, Monte-Carlo sweeps and result files.

pub mod config;
pub mod output;
pub mod pipeline;
pub mod sweep;

pub use config::{Algorithm, DropModel, ExperimentConfig, SweepSpec, SweepVariable};
pub use pipeline::{
    initial_layout, run_algorithm, run_fp, run_fpa_baseline, run_zf, Beamforming, MetricsRecord,
};
pub use sweep::{monte_carlo, realization_seed, Aggregate, SweepReport};
