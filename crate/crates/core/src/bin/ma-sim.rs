//! Command-line driver for the movable-antenna simulations.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use movable_antenna::channel::sample_scenario;
use movable_antenna::harness::config::{parse_algorithms, ExperimentConfig, SweepVariable};
use movable_antenna::harness::output::{write_convergence, write_sweep};
use movable_antenna::harness::{monte_carlo, realization_seed, run_algorithm};
use movable_antenna::parallel::{with_threads, Execution};

#[derive(Parser)]
#[command(name = "ma-sim", version, about = "Movable-antenna multiuser MISO sum-rate simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one realization and print each algorithm's trajectory.
    Run(Common),
    /// Monte-Carlo sweep over a parameter grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Sweep variable with its default grid (`power_dbm` or `region_wavelengths`);
        /// overrides the grid in the config file.
        #[arg(long)]
        sweep_var: Option<SweepVariable>,
    },
    /// Per-iteration objective of every realization, for convergence plots.
    Convergence(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Comma-separated list, e.g. `fp-ma,zf-ma,fp-fpa,zf-fpa`.
    #[arg(long)]
    algos: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)
                .with_context(|| format!("loading config {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(r) = self.realizations {
            cfg.realizations = r;
        }
        if let Some(a) = &self.algos {
            cfg.algorithms = parse_algorithms(a)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(common: &Common) -> Result<()> {
    let cfg = common.config()?;
    let seed = realization_seed(cfg.seed, 0);
    let scenario = sample_scenario(&cfg, seed)?;
    println!("realization seed {seed}");
    for &alg in &cfg.algorithms {
        let rec = run_algorithm(alg, &scenario, &cfg, seed)?;
        println!(
            "{alg}: {:.4} bits/s/Hz after {} iterations ({:.1} ms)",
            rec.sum_rate, rec.iterations, rec.wall_ms
        );
        for (i, (obj, rate)) in rec.trajectory.iter().zip(&rec.rate_trajectory).enumerate() {
            println!("  {i:>3}  objective {obj:.6e}  rate {rate:.6}");
        }
    }
    Ok(())
}

fn sweep(common: &Common, sweep_var: Option<SweepVariable>) -> Result<()> {
    let mut cfg = common.config()?;
    if let Some(v) = sweep_var {
        cfg.sweep = v.default_spec();
    }
    let report = with_threads(common.threads, || monte_carlo(&cfg, Execution::Parallel))??;
    let files = write_sweep(&common.out, &cfg, &report)?;
    for a in &report.aggregates {
        println!(
            "{}={:<6} {:<7} mean {:.4}  std {:.4}  p5 {:.4}  p95 {:.4}  (n={})",
            report.variable.name(),
            a.sweep_value,
            a.algorithm.name(),
            a.mean,
            a.std,
            a.p5,
            a.p95,
            a.count
        );
    }
    println!("wrote {}", files.realizations.display());
    Ok(())
}

fn convergence(common: &Common) -> Result<()> {
    let cfg = common.config()?;
    let jobs = cfg.realizations;
    let records = with_threads(common.threads, || {
        Execution::Parallel.map(jobs, |r| {
            let seed = realization_seed(cfg.seed, r);
            let scenario = sample_scenario(&cfg, seed)?;
            cfg.algorithms
                .iter()
                .map(|&alg| run_algorithm(alg, &scenario, &cfg, seed).map(|m| (r, m)))
                .collect::<movable_antenna::Result<Vec<_>>>()
        })
    })?;
    let mut flat = Vec::new();
    for r in records {
        flat.extend(r?);
    }
    let path = common.out.join("convergence.csv");
    write_convergence(&path, &flat)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(c) => run(c),
        Command::Sweep { common, sweep_var } => sweep(common, *sweep_var),
        Command::Convergence(c) => convergence(c),
    }
}
