//! Batch front-end: `osc-spectra <command> --config <path> [--out DIR] [--seed N]`.
//!
//! Exit codes: 0 success, 1 error, 2 when a run completed but a checked
//! bound was violated (a finding).

mod commands;
mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "osc-spectra",
    about = "Spectral computations for perturbed harmonic oscillators",
    version
)]
struct Cli {
    /// One of: spectrum, projections, bari-markus, hilbert, weights,
    /// counterexample, katsnelson, decay. Must match the config's command.
    command: String,
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override for randomized checks.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_thread_pool();
    match run(cli) {
        Ok(outcome) => {
            if outcome.findings.is_empty() {
                ExitCode::SUCCESS
            } else {
                for f in &outcome.findings {
                    eprintln!("finding: {f}");
                }
                ExitCode::from(2)
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

/// OSC_SPECTRA_THREADS caps the data-parallel sections.
fn init_thread_pool() {
    if let Ok(v) = std::env::var("OSC_SPECTRA_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn run(cli: Cli) -> Result<commands::Outcome> {
    let text = fs::read_to_string(&cli.config)
        .with_context(|| format!("reading config {}", cli.config.display()))?;
    let mut cfg = config::parse_config(&text, &cli.command)?;
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    if let Some(out) = &cli.out {
        cfg.set_output_dir(out.display().to_string());
    }
    let dir = PathBuf::from(cfg.output_dir());
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    match &cfg {
        RunConfig::Spectrum(c) => commands::run_spectrum(c, &dir),
        RunConfig::Projections(c) => commands::run_projections(c, &dir),
        RunConfig::BariMarkus(c) => commands::run_bari_markus(c, &dir),
        RunConfig::Hilbert(c) => commands::run_hilbert(c, &dir),
        RunConfig::Weights(c) => commands::run_weights(c, &dir),
        RunConfig::Counterexample(c) => commands::run_counterexample(c, &dir),
        RunConfig::Katsnelson(c) => commands::run_katsnelson(c, &dir),
        RunConfig::Decay(c) => commands::run_decay(c, &dir),
    }
}
