//! `rgscalelab`: configuration-driven experiments on scaled block
//! observables. See the repository README for the config format and the
//! per-experiment output schemas.

use clap::Parser;
use rgscalelab::{config, output, runner};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "rgscalelab",
    version,
    about = "Scaling experiments for block-observable correlation functions"
)]
struct Cli {
    /// Experiment name; must match the config's `experiment` key.
    experiment: String,

    /// Path to the experiment config file.
    #[arg(long)]
    config: PathBuf,

    /// Output directory (default: the config's output.path).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads for scale sweeps (default: all cores).
    #[arg(long)]
    threads: Option<usize>,

    /// Absolute quadrature tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol_abs: f64,

    /// Relative quadrature tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol_rel: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read config {}: {e}", cli.config.display());
            return ExitCode::from(1);
        }
    };
    let cfg = match config::parse_config(&text) {
        Ok(c) => c,
        Err(errors) => {
            eprintln!("config errors ({}):", errors.len());
            for e in errors {
                eprintln!("  - {e}");
            }
            return ExitCode::from(1);
        }
    };
    if cfg.experiment.name() != cli.experiment {
        eprintln!(
            "error: experiment argument '{}' does not match config experiment '{}'",
            cli.experiment, cfg.experiment
        );
        return ExitCode::from(1);
    }

    if cli.tol_abs <= 0.0 || cli.tol_rel <= 0.0 {
        eprintln!("error: tolerances must be positive");
        return ExitCode::from(1);
    }
    rgscale_core::quad::set_default_tols(cli.tol_abs, cli.tol_rel);
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }

    let started = Instant::now();
    let result = match runner::run_experiment(&cfg) {
        Ok(r) => r,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    let out_dir = cli.out.unwrap_or_else(|| PathBuf::from(&cfg.output.path));
    let files = match output::write_all(
        &out_dir,
        &cfg,
        result.resolved_gamma,
        &result.output,
        started.elapsed().as_millis(),
    ) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: writing outputs: {e}");
            return ExitCode::from(1);
        }
    };

    for f in &files {
        println!("wrote {}", f.display());
    }
    for n in &result.output.notes {
        println!("note: {n}");
    }
    if result.numerical_flags > 0 {
        println!(
            "completed with {} numerical flag(s); see notes and per-row status",
            result.numerical_flags
        );
        ExitCode::from(2)
    } else {
        println!("completed cleanly in {:.1?}", started.elapsed());
        ExitCode::SUCCESS
    }
}
