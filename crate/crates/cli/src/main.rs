use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use nsfrac_cli::{load, run, ExitStatus, RunOptions};

/// Non-stationary trajectories, attractors and fractal interpolants.
///
/// Exit status: 0 success, 2 invalid config, 3 no convergence, 4 resource cap.
#[derive(Debug, Parser)]
#[command(name = "nsfrac", version)]
struct Cli {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    kmax: Option<usize>,
    /// Print nothing on success.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("nsfrac: {e}");
            return ExitCode::from(ExitStatus::Invalid.code() as u8);
        }
    };
    let opts = RunOptions {
        out: cli.out,
        config_dir: cli.config.parent().map(PathBuf::from).unwrap_or_default(),
        seed: cli.seed,
        tol: cli.tol,
        kmax: cli.kmax,
    };
    let outcome = run(&cfg, &opts);
    match outcome.status {
        ExitStatus::Success => {
            if !cli.quiet {
                println!("{}", outcome.summary);
                for a in &outcome.artifacts {
                    println!("wrote {}", a.display());
                }
            }
        }
        _ => eprintln!("nsfrac: {}", outcome.summary),
    }
    ExitCode::from(outcome.status.code() as u8)
}
