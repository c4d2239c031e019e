use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use kerr1d_cli::commands::{self, RunOutcome};
use kerr1d_cli::config::{ExperimentConfig, Overrides};

#[derive(Parser, Debug)]
#[command(name = "kerr1d", version, about = "Nonlinear Helmholtz slab experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// fv2, fv2alt, fv4, fd2 or fd5.
    #[arg(long, global = true)]
    scheme: Option<String>,
    /// Newton relaxation factor in (0, 1].
    #[arg(long, global = true)]
    omega: Option<f64>,
    /// linear, oracle or file:PATH.
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Worker threads for independent rows; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Solve one configuration and write the field and a report.
    Solve,
    /// Transmittance against the nonlinearity multiplier.
    Sweep,
    /// Error against the reference solution over a list of grids.
    Convergence,
    /// Dump the fourth-order coefficient tensors.
    Coeffs,
    /// Largest single continuation increment that still converges.
    Probe,
    /// Seconds per Newton iteration against grid size.
    Timing,
}

fn run(cli: &Cli) -> Result<RunOutcome> {
    let path = cli.config.as_ref().context("--config is required")?;
    let mut cfg = ExperimentConfig::load(path)?;
    cfg.apply(&Overrides { scheme: cli.scheme.clone(), omega: cli.omega, seed: cli.seed.clone() });
    rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global().context("starting thread pool")?;
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    match cli.command {
        Command::Solve => commands::run_solve(&cfg, &cli.out),
        Command::Sweep => commands::run_sweep(&cfg, &cli.out),
        Command::Convergence => commands::run_convergence(&cfg, &cli.out),
        Command::Coeffs => commands::run_coeffs(&cfg, &cli.out),
        Command::Probe => commands::run_probe(&cfg, &cli.out),
        Command::Timing => commands::run_timing(&cfg, &cli.out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(o) if o.all_converged => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
