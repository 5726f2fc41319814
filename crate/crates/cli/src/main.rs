use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mvstab_cli::config::ExperimentConfig;
use mvstab_cli::{cmd_instability, cmd_spectrum, cmd_stationary, cmd_sweep};

#[derive(Parser)]
#[command(name = "mvstab", version, about = "Stability of stationary McKean-Vlasov laws")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `simulation.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Self-consistent roots and their stability indicator.
    Stationary(Common),
    /// Generator spectrum and secular function at each root.
    Spectrum(Common),
    /// Perturb an unstable root and measure the escape.
    Instability(Common),
    /// Branches and growth rates over a range of sigma.
    Sweep(Common),
}

fn run(cli: Cli) -> anyhow::Result<mvstab_cli::Outcome> {
    if let Ok(n) = std::env::var("MVSTAB_THREADS") {
        let n: usize = n.trim().parse().map_err(|_| anyhow::anyhow!("MVSTAB_THREADS must be a positive integer"))?;
        if n == 0 {
            anyhow::bail!("MVSTAB_THREADS must be a positive integer");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let (Command::Stationary(c) | Command::Spectrum(c) | Command::Instability(c) | Command::Sweep(c)) = &cli.command;
    let cfg = ExperimentConfig::load(&c.config)?;
    let out = c.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    let seed = c.seed.unwrap_or(cfg.simulation.seed);
    match cli.command {
        Command::Stationary(_) => cmd_stationary(&cfg, &out),
        Command::Spectrum(_) => cmd_spectrum(&cfg, &out),
        Command::Instability(_) => cmd_instability(&cfg, &out, seed),
        Command::Sweep(_) => cmd_sweep(&cfg, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => ExitCode::from(outcome.exit_code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
