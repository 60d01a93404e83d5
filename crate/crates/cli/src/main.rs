use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rom_dwr::Scheme;
use rom_dwr_cli::commands::{self, RunOptions};
use rom_dwr_cli::{CliError, CliResult, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "rom-dwr",
    version,
    about = "Reduced-order Burgers experiments with QoI error estimates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file of `section.key = value` lines; defaults describe the baseline run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed recorded with the run, overriding `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Time-stepping scheme, overriding `time.scheme`.
    #[arg(long, global = true, value_parser = parse_scheme)]
    scheme: Option<Scheme>,

    /// Fill the wall_ms column (makes output non-reproducible).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Full-order run: trajectory, adjoint and QoI.
    RunFom,
    /// POD basis, nonlinear basis and DEIM points from the full run.
    BuildRom,
    /// Reduced run with true and estimated QoI error.
    Estimate,
    /// Dual-weighted adaptive DEIM points compared with standard ones.
    AdaptDeim,
    /// Error reports over the configured sweep lists.
    Sweep,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: rom_dwr::Error| e.to_string())
}

fn load(cli: &Cli) -> CliResult<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(scheme) = cli.scheme {
        config.time.scheme = scheme;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> CliResult<String> {
    let config = load(cli)?;
    let opts = RunOptions { timing: cli.timing };
    match cli.command {
        Command::RunFom => commands::run_fom(&config),
        Command::BuildRom => commands::build_rom(&config),
        Command::Estimate => commands::estimate(&config, &opts),
        Command::AdaptDeim => commands::adapt_deim(&config),
        Command::Sweep => commands::sweep(&config, &opts),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &CliError) -> ExitCode {
    ExitCode::from(e.exit_code() as u8)
}
