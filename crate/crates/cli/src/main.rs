use clap::Parser;
use entprobe_cli::{parse_config, run, Command, ConfigError, Outcome, RunError};
use std::path::PathBuf;
use std::process::ExitCode;

/// Exit statuses.
const EXIT_ERROR: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_WARNINGS: u8 = 3;

/// Entangled-probe spin-dimer scattering calculations.
#[derive(Parser, Debug)]
#[command(name = "entprobe", version)]
struct Cli {
    /// What to compute.
    #[arg(value_enum)]
    command: Command,
    /// JSON configuration document.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for CSV and JSON files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads for grid evaluation (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Named parameter set merged under the configuration.
    #[arg(long)]
    preset: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match &cli.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", p.display());
                return ExitCode::from(EXIT_CONFIG);
            }
        },
        None if cli.preset.is_some() || matches!(cli.command, Command::OracleCheck | Command::FluxCalib | Command::TwoFermionCheck) => {
            "{}".to_string()
        }
        None => {
            eprintln!("error: `{}` needs --config or --preset", cli.command.label());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let cfg = match parse_config(&text, cli.preset.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return ExitCode::from(EXIT_ERROR);
        }
    };
    match pool.install(|| run(&cfg, cli.command, &cli.out)) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Warnings) => {
            eprintln!("warning: some nodes did not converge; see the JSON sidecar");
            ExitCode::from(EXIT_WARNINGS)
        }
        Ok(Outcome::CheckFailed) => ExitCode::from(EXIT_ERROR),
        Err(RunError::Config(e @ ConfigError::Invalid { .. })) => {
            eprintln!("config error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
