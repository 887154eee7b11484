//! `levyito`: batch front end for path simulation, Itô-identity checks,
//! mollification demos and barrier-option pricing.

mod commands;
mod config;
mod error;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::Config;
use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "levyito",
    version,
    about = "Itô formula for finite-variation Lévy processes and barrier-option pricing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true, env = "LEVYITO_WORKERS")]
    workers: Option<usize>,

    /// Primary CSV destination; overrides `[output] path`. Default: stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Simulate one truncated path and write its jumps.
    Simulate { config: Option<PathBuf> },
    /// Residual of the Itô identity over a truncation ladder.
    VerifyIto { config: Option<PathBuf> },
    /// Pathwise special-semimartingale decomposition.
    Decompose { config: Option<PathBuf> },
    /// Mollified values, derivatives and the key bound at sample points.
    MollifyDemo { config: Option<PathBuf> },
    /// Barrier-option price by finite differences.
    PricePide { config: Option<PathBuf> },
    /// Barrier-option price by Monte Carlo.
    PriceMc { config: Option<PathBuf> },
    /// Finite differences against Monte Carlo on the same contract.
    Compare { config: Option<PathBuf> },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::VerifyIto { .. } => "verify-ito",
            Command::Decompose { .. } => "decompose",
            Command::MollifyDemo { .. } => "mollify-demo",
            Command::PricePide { .. } => "price-pide",
            Command::PriceMc { .. } => "price-mc",
            Command::Compare { .. } => "compare",
        }
    }
}

fn run(cli: &Cli, config_path: Option<&PathBuf>) -> Result<(), CliError> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::config("`--workers` must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("workers: {e}")))?;
    }
    let text = match config_path {
        Some(p) => {
            std::fs::read_to_string(p).map_err(|e| CliError::config(format!("cannot read {}: {e}", p.display())))?
        }
        None => std::io::read_to_string(std::io::stdin())?,
    };
    let cfg = Config::parse(&text)?;
    let artifacts = match cli.command {
        Command::Simulate { .. } => commands::simulate(&cfg),
        Command::VerifyIto { .. } => commands::verify_ito(&cfg),
        Command::Decompose { .. } => commands::decompose(&cfg),
        Command::MollifyDemo { .. } => commands::mollify_demo(&cfg),
        Command::PricePide { .. } => commands::price_pide(&cfg),
        Command::PriceMc { .. } => commands::price_mc(&cfg),
        Command::Compare { .. } => commands::compare(&cfg),
    }?;
    let target = cli
        .output
        .clone()
        .or_else(|| cfg.raw("output", "path").map(PathBuf::from));
    match target {
        Some(p) => std::fs::write(&p, &artifacts.primary)?,
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(artifacts.primary.as_bytes()).and_then(|()| out.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                _ => {}
            }
        }
    }
    for (path, contents) in &artifacts.extra {
        std::fs::write(path, contents)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config_path = match &cli.command {
        Command::Simulate { config }
        | Command::VerifyIto { config }
        | Command::Decompose { config }
        | Command::MollifyDemo { config }
        | Command::PricePide { config }
        | Command::PriceMc { config }
        | Command::Compare { config } => config.clone(),
    };
    match run(&cli, config_path.as_ref()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("levyito {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}
