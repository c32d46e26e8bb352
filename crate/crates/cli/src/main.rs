use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use critnls::config::{parse_config, SimConfig};
use critnls::runner::{execute, Command};
use critnls::Error;

#[derive(Parser)]
#[command(
    name = "critnls",
    version,
    about = "Radial energy-critical NLS with quadratic potentials"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(clap::Args)]
struct Common {
    /// Config file, `key = value` lines or one JSON object.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV, JSON and checkpoint files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Sub {
    /// Evolve, record diagnostics and evaluate the run checks.
    Simulate(Common),
    /// Convergence orders over a dt or N ladder.
    Convergence(Common),
    /// The full invariant suite.
    Check(Common),
    /// Propagator checks at `t1`.
    Propagate(Common),
    /// Duhamel iteration on the local interval.
    Picard(Common),
    /// Simulation plus scattering-state extraction.
    Scatter(Common),
    /// Wave operator and round trip.
    Waveop(Common),
}

impl Sub {
    fn split(self) -> (Command, Common) {
        match self {
            Sub::Simulate(c) => (Command::Simulate, c),
            Sub::Convergence(c) => (Command::Convergence, c),
            Sub::Check(c) => (Command::Check, c),
            Sub::Propagate(c) => (Command::Propagate, c),
            Sub::Picard(c) => (Command::Picard, c),
            Sub::Scatter(c) => (Command::Scatter, c),
            Sub::Waveop(c) => (Command::Waveop, c),
        }
    }
}

fn load(args: &Common) -> Result<SimConfig, Error> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut config = parse_config(&text)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn main() -> ExitCode {
    let (command, args) = Cli::parse().command.split();
    let config = match load(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("critnls: {e}");
            return ExitCode::from(2);
        }
    };
    match execute(command, &config, args.out.as_deref()) {
        Ok((summary, wall)) => {
            for c in &summary.checks {
                let value = c.value.map(|v| format!(" {v:.6e}")).unwrap_or_default();
                let tol = c
                    .tolerance
                    .map(|t| format!(" (tol {t:.1e})"))
                    .unwrap_or_default();
                println!(
                    "{} {}{value}{tol} {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            if let Some(reason) = &summary.stopped {
                println!("STOPPED {reason}");
            }
            println!(
                "{}: {} in {wall:.2} s",
                command.name(),
                if summary.passed { "passed" } else { "failed" }
            );
            if summary.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e @ (Error::Config(_) | Error::Parse { .. } | Error::Usage(_))) => {
            eprintln!("critnls: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("critnls: {e}");
            ExitCode::from(1)
        }
    }
}
