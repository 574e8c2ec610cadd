//! `geoind`: sampling, calibration, accuracy tables, mechanism evaluation
//! and the location proxy. Distances are in km and ε in km⁻¹ throughout.

mod args;
mod commands;
mod error;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{accuracy, calibrate, evaluate, kernel, lbs, sample, verify};
use error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "geoind", version, about = "Geo-indistinguishable location release")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    Sample(sample::SampleArgs),
    Calibrate(calibrate::CalibrateArgs),
    Accuracy(accuracy::AccuracyArgs),
    Evaluate(evaluate::EvaluateArgs),
    Verify(verify::VerifyArgs),
    Kernel(kernel::KernelExportArgs),
    Query(lbs::QueryArgs),
    Serve(lbs::ServeArgs),
}

fn run(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Sample(a) => sample::run(a),
        Command::Calibrate(a) => calibrate::run(a),
        Command::Accuracy(a) => accuracy::run(a),
        Command::Evaluate(a) => evaluate::run(a),
        Command::Verify(a) => verify::run(a),
        Command::Kernel(a) => kernel::run(a),
        Command::Query(a) => lbs::query(a),
        Command::Serve(a) => lbs::serve(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors are parameter errors
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn seed_is_required_for_sampling() {
        assert!(Cli::try_parse_from(["geoind", "sample", "--eps", "1"]).is_err());
        assert!(Cli::try_parse_from(["geoind", "sample", "--eps", "1", "--seed", "3"]).is_ok());
    }

    #[test]
    fn level_needs_radius() {
        assert!(Cli::try_parse_from(["geoind", "sample", "--level", "1.38", "--seed", "1"]).is_err());
    }
}
