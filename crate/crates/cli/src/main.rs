//! `debias`: estimate and reverse participation bias in binary survey
//! responses using predictions from an imperfect, calibrated classifier.
//!
//! Exit codes: 0 success, 1 internal/numerical failure, 2 input validation.

mod calibrate;
mod errors;
mod estimate;
mod input;
mod manifest;
mod output;
mod posterior;
mod simulate;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "debias", version, about, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate and test participation bias from scored CSV splits
    Estimate(estimate::EstimateArgs),
    /// Posterior over the true evaluation mean from prediction counts
    Posterior(posterior::PosteriorArgs),
    /// Monte Carlo validation scenarios, emitted as CSV tables
    Simulate(simulate::SimulateArgs),
    /// Reliability and ECE report, optionally with Platt scaling
    Calibrate(calibrate::CalibrateArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };

    let result = match &cli.command {
        Command::Estimate(args) => estimate::run(args),
        Command::Posterior(args) => posterior::run(args),
        Command::Simulate(args) => simulate::run(args),
        Command::Calibrate(args) => calibrate::run(args),
    };

    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
