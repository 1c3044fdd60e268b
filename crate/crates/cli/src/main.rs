//! `catfilter`: experiment runner for the atom-cat filtering model.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 invariant or acceptance
//! failure, 3 truncation-accuracy failure.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{RunArgs, RunConfig};

#[derive(Parser)]
#[command(
    name = "catfilter",
    version,
    about = "Exact oracles, Monte Carlo unravelling and filter verification for an atom-cat jump model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// RK4 Lindblad integration against the closed decay law.
    Lindblad(RunArgs),
    /// Exact class probabilities, counting moments and intensities.
    Oracle(RunArgs),
    /// Monte Carlo trajectory unravelling with empirical record classes.
    Simulate(RunArgs),
    /// Pathwise Belavkin/estimate consistency and filter-level LTP.
    FilterVerify(RunArgs),
    /// Distributivity witnesses and projector-pair classification.
    LogicDemo(RunArgs),
    /// Purification round-trip residuals on random pinched densities.
    PurifyDemo(RunArgs),
}

const EXIT_USAGE: u8 = 1;
const EXIT_CHECK_FAILED: u8 = 2;
const EXIT_TRUNCATION: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(EXIT_USAGE);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let (name, args, run): (&str, &RunArgs, fn(&RunConfig) -> anyhow::Result<commands::CommandOutcome>) =
        match &cli.command {
            Command::Lindblad(a) => ("lindblad", a, commands::lindblad),
            Command::Oracle(a) => ("oracle", a, commands::oracle),
            Command::Simulate(a) => ("simulate", a, commands::simulate),
            Command::FilterVerify(a) => ("filter-verify", a, commands::filter_verify),
            Command::LogicDemo(a) => ("logic-demo", a, commands::logic_demo),
            Command::PurifyDemo(a) => ("purify-demo", a, commands::purify_demo),
        };
    let cfg = match RunConfig::load(name, args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run(&cfg) {
        Ok(outcome) if outcome.pass => ExitCode::SUCCESS,
        Ok(_) => {
            eprintln!("error: internal invariant checks failed (see {}.json)", cfg.out.display());
            ExitCode::from(EXIT_CHECK_FAILED)
        }
        Err(e) => {
            let truncation = e
                .downcast_ref::<catfilter_core::Error>()
                .map(|c| matches!(c, catfilter_core::Error::TruncationInsufficient { .. }))
                .unwrap_or(false)
                || e.to_string().contains("truncation");
            eprintln!("error: {e:#}");
            if truncation {
                ExitCode::from(EXIT_TRUNCATION)
            } else {
                ExitCode::from(EXIT_USAGE)
            }
        }
    }
}
