//! `wsmac`: interference characterization, model training and MAC
//! simulation from the command line.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 internal invariant
//! violation. Every command writes `manifest.json` beside its outputs.

mod analysis;
mod experiments;
mod failure;
mod inputs;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use failure::CmdResult;

#[derive(Debug, Parser)]
#[command(
    name = "wsmac",
    version,
    about = "Interference-aware white-space MAC toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Slot features, feature histogram and window segmentation of a trace.
    Characterize(analysis::CharacterizeArgs),
    /// Label trace windows PEAK/OFFPEAK and extract training windows.
    Segment(analysis::SegmentArgs),
    /// Train the peak/off-peak model pair.
    Train(analysis::TrainArgs),
    /// Score a model against a ground-truth trace.
    Evaluate(analysis::EvaluateArgs),
    /// Predict FREE slots and receive slots for one data period.
    Predict(analysis::PredictArgs),
    /// Generate a synthetic arrival trace.
    Synth(analysis::SynthArgs),
    /// Write a built-in simulation scenario as a config file.
    Scenario(experiments::ScenarioArgs),
    /// Run one simulation.
    Simulate(experiments::SimulateArgs),
    /// Run configs over several seeds in parallel and aggregate.
    Compare(experiments::CompareArgs),
    /// Aggregate existing result files.
    Report(experiments::ReportArgs),
}

fn run(cmd: &Command) -> CmdResult<()> {
    match cmd {
        Command::Characterize(a) => analysis::characterize(a),
        Command::Segment(a) => analysis::segment(a),
        Command::Train(a) => analysis::train(a),
        Command::Evaluate(a) => analysis::evaluate(a),
        Command::Predict(a) => analysis::predict(a),
        Command::Synth(a) => analysis::synth(a),
        Command::Scenario(a) => experiments::scenario(a),
        Command::Simulate(a) => experiments::simulate(a),
        Command::Compare(a) => experiments::compare(a),
        Command::Report(a) => experiments::report(a),
    }
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
