//! `reltik`: manifold-valued Tikhonov denoising from the command line.

mod denoise;
mod error;
mod eval;
mod experiment;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "reltik", version, about = "Denoise sphere-, rotation- and color-valued signals on graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Denoise a signal, rotation list or image.
    Denoise(denoise::DenoiseArgs),
    /// Run one of the built-in synthetic experiments.
    Experiment(experiment::ExperimentArgs),
    /// Compare a result against a ground truth.
    Eval(eval::EvalArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Denoise(a) => denoise::run(a),
        Command::Experiment(a) => experiment::run(a),
        Command::Eval(a) => eval::run(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}
