//! `bmfsim`: sample from MF/BMF distributions, reproduce the rejection-count
//! benchmark and fit the latent eigenmodel.
//!
//! Exit status: 0 on success, 1 when a command fails, 2 on bad usage.

mod bench;
mod fit;
mod manifest;
mod output;
mod sample;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "bmfsim", version, about = "Simulation on the Stiefel manifold")]
struct Cli {
    /// Master seed; chains and benchmark cells use independent streams of it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file (or directory for eigenmodel-fit). Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw from MF(C).
    SampleMf(sample::SampleMfArgs),
    /// Draw from BMF(A, B, C) by Gibbs sampling.
    SampleBmf(sample::SampleBmfArgs),
    /// Mean rejection counts of the exact MF sampler over a grid of (m, R, d).
    BenchRejection(bench::BenchArgs),
    /// Fit the latent eigenmodel to a binary network.
    EigenmodelFit(fit::FitArgs),
}

/// Global settings shared by every command.
#[derive(Clone, Debug)]
pub struct Globals {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
}

/// Invalid combination of arguments discovered after parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let globals = Globals { seed: cli.seed, out: cli.out, format: cli.format };
    let result = match cli.command {
        Command::SampleMf(args) => sample::run_mf(&globals, &args),
        Command::SampleBmf(args) => sample::run_bmf(&globals, &args),
        Command::BenchRejection(args) => bench::run(&globals, &args),
        Command::EigenmodelFit(args) => fit::run(&globals, &args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
