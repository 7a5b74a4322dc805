//! distag — induce uni-lexical supertags from discontinuous treebanks,
//! predict them, and parse sentences back into discontinuous trees.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use commands::{
    EvalArgs, ExtractArgs, ParseArgs, RoundtripArgs, SweepKArgs, TagArgs, TrainArgs,
};

/// Exit code contract: 0 success, 1 usage, 2 data, 3 broken invariant.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Invariant(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }
}

/// Wraps any error from the core pipeline as a data error.
pub fn data(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

#[derive(Parser)]
#[command(name = "distag", version, about = "supertag-based discontinuous parsing")]
struct Cli {
    /// Optional `key = value` config file; flags override its entries.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Induce a supertag inventory, lexicon and grammar from a treebank
    Extract(ExtractArgs),
    /// Train the suffix-backoff tagging model from an extracted lexicon
    Train(TrainArgs),
    /// Emit k-best supertag predictions for raw or gold sentences
    Tag(TagArgs),
    /// Parse sentences from per-position supertag predictions
    Parse(ParseArgs),
    /// Score predicted trees against gold trees
    Eval(EvalArgs),
    /// Check that every tree survives the trip through its supertags
    Roundtrip(RoundtripArgs),
    /// Parse the dev set at several k and report a per-k table
    SweepK(SweepKArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Help and version are successes; everything else clap
            // reports is a usage problem, exit 1 by our contract.
            let ok = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    let mut settings = match config::Settings::load(cli.config.as_deref()) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.code());
        }
    };
    let result = match cli.command {
        Command::Extract(a) => commands::extract(&mut settings, a),
        Command::Train(a) => commands::train(&mut settings, a),
        Command::Tag(a) => commands::tag(&mut settings, a),
        Command::Parse(a) => commands::parse(&mut settings, a),
        Command::Eval(a) => commands::eval(&mut settings, a),
        Command::Roundtrip(a) => commands::roundtrip(&mut settings, a),
        Command::SweepK(a) => commands::sweep_k(&mut settings, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
