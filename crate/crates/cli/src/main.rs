//! `hrex`: pipeline driver for zero-shot hyper-relational fact extraction —
//! dataset conversion, prompt-based extraction against pluggable completion
//! backends, scoring, reproducibility measurement, and report generation.
//!
//! Exit codes: 0 clean, 1 per-sample errors occurred, 2 fatal config/IO
//! error.

mod commands;
mod records;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "hrex",
    version,
    about = "Zero-shot hyper-relational fact extraction and evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a raw dataset release to canonical fact JSONL.
    #[command(subcommand)]
    Convert(commands::convert::Format),
    /// Run extraction over a dataset and write records + manifest.
    Extract(commands::extract::ExtractArgs),
    /// Score predictions against gold.
    Eval(commands::eval::EvalArgs),
    /// Measure cross-run reproducibility of raw completions.
    Repro(commands::repro::ReproArgs),
    /// Render evaluation reports as one markdown document.
    Report(commands::report::ReportArgs),
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Convert(format) => commands::convert::run(&format),
        Command::Extract(args) => commands::extract::run(&args),
        Command::Eval(args) => commands::eval::run(&args),
        Command::Repro(args) => commands::repro::run(&args),
        Command::Report(args) => commands::report::run(&args),
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    };
    std::process::exit(code);
}
