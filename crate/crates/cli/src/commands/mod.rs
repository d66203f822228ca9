//! One module per subcommand; each exposes a clap `Args` struct and a
//! `run(&args) -> anyhow::Result<i32>` returning the process exit code.

pub mod convert;
pub mod eval;
pub mod extract;
pub mod repro;
pub mod report;
