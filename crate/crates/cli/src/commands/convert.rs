//! `hrex convert`: raw dataset releases to canonical sentence/fact JSONL.

use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use clap::Subcommand;
use hrex_core::dataset::{convert_hyperred, FieldMapping};

#[derive(Subcommand)]
pub enum Format {
    /// HyperRED-style token-span JSON or JSONL.
    Hyperred {
        /// Raw release file.
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        /// Canonical JSONL destination.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Optional JSON field-mapping overriding the default field names.
        #[arg(long, value_name = "FILE")]
        mapping: Option<PathBuf>,
    },
}

pub fn run(format: &Format) -> anyhow::Result<i32> {
    let Format::Hyperred { input, out, mapping } = format;
    let mapping = match mapping {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read mapping file {}", path.display()))?;
            serde_json::from_str::<FieldMapping>(&text)
                .with_context(|| format!("bad mapping file {}", path.display()))?
        }
        None => FieldMapping::default(),
    };
    let stats = convert_hyperred(input, &mapping, out)?;
    println!("{}", serde_json::to_string_pretty(&stats)?);
    Ok(if stats.skipped.is_empty() { 0 } else { 1 })
}
