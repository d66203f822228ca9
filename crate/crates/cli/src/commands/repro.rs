//! `hrex repro`: cross-run reproducibility of raw completions.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use hrex_core::eval::reproducibility;

use crate::records::load_records;

#[derive(Args)]
pub struct ReproArgs {
    /// Extraction-record JSONL with at least two runs per sample.
    #[arg(long, value_name = "FILE")]
    pub pred: PathBuf,
    /// Optional report JSON destination.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

pub fn run(args: &ReproArgs) -> anyhow::Result<i32> {
    let records = load_records(&args.pred)?;
    let mut runs: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut skipped = 0usize;
    for record in &records {
        if record.error.is_some() {
            skipped += 1;
            continue;
        }
        runs.insert(
            record.id.clone(),
            record.runs.iter().map(|r| r.raw_text.clone()).collect(),
        );
    }
    if skipped > 0 {
        eprintln!("note: excluded {skipped} errored records");
    }

    let report = reproducibility(&runs)?;
    println!(
        "reproducibility {:.2}% ({} samples, {} runs each)",
        report.corpus_score * 100.0,
        report.per_sample.len(),
        report.n_runs
    );
    if let Some(path) = &args.out {
        let json = serde_json::to_string_pretty(&report)? + "\n";
        fs::write(path, json).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(0)
}
