//! `hrex report`: merge evaluation and reproducibility reports into one
//! markdown document.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use hrex_core::eval::{EvalReport, ReproReport};
use hrex_core::markdown::render_markdown;

#[derive(Args)]
pub struct ReportArgs {
    /// Evaluation report JSON (repeatable).
    #[arg(long = "eval", value_name = "FILE")]
    pub eval: Vec<PathBuf>,
    /// Reproducibility report JSON (repeatable).
    #[arg(long = "repro", value_name = "FILE")]
    pub repro: Vec<PathBuf>,
    /// Row label for each --eval file, in order (default: file stem).
    #[arg(long = "label", value_name = "NAME")]
    pub label: Vec<String>,
    /// Run manifest whose fields become the provenance section.
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// Markdown destination (default: standard output).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn run(args: &ReportArgs) -> anyhow::Result<i32> {
    let mut eval_entries = Vec::new();
    for (i, path) in args.eval.iter().enumerate() {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        let report = EvalReport::from_json(&text)
            .with_context(|| format!("{}: bad evaluation report", path.display()))?;
        let label = args.label.get(i).cloned().unwrap_or_else(|| stem(path));
        eval_entries.push((label, report));
    }

    let mut repro_entries = Vec::new();
    for path in &args.repro {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        let report: ReproReport = serde_json::from_str(&text)
            .with_context(|| format!("{}: bad reproducibility report", path.display()))?;
        repro_entries.push((stem(path), report));
    }

    let mut provenance = Vec::new();
    if let Some(path) = &args.manifest {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .with_context(|| format!("{}: bad manifest", path.display()))?;
        let object = value
            .as_object()
            .with_context(|| format!("{}: manifest is not a JSON object", path.display()))?;
        for (key, val) in object {
            let shown = match val {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            provenance.push((key.clone(), shown));
        }
    }

    let markdown = render_markdown(&eval_entries, &repro_entries, &provenance)?;
    match &args.out {
        Some(path) => fs::write(path, &markdown)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{markdown}"),
    }
    Ok(0)
}
