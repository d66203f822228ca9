//! Persistent run artifacts: per-sample extraction records (JSONL) and the
//! run manifest. Records hold only deterministic content so replayed runs
//! are byte-identical; wall-clock fields live in the manifest.

use std::io::{BufRead, BufReader};
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use hrex_core::gateway::BackendKind;
use hrex_core::parser::ParseOutcome;

/// Completion parameters echoed into every record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordParams {
    pub model: String,
    pub temperature: f64,
    pub n_runs: u32,
}

/// One run's raw completion and what the parser made of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub raw_text: String,
    #[serde(flatten)]
    pub parse: ParseOutcome,
}

/// One sample's extraction result. `runs` holds `n_runs` entries unless
/// the sample failed, in which case `error` is set and `runs` holds
/// whatever completed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionRecord {
    pub id: String,
    pub text: String,
    pub prompt_hash: String,
    pub params: RecordParams,
    pub runs: Vec<RunOutput>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

/// Everything needed to re-run an extraction against replay fixtures,
/// plus wall-clock timing (kept out of the records for determinism).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub dataset_path: String,
    pub ontology_path: String,
    pub ontology_hash: String,
    pub exemplar_path: String,
    pub exemplar_hash: String,
    pub backend: BackendKind,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: f64,
    pub n_runs: u32,
    pub strict: bool,
    pub jobs: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sample: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cache_dir: Option<String>,
    pub n_samples: usize,
    pub n_errors: usize,
    pub started_at: String,
    pub finished_at: String,
}

/// Read an extraction-record JSONL file, skipping blank lines.
pub fn load_records(path: impl AsRef<Path>) -> anyhow::Result<Vec<ExtractionRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("cannot read {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ExtractionRecord = serde_json::from_str(&line)
            .with_context(|| format!("{}:{}: bad extraction record", path.display(), i + 1))?;
        records.push(record);
    }
    Ok(records)
}
