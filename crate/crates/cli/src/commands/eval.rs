//! `hrex eval`: score predictions against gold sentences.
//!
//! Gold is canonical sentence JSONL; predictions are either extraction
//! records (scored at `--score-run`) or another canonical JSONL whose
//! facts are treated as predictions. The corpus is the gold id list in
//! file order; prediction ids must be a subset of it.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Context;
use clap::{Args, ValueEnum};
use hrex_core::dataset::load_samples;
use hrex_core::eval::{
    evaluate_exact, evaluate_soft, Alignment, EvalReport, ExactSimilarity, Granularity,
    HttpEmbeddingSimilarity, SamplePair, SimilarityBackend, TokenF1Similarity,
    TrigramCosineSimilarity,
};
use hrex_core::HyperFact;

use crate::records::load_records;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Exact,
    Soft,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum SimArg {
    #[default]
    Exact,
    #[value(name = "token_f1")]
    TokenF1,
    Trigram,
    Http,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum AlignArg {
    #[default]
    Greedy,
    Optimal,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum GranularityArg {
    #[default]
    Fact,
    Blob,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Scoring metric.
    #[arg(long, value_enum)]
    pub metric: MetricArg,
    /// Similarity backend for --metric soft.
    #[arg(long, value_enum, default_value_t)]
    pub sim: SimArg,
    /// Gold sentence JSONL.
    #[arg(long, value_name = "FILE")]
    pub gold: PathBuf,
    /// Predictions: extraction records or canonical sentence JSONL.
    #[arg(long, value_name = "FILE")]
    pub pred: PathBuf,
    /// Lowercase all fields before comparison.
    #[arg(long)]
    pub ignore_case: bool,
    /// Alignment strategy for --metric soft.
    #[arg(long, value_enum, default_value_t)]
    pub align: AlignArg,
    /// Score per fact or per newline-joined blob.
    #[arg(long, value_enum, default_value_t)]
    pub granularity: GranularityArg,
    /// Which run's facts to score when predictions are records.
    #[arg(long, default_value_t = 0)]
    pub score_run: usize,
    /// Report JSON destination (default: standard output).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Optional CSV destination.
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
    /// Embedding service URL for --sim http.
    #[arg(long, value_name = "URL")]
    pub embed_url: Option<String>,
    /// Embedding request timeout in seconds.
    #[arg(long, default_value_t = 30.0)]
    pub embed_timeout_secs: f64,
}

pub fn run(args: &EvalArgs) -> anyhow::Result<i32> {
    let gold = load_samples(&args.gold)?;
    let preds = load_predictions(&args.pred, args.score_run)?;

    let gold_ids: HashSet<&str> = gold.iter().map(|s| s.id.as_str()).collect();
    let mut stray: Vec<&str> = preds
        .keys()
        .map(String::as_str)
        .filter(|id| !gold_ids.contains(id))
        .collect();
    if !stray.is_empty() {
        stray.sort_unstable();
        anyhow::bail!(
            "prediction ids not present in gold: {}",
            stray.join(", ")
        );
    }

    let pairs: Vec<SamplePair> = gold
        .iter()
        .map(|s| SamplePair {
            id: s.id.clone(),
            gold: s.gold.clone(),
            pred: preds.get(&s.id).cloned().unwrap_or_default(),
        })
        .collect();

    let report = match args.metric {
        MetricArg::Exact => evaluate_exact(&pairs, args.ignore_case)?,
        MetricArg::Soft => {
            let backend = make_similarity(args)?;
            let alignment = match args.align {
                AlignArg::Greedy => Alignment::Greedy,
                AlignArg::Optimal => Alignment::Optimal,
            };
            let granularity = match args.granularity {
                GranularityArg::Fact => Granularity::Fact,
                GranularityArg::Blob => Granularity::Blob,
            };
            evaluate_soft(
                &pairs,
                backend.as_ref(),
                alignment,
                granularity,
                args.ignore_case,
            )?
        }
    };

    print_summary(&report);
    let json = report.to_json() + "\n";
    match &args.out {
        Some(path) => fs::write(path, json)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{json}"),
    }
    if let Some(path) = &args.csv {
        fs::write(path, report.to_csv())
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(0)
}

fn make_similarity(args: &EvalArgs) -> anyhow::Result<Box<dyn SimilarityBackend>> {
    Ok(match args.sim {
        SimArg::Exact => Box::new(ExactSimilarity),
        SimArg::TokenF1 => Box::new(TokenF1Similarity),
        SimArg::Trigram => Box::new(TrigramCosineSimilarity),
        SimArg::Http => {
            let url = args
                .embed_url
                .as_ref()
                .context("--sim http needs --embed-url")?;
            let api_key = std::env::var("HREX_API_KEY").ok().filter(|k| !k.is_empty());
            Box::new(HttpEmbeddingSimilarity::new(
                url.clone(),
                api_key,
                Duration::from_secs_f64(args.embed_timeout_secs),
            ))
        }
    })
}

/// Map sample id to predicted facts, accepting either file shape.
fn load_predictions(
    path: &Path,
    score_run: usize,
) -> anyhow::Result<HashMap<String, Vec<HyperFact>>> {
    let mut preds = HashMap::new();
    if is_record_file(path)? {
        for record in load_records(path)? {
            let facts = match record.runs.get(score_run) {
                Some(run) => run.parse.facts.clone(),
                None if record.error.is_some() => Vec::new(),
                None => anyhow::bail!(
                    "record {} has {} runs; --score-run {} is out of range",
                    record.id,
                    record.runs.len(),
                    score_run
                ),
            };
            if preds.insert(record.id.clone(), facts).is_some() {
                anyhow::bail!("duplicate prediction id {}", record.id);
            }
        }
    } else {
        for sample in load_samples(path)? {
            preds.insert(sample.id, sample.gold);
        }
    }
    Ok(preds)
}

/// Extraction-record files carry "runs" and "prompt_hash" on every line;
/// canonical sentence files carry neither.
fn is_record_file(path: &Path) -> anyhow::Result<bool> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let Some(line) = text.lines().find(|l| !l.trim().is_empty()) else {
        return Ok(false);
    };
    let value: serde_json::Value = serde_json::from_str(line)
        .with_context(|| format!("{}: first line is not JSON", path.display()))?;
    Ok(value.get("runs").is_some() && value.get("prompt_hash").is_some())
}

fn print_summary(report: &EvalReport) {
    eprintln!("metric={} over {} samples", report.metric, report.per_sample.len());
    eprintln!("          precision   recall       f1");
    eprintln!(
        "  micro      {:.4}   {:.4}   {:.4}",
        report.micro.precision, report.micro.recall, report.micro.f1
    );
    eprintln!(
        "  macro      {:.4}   {:.4}   {:.4}",
        report.macro_.precision, report.macro_.recall, report.macro_.f1
    );
}
