//! `hrex extract`: run the prompt over every dataset sample, parse each
//! completion, and stream deterministic records to JSONL.
//!
//! Samples are fanned out to a bounded worker pool; a single writer
//! flushes records in dataset order, line by line, so an interrupted run
//! leaves a valid prefix behind. Wall-clock timing goes only to the
//! manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Duration;

use anyhow::Context;
use clap::{Args, ValueEnum};
use hrex_core::dataset::{load_samples, sample_subset, SentenceSample};
use hrex_core::gateway::{
    now_rfc3339, CompletionBackend, CompletionParams, Gateway, HttpBackend, MockBackend,
    ReplayBackend,
};
use hrex_core::hash::content_hash;
use hrex_core::prompt::{build_prompt_spec, load_exemplar, render, PromptSpec};
use hrex_core::{load_ontology, parse_completion, Ontology};

use crate::records::{ExtractionRecord, RecordParams, RunManifest, RunOutput};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Http,
    Replay,
    Mock,
}

#[derive(Args)]
pub struct ExtractArgs {
    /// Canonical sentence JSONL to extract from.
    #[arg(long, value_name = "FILE")]
    pub dataset: PathBuf,
    /// Ontology JSON (relations + qualifiers with definitions).
    #[arg(long, value_name = "FILE")]
    pub ontology: PathBuf,
    /// Chain-of-thought exemplar JSON.
    #[arg(long, value_name = "FILE")]
    pub exemplar: PathBuf,
    /// Completion backend.
    #[arg(long, value_enum)]
    pub backend: BackendArg,
    /// Completions per sample.
    #[arg(long, default_value_t = 1)]
    pub runs: u32,
    /// Sampling temperature.
    #[arg(long, default_value_t = 0.0)]
    pub temperature: f64,
    /// Completion cache directory (doubles as the fixture dir for replay).
    #[arg(long, value_name = "DIR")]
    pub cache: Option<PathBuf>,
    /// Records JSONL destination.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Model identifier sent to the backend and recorded per sample.
    #[arg(long, default_value = "gpt-3.5-turbo")]
    pub model: String,
    /// Completion length cap.
    #[arg(long, default_value_t = 1024)]
    pub max_tokens: u32,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 60.0)]
    pub timeout_secs: f64,
    /// Concurrent samples in flight.
    #[arg(long, default_value_t = 4)]
    pub jobs: usize,
    /// Drop facts with out-of-ontology names instead of keeping them.
    #[arg(long)]
    pub strict: bool,
    /// Canned completion text for the mock backend.
    #[arg(long, value_name = "TEXT")]
    pub mock_text: Option<String>,
    /// Extract only a seeded pseudo-random subset of this size.
    #[arg(long, value_name = "N")]
    pub sample: Option<usize>,
    /// Seed for --sample selection.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Manifest destination (default: <out>.manifest.json).
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
}

pub fn run(args: &ExtractArgs) -> anyhow::Result<i32> {
    let started_at = now_rfc3339();

    let ontology_text = fs::read_to_string(&args.ontology)
        .with_context(|| format!("cannot read {}", args.ontology.display()))?;
    let ontology = load_ontology(&args.ontology)?;
    let exemplar_text = fs::read_to_string(&args.exemplar)
        .with_context(|| format!("cannot read {}", args.exemplar.display()))?;
    let exemplar = load_exemplar(&args.exemplar)?;
    let spec = build_prompt_spec(&ontology, exemplar)?;

    let mut samples = load_samples(&args.dataset)?;
    if let Some(n) = args.sample {
        samples = sample_subset(&samples, n, args.seed)?;
    }

    let backend: Box<dyn CompletionBackend> = match args.backend {
        BackendArg::Mock => Box::new(MockBackend::new(
            args.mock_text.clone().unwrap_or_default(),
        )),
        BackendArg::Replay => {
            let dir = args
                .cache
                .as_ref()
                .context("--backend replay needs --cache pointing at the fixture directory")?;
            Box::new(ReplayBackend::new(dir))
        }
        BackendArg::Http => Box::new(HttpBackend::from_env()?),
    };
    let backend_kind = backend.kind();
    let gateway = Gateway::new(backend, args.cache.clone())
        .with_inflight_limit(args.jobs.max(1));
    let params = CompletionParams {
        model: args.model.clone(),
        temperature: args.temperature,
        max_tokens: args.max_tokens,
        timeout: Duration::from_secs_f64(args.timeout_secs),
    };
    params.validate()?;
    if args.runs == 0 {
        anyhow::bail!("--runs must be >= 1");
    }

    let out_file = fs::File::create(&args.out)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    let mut writer = BufWriter::new(out_file);

    let n_errors = AtomicUsize::new(0);
    let next = AtomicUsize::new(0);
    let jobs = args.jobs.max(1).min(samples.len().max(1));
    let (tx, rx) = mpsc::channel::<(usize, ExtractionRecord)>();

    std::thread::scope(|scope| -> anyhow::Result<()> {
        for _ in 0..jobs {
            let tx = tx.clone();
            let samples = &samples;
            let spec = &spec;
            let ontology = &ontology;
            let gateway = &gateway;
            let params = &params;
            let next = &next;
            let n_errors = &n_errors;
            scope.spawn(move || loop {
                let idx = next.fetch_add(1, Ordering::SeqCst);
                let Some(sample) = samples.get(idx) else {
                    break;
                };
                let record = process_sample(
                    sample,
                    spec,
                    ontology,
                    gateway,
                    params,
                    args.runs,
                    args.strict,
                );
                if record.error.is_some() {
                    n_errors.fetch_add(1, Ordering::SeqCst);
                }
                if tx.send((idx, record)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        // Flush records in dataset order as soon as the prefix is complete.
        let mut pending: BTreeMap<usize, ExtractionRecord> = BTreeMap::new();
        let mut expect = 0usize;
        for (idx, record) in rx {
            pending.insert(idx, record);
            while let Some(record) = pending.remove(&expect) {
                let line = serde_json::to_string(&record)?;
                writeln!(writer, "{line}")?;
                writer.flush()?;
                expect += 1;
            }
        }
        Ok(())
    })?;

    let n_errors = n_errors.load(Ordering::SeqCst);
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        dataset_path: args.dataset.display().to_string(),
        ontology_path: args.ontology.display().to_string(),
        ontology_hash: content_hash(&[&ontology_text]),
        exemplar_path: args.exemplar.display().to_string(),
        exemplar_hash: content_hash(&[&exemplar_text]),
        backend: backend_kind,
        model: args.model.clone(),
        temperature: args.temperature,
        max_tokens: args.max_tokens,
        timeout_secs: args.timeout_secs,
        n_runs: args.runs,
        strict: args.strict,
        jobs,
        sample: args.sample,
        seed: args.sample.map(|_| args.seed),
        cache_dir: args.cache.as_ref().map(|p| p.display().to_string()),
        n_samples: samples.len(),
        n_errors,
        started_at,
        finished_at: now_rfc3339(),
    };
    let manifest_path = args
        .manifest
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.manifest.json", args.out.display())));
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("cannot write {}", manifest_path.display()))?;

    eprintln!(
        "extracted {} samples ({} errored) via {} -> {}",
        samples.len(),
        n_errors,
        backend_kind,
        args.out.display()
    );
    Ok(if n_errors > 0 { 1 } else { 0 })
}

/// Render, complete, and parse one sample. Failures become an error
/// record rather than aborting the run.
fn process_sample(
    sample: &SentenceSample,
    spec: &PromptSpec,
    ontology: &Ontology,
    gateway: &Gateway,
    params: &CompletionParams,
    n_runs: u32,
    strict: bool,
) -> ExtractionRecord {
    let record_params = RecordParams {
        model: params.model.clone(),
        temperature: params.temperature,
        n_runs,
    };
    let mut record = ExtractionRecord {
        id: sample.id.clone(),
        text: sample.text.clone(),
        prompt_hash: String::new(),
        params: record_params,
        runs: Vec::new(),
        error: None,
    };
    let rendered = match render(spec, &sample.text) {
        Ok(r) => r,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    record.prompt_hash = rendered.prompt_hash.clone();
    match gateway.complete_runs(&rendered, params, n_runs) {
        Ok(results) => {
            record.runs = results
                .into_iter()
                .map(|r| {
                    let parse = parse_completion(&r.raw_text, ontology, strict);
                    RunOutput {
                        raw_text: r.raw_text,
                        parse,
                    }
                })
                .collect();
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}
