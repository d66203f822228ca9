//! Reproducibility scoring: mean pairwise normalized Levenshtein similarity
//! of raw completions across repeated runs of identical inputs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::levenshtein::normalized_similarity;
use super::EvalError;

/// One sample's mean pairwise run similarity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRepro {
    pub id: String,
    pub score: f64,
}

/// Corpus reproducibility report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproReport {
    pub n_runs: usize,
    pub per_sample: Vec<SampleRepro>,
    pub corpus_score: f64,
}

/// Score every sample's run set. Every sample must carry the same number of
/// runs and at least two; per-sample score is the mean similarity over all
/// unordered run pairs, corpus score the mean over samples.
pub fn reproducibility(
    runs_per_sample: &BTreeMap<String, Vec<String>>,
) -> Result<ReproReport, EvalError> {
    if runs_per_sample.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n_runs = runs_per_sample.values().next().map(Vec::len).unwrap_or(0);
    if n_runs < 2 {
        return Err(EvalError::TooFewRuns(n_runs));
    }
    let mut per_sample = Vec::with_capacity(runs_per_sample.len());
    for (id, runs) in runs_per_sample {
        if runs.len() != n_runs {
            return Err(EvalError::RunCountMismatch {
                id: id.clone(),
                expected: n_runs,
                actual: runs.len(),
            });
        }
        let mut sims = Vec::with_capacity(runs.len() * (runs.len() - 1) / 2);
        for i in 0..runs.len() {
            for j in (i + 1)..runs.len() {
                sims.push(normalized_similarity(&runs[i], &runs[j]));
            }
        }
        // Sum in value order so the score is bit-identical under any
        // permutation of the runs (float addition is not associative).
        sims.sort_by(f64::total_cmp);
        let total: f64 = sims.iter().sum();
        per_sample.push(SampleRepro {
            id: id.clone(),
            score: total / sims.len() as f64,
        });
    }
    let corpus_score = per_sample.iter().map(|s| s.score).sum::<f64>() / per_sample.len() as f64;
    Ok(ReproReport {
        n_runs,
        per_sample,
        corpus_score,
    })
}
