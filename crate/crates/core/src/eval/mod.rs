//! Scoring: exact-match quintuple P/R/F1, soft-alignment P/R/F1 over
//! serialized facts, and pairwise-Levenshtein reproducibility.

pub mod exact;
pub mod levenshtein;
pub mod report;
pub mod repro;
pub mod similarity;
pub mod soft;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use exact::exact_match;
pub use levenshtein::{levenshtein, normalized_similarity};
pub use report::{evaluate_exact, evaluate_soft, EvalReport, Granularity, SamplePair, SampleScore};
pub use repro::{reproducibility, ReproReport, SampleRepro};
pub use similarity::{
    token_f1, trigram_cosine, ExactSimilarity, HttpEmbeddingSimilarity, SimilarityBackend,
    TokenF1Similarity, TrigramCosineSimilarity,
};
pub use soft::{soft_match, Alignment};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("similarity backend {backend:?} returned {value} outside [0, 1]")]
    SimilarityOutOfRange { backend: String, value: f64 },
    #[error("similarity backend failure: {0}")]
    SimilarityBackend(String),
    #[error("sample {id:?} has {actual} runs, expected {expected}")]
    RunCountMismatch {
        id: String,
        expected: usize,
        actual: usize,
    },
    #[error("reproducibility needs at least 2 runs per sample, got {0}")]
    TooFewRuns(usize),
    #[error("empty input")]
    EmptyInput,
}

/// Precision/recall/F1 with the supports they were computed from.
///
/// `matched` is the intersection size for exact scoring and the summed
/// similarity mass for soft scoring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub n_pred: usize,
    pub n_gold: usize,
    pub matched: f64,
}

impl Prf {
    /// Apply the empty-side conventions: both sides empty scores 1.0
    /// across the board, exactly one side empty scores 0.0.
    pub fn from_counts(n_pred: usize, n_gold: usize, matched: f64) -> Self {
        let (precision, recall, f1) = match (n_pred, n_gold) {
            (0, 0) => (1.0, 1.0, 1.0),
            (0, _) | (_, 0) => (0.0, 0.0, 0.0),
            (np, ng) => {
                let p = matched / np as f64;
                let r = matched / ng as f64;
                let f1 = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
                (p, r, f1)
            }
        };
        Self {
            precision,
            recall,
            f1,
            n_pred,
            n_gold,
            matched,
        }
    }
}

/// How per-sample scores combine into a corpus score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateMode {
    /// Pool supports (or similarity mass) across samples, then compute.
    Micro,
    /// Unweighted mean of per-sample precision, recall, and F1.
    Macro,
}

/// Combine per-sample scores; `matched`/`n_pred`/`n_gold` in the result
/// are always the pooled sums, whichever mode computed the rates.
pub fn aggregate(per_sample: &[Prf], mode: AggregateMode) -> Result<Prf, EvalError> {
    if per_sample.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n_pred: usize = per_sample.iter().map(|s| s.n_pred).sum();
    let n_gold: usize = per_sample.iter().map(|s| s.n_gold).sum();
    let matched: f64 = per_sample.iter().map(|s| s.matched).sum();
    match mode {
        AggregateMode::Micro => Ok(Prf::from_counts(n_pred, n_gold, matched)),
        AggregateMode::Macro => {
            let n = per_sample.len() as f64;
            Ok(Prf {
                precision: per_sample.iter().map(|s| s.precision).sum::<f64>() / n,
                recall: per_sample.iter().map(|s| s.recall).sum::<f64>() / n,
                f1: per_sample.iter().map(|s| s.f1).sum::<f64>() / n,
                n_pred,
                n_gold,
                matched,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_empty_scores_one() {
        let prf = Prf::from_counts(0, 0, 0.0);
        assert_eq!((prf.precision, prf.recall, prf.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn one_side_empty_scores_zero() {
        let prf = Prf::from_counts(3, 0, 0.0);
        assert_eq!((prf.precision, prf.recall, prf.f1), (0.0, 0.0, 0.0));
        let prf = Prf::from_counts(0, 3, 0.0);
        assert_eq!((prf.precision, prf.recall, prf.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn f1_is_harmonic_mean() {
        let prf = Prf::from_counts(2, 1, 1.0);
        assert_eq!(prf.precision, 0.5);
        assert_eq!(prf.recall, 1.0);
        assert!((prf.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_sample_micro_equals_macro() {
        let prf = Prf::from_counts(2, 4, 1.0);
        let micro = aggregate(&[prf], AggregateMode::Micro).unwrap();
        let makro = aggregate(&[prf], AggregateMode::Macro).unwrap();
        assert_eq!(micro, makro);
        assert_eq!(micro, prf);
    }

    #[test]
    fn micro_pools_counts() {
        // (1 of 2 pred, 1 of 1 gold) and (0 of 1, 0 of 1)
        let a = Prf::from_counts(2, 1, 1.0);
        let b = Prf::from_counts(1, 1, 0.0);
        let micro = aggregate(&[a, b], AggregateMode::Micro).unwrap();
        assert!((micro.precision - 1.0 / 3.0).abs() < 1e-12);
        assert!((micro.recall - 1.0 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn macro_averages_rates() {
        let a = Prf::from_counts(1, 1, 1.0); // P = 1
        let b = Prf::from_counts(1, 1, 0.0); // P = 0
        let makro = aggregate(&[a, b], AggregateMode::Macro).unwrap();
        assert_eq!(makro.precision, 0.5);
    }

    #[test]
    fn aggregate_empty_errors() {
        assert!(matches!(
            aggregate(&[], AggregateMode::Micro),
            Err(EvalError::EmptyInput)
        ));
    }
}
