//! Corpus-level evaluation drivers and report serialization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::fact::{serialize_fact, HyperFact};

use super::similarity::SimilarityBackend;
use super::soft::{soft_match, Alignment};
use super::{aggregate, exact_match, AggregateMode, EvalError, Prf};

/// What string unit the soft scorer compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    /// One-to-one alignment over canonical per-fact serializations.
    Fact,
    /// Single similarity over each sample's whole serialized output.
    Blob,
}

/// One sample's gold and predicted facts, ready to score.
#[derive(Debug, Clone)]
pub struct SamplePair {
    pub id: String,
    pub gold: Vec<HyperFact>,
    pub pred: Vec<HyperFact>,
}

/// Per-sample score row in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub id: String,
    #[serde(flatten)]
    pub score: Prf,
}

/// Full evaluation report: per-sample rows plus both corpus aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metric: String,
    pub params: BTreeMap<String, String>,
    pub per_sample: Vec<SampleScore>,
    pub micro: Prf,
    #[serde(rename = "macro")]
    pub macro_: Prf,
}

impl EvalReport {
    fn assemble(
        metric: &str,
        params: BTreeMap<String, String>,
        per_sample: Vec<SampleScore>,
    ) -> Result<Self, EvalError> {
        let scores: Vec<Prf> = per_sample.iter().map(|s| s.score).collect();
        Ok(EvalReport {
            metric: metric.to_string(),
            params,
            micro: aggregate(&scores, AggregateMode::Micro)?,
            macro_: aggregate(&scores, AggregateMode::Macro)?,
            per_sample,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// CSV with one row per sample followed by the two corpus rows.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let row = |w: &mut csv::Writer<Vec<u8>>, id: &str, p: &Prf| {
            w.write_record([
                id,
                &p.precision.to_string(),
                &p.recall.to_string(),
                &p.f1.to_string(),
                &p.n_pred.to_string(),
                &p.n_gold.to_string(),
                &p.matched.to_string(),
            ])
            .expect("in-memory csv write");
        };
        w.write_record(["id", "precision", "recall", "f1", "n_pred", "n_gold", "matched"])
            .expect("in-memory csv write");
        for s in &self.per_sample {
            row(&mut w, &s.id, &s.score);
        }
        row(&mut w, "micro", &self.micro);
        row(&mut w, "macro", &self.macro_);
        String::from_utf8(w.into_inner().expect("csv flush")).expect("csv is utf-8")
    }
}

/// Score a corpus with quintuple exact match.
pub fn evaluate_exact(pairs: &[SamplePair], ignore_case: bool) -> Result<EvalReport, EvalError> {
    let per_sample = pairs
        .iter()
        .map(|s| SampleScore {
            id: s.id.clone(),
            score: exact_match(&s.gold, &s.pred, ignore_case),
        })
        .collect();
    let mut params = BTreeMap::new();
    params.insert("ignore_case".into(), ignore_case.to_string());
    params.insert("dedup".into(), "quintuple_set".into());
    EvalReport::assemble("exact", params, per_sample)
}

/// Score a corpus with soft alignment under the given similarity backend.
pub fn evaluate_soft(
    pairs: &[SamplePair],
    backend: &dyn SimilarityBackend,
    alignment: Alignment,
    granularity: Granularity,
    ignore_case: bool,
) -> Result<EvalReport, EvalError> {
    let mut per_sample = Vec::with_capacity(pairs.len());
    for s in pairs {
        let score = match granularity {
            Granularity::Fact => soft_match(&s.gold, &s.pred, backend, alignment, ignore_case)?,
            Granularity::Blob => blob_score(&s.gold, &s.pred, backend, ignore_case)?,
        };
        per_sample.push(SampleScore {
            id: s.id.clone(),
            score,
        });
    }
    let mut params = BTreeMap::new();
    params.insert("sim".into(), backend.name().to_string());
    params.insert(
        "align".into(),
        match alignment {
            Alignment::Greedy => "greedy".into(),
            Alignment::Optimal => "optimal".into(),
        },
    );
    params.insert(
        "granularity".into(),
        match granularity {
            Granularity::Fact => "fact".into(),
            Granularity::Blob => "blob".into(),
        },
    );
    params.insert("ignore_case".into(), ignore_case.to_string());
    params.insert("dedup".into(), "serialized_fact_set".into());
    EvalReport::assemble("soft", params, per_sample)
}

/// Compare each side's whole serialized output as one string; supports
/// become 1/1 and matched carries the similarity itself.
fn blob_score(
    gold: &[HyperFact],
    pred: &[HyperFact],
    backend: &dyn SimilarityBackend,
    ignore_case: bool,
) -> Result<Prf, EvalError> {
    if gold.is_empty() || pred.is_empty() {
        return Ok(Prf::from_counts(pred.len().min(1), gold.len().min(1), 0.0));
    }
    let blob = |facts: &[HyperFact]| {
        let mut text = facts
            .iter()
            .map(serialize_fact)
            .collect::<Vec<_>>()
            .join("\n");
        if ignore_case {
            text = text.to_lowercase();
        }
        text
    };
    let s = backend.score(&blob(pred), &blob(gold))?;
    if !(0.0..=1.0).contains(&s) || s.is_nan() {
        return Err(EvalError::SimilarityOutOfRange {
            backend: backend.name().to_string(),
            value: s,
        });
    }
    Ok(Prf::from_counts(1, 1, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::similarity::{ExactSimilarity, TrigramCosineSimilarity};

    fn fact(h: &str, r: &str, t: &str) -> HyperFact {
        HyperFact::from_strs(h, r, t, &[]).unwrap()
    }

    fn pairs() -> Vec<SamplePair> {
        vec![
            SamplePair {
                id: "s1".into(),
                gold: vec![fact("a", "r", "b")],
                pred: vec![fact("a", "r", "b"), fact("x", "r", "y")],
            },
            SamplePair {
                id: "s2".into(),
                gold: vec![fact("c", "r", "d")],
                pred: vec![],
            },
        ]
    }

    #[test]
    fn exact_report_pools_micro_counts() {
        let report = evaluate_exact(&pairs(), false).unwrap();
        assert_eq!(report.metric, "exact");
        assert_eq!(report.per_sample.len(), 2);
        // pooled: 1 matched of 2 pred, 2 gold
        assert!((report.micro.precision - 0.5).abs() < 1e-12);
        assert!((report.micro.recall - 0.5).abs() < 1e-12);
        // macro: mean of (0.5, 1.0, 2/3) and (0, 0, 0)
        assert!((report.macro_.precision - 0.25).abs() < 1e-12);
        assert!((report.macro_.recall - 0.5).abs() < 1e-12);
    }

    #[test]
    fn soft_exact_backend_matches_exact_fact_level() {
        let report = evaluate_soft(
            &pairs(),
            &ExactSimilarity,
            Alignment::Greedy,
            Granularity::Fact,
            false,
        )
        .unwrap();
        assert_eq!(report.metric, "soft");
        assert!((report.micro.precision - 0.5).abs() < 1e-12);
        assert_eq!(report.params["sim"], "exact");
        assert_eq!(report.params["align"], "greedy");
    }

    #[test]
    fn blob_granularity_uses_unit_supports() {
        let report = evaluate_soft(
            &[SamplePair {
                id: "s1".into(),
                gold: vec![fact("a", "r", "b")],
                pred: vec![fact("a", "r", "b")],
            }],
            &TrigramCosineSimilarity,
            Alignment::Greedy,
            Granularity::Blob,
            false,
        )
        .unwrap();
        assert_eq!(report.per_sample[0].score.n_pred, 1);
        assert_eq!(report.per_sample[0].score.f1, 1.0);
    }

    #[test]
    fn blob_empty_sides_follow_conventions() {
        let both = blob_score(&[], &[], &ExactSimilarity, false).unwrap();
        assert_eq!(both.f1, 1.0);
        let one = blob_score(&[fact("a", "r", "b")], &[], &ExactSimilarity, false).unwrap();
        assert_eq!(one.f1, 0.0);
    }

    #[test]
    fn json_round_trip_preserves_report() {
        let report = evaluate_exact(&pairs(), true).unwrap();
        let back = EvalReport::from_json(&report.to_json()).unwrap();
        assert_eq!(report, back);
    }

    #[test]
    fn json_uses_macro_key() {
        let report = evaluate_exact(&pairs(), false).unwrap();
        let value: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert!(value.get("macro").is_some());
        assert!(value.get("micro").is_some());
        assert!(value.get("macro_").is_none());
    }

    #[test]
    fn csv_has_sample_and_corpus_rows() {
        let report = evaluate_exact(&pairs(), false).unwrap();
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + 2 + 2); // header, two samples, micro + macro
        assert!(lines[0].starts_with("id,precision,recall,f1"));
        assert!(lines[3].starts_with("micro,"));
        assert!(lines[4].starts_with("macro,"));
    }

    #[test]
    fn empty_corpus_errors() {
        assert!(matches!(
            evaluate_exact(&[], false),
            Err(EvalError::EmptyInput)
        ));
    }
}
