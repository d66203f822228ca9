//! Exact-match scoring over expanded quintuples.

use std::collections::HashSet;

use crate::fact::{expand_quintuples, HyperFact, Quintuple};

use super::Prf;

/// Expand both sides into deduplicated quintuple sets and score their
/// intersection. Comparison is on normalized surface strings,
/// case-sensitive unless `ignore_case` is set.
pub fn exact_match(gold: &[HyperFact], pred: &[HyperFact], ignore_case: bool) -> Prf {
    let to_set = |facts: &[HyperFact]| -> HashSet<Quintuple> {
        facts
            .iter()
            .flat_map(|f| expand_quintuples(f))
            .map(|q| if ignore_case { q.to_lowercase() } else { q })
            .collect()
    };
    let gold_set = to_set(gold);
    let pred_set = to_set(pred);
    let matched = pred_set.intersection(&gold_set).count();
    Prf::from_counts(pred_set.len(), gold_set.len(), matched as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obama() -> HyperFact {
        HyperFact::from_strs(
            "Barack Obama",
            "educated at",
            "Harvard University",
            &[("end time", "1991")],
        )
        .unwrap()
    }

    #[test]
    fn identity_scores_one() {
        let prf = exact_match(&[obama()], &[obama()], false);
        assert_eq!((prf.precision, prf.recall, prf.f1), (1.0, 1.0, 1.0));
        assert_eq!((prf.n_pred, prf.n_gold), (1, 1));
    }

    #[test]
    fn half_right_half_spurious() {
        // gold expands to 2 quintuples; pred has exactly one of them plus
        // one spurious quintuple
        let gold = vec![HyperFact::from_strs(
            "a",
            "r",
            "b",
            &[("end time", "1991"), ("start time", "1990")],
        )
        .unwrap()];
        let pred = vec![
            HyperFact::from_strs("a", "r", "b", &[("end time", "1991")]).unwrap(),
            HyperFact::from_strs("x", "r", "y", &[]).unwrap(),
        ];
        let prf = exact_match(&gold, &pred, false);
        assert_eq!((prf.precision, prf.recall, prf.f1), (0.5, 0.5, 0.5));
    }

    #[test]
    fn empty_both_sides() {
        let prf = exact_match(&[], &[], false);
        assert_eq!(prf.f1, 1.0);
    }

    #[test]
    fn empty_pred_only() {
        let prf = exact_match(&[obama()], &[], false);
        assert_eq!((prf.precision, prf.recall, prf.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn case_sensitivity_toggle() {
        let shouted =
            HyperFact::from_strs("BARACK OBAMA", "educated at", "HARVARD UNIVERSITY", &[("end time", "1991")])
                .unwrap();
        let strict = exact_match(&[obama()], &[shouted.clone()], false);
        assert_eq!(strict.f1, 0.0);
        let folded = exact_match(&[obama()], &[shouted], true);
        assert_eq!(folded.f1, 1.0);
    }

    #[test]
    fn duplicate_predictions_dedup() {
        let prf = exact_match(&[obama()], &[obama(), obama()], false);
        assert_eq!(prf.n_pred, 1);
        assert_eq!(prf.f1, 1.0);
    }

    #[test]
    fn bare_triple_matches_via_sentinel() {
        let bare = HyperFact::from_strs("Palermo", "capital of", "Kingdom of Sicily", &[]).unwrap();
        let prf = exact_match(&[bare.clone()], &[bare], false);
        assert_eq!(prf.f1, 1.0);
    }

    #[test]
    fn bare_triple_does_not_match_qualified() {
        let bare = HyperFact::from_strs("a", "r", "b", &[]).unwrap();
        let qualified = HyperFact::from_strs("a", "r", "b", &[("end time", "1991")]).unwrap();
        let prf = exact_match(&[qualified], &[bare], false);
        assert_eq!(prf.f1, 0.0);
    }
}
