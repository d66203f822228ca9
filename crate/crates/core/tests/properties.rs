//! Property tests for the core invariants: serializer/parser round-trips,
//! edit-distance metric axioms, scorer bounds, and permutation invariance.

use std::collections::BTreeMap;

use proptest::prelude::*;

use hrex_core::eval::{
    exact_match, levenshtein, normalized_similarity, reproducibility, soft_match, token_f1,
    trigram_cosine, Alignment, ExactSimilarity,
};
use hrex_core::fact::{serialize_fact, HyperFact};
use hrex_core::parser::parse_fact_line;

/// Arbitrary field text, biased toward the grammar's structural characters
/// and whitespace so escaping is exercised hard.
fn field() -> impl Strategy<Value = String> {
    let gnarly = proptest::sample::select(vec![
        '\\', '|', ';', ':', '(', ')', '[', ']', ' ', 'a', 'b', '0', 'é', '日',
    ]);
    prop_oneof![
        prop::collection::vec(gnarly, 1..12).prop_map(String::from_iter),
        "[ -~]{1,16}",
        prop::collection::vec(any::<char>(), 1..8).prop_map(String::from_iter),
    ]
}

prop_compose! {
    fn fact()(
        head in field(),
        relation in field(),
        tail in field(),
        quals in prop::collection::vec((field(), field()), 0..4),
    ) -> Option<HyperFact> {
        let refs: Vec<(&str, &str)> = quals.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        HyperFact::from_strs(&head, &relation, &tail, &refs).ok()
    }
}

proptest! {
    #[test]
    fn serializer_parser_round_trip(maybe_fact in fact()) {
        prop_assume!(maybe_fact.is_some());
        let fact = maybe_fact.unwrap();
        let line = serialize_fact(&fact);
        let parsed = parse_fact_line(&line)
            .unwrap_or_else(|d| panic!("{line:?} failed to parse back: {d:?}"));
        prop_assert_eq!(parsed, fact);
    }

    #[test]
    fn levenshtein_axioms(a in "[ab(]{0,8}", b in "[ab(]{0,8}", c in "[ab(]{0,8}") {
        let dab = levenshtein(&a, &b);
        // symmetry and identity of indiscernibles
        prop_assert_eq!(dab, levenshtein(&b, &a));
        prop_assert_eq!(levenshtein(&a, &a), 0);
        prop_assert_eq!(dab == 0, a == b);
        // triangle inequality
        prop_assert!(dab <= levenshtein(&a, &c) + levenshtein(&c, &b));
    }

    #[test]
    fn normalized_similarity_in_unit_interval(a in ".{0,12}", b in ".{0,12}") {
        let s = normalized_similarity(&a, &b);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s, normalized_similarity(&b, &a));
    }

    #[test]
    fn text_similarities_are_symmetric_and_bounded(a in ".{0,16}", b in ".{0,16}") {
        for s in [token_f1(&a, &b), trigram_cosine(&a, &b)] {
            prop_assert!((0.0..=1.0).contains(&s), "{s} out of range");
        }
        prop_assert_eq!(token_f1(&a, &b), token_f1(&b, &a));
        prop_assert_eq!(trigram_cosine(&a, &b), trigram_cosine(&b, &a));
    }

    #[test]
    fn exact_match_bounds_and_supports(
        gold in prop::collection::vec(fact(), 0..5),
        pred in prop::collection::vec(fact(), 0..5),
    ) {
        let gold: Vec<HyperFact> = gold.into_iter().flatten().collect();
        let pred: Vec<HyperFact> = pred.into_iter().flatten().collect();
        let prf = exact_match(&gold, &pred, false);
        for v in [prf.precision, prf.recall, prf.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        // P and R are recomputable from the reported supports
        if prf.n_pred > 0 && prf.n_gold > 0 {
            prop_assert_eq!(prf.precision, prf.matched / prf.n_pred as f64);
            prop_assert_eq!(prf.recall, prf.matched / prf.n_gold as f64);
        }
        prop_assert!(prf.matched <= prf.n_pred.min(prf.n_gold) as f64);
    }

    #[test]
    fn soft_match_mass_bounded_by_smaller_side(
        gold in prop::collection::vec(fact(), 0..5),
        pred in prop::collection::vec(fact(), 0..5),
    ) {
        let gold: Vec<HyperFact> = gold.into_iter().flatten().collect();
        let pred: Vec<HyperFact> = pred.into_iter().flatten().collect();
        for alignment in [Alignment::Greedy, Alignment::Optimal] {
            let prf = soft_match(&gold, &pred, &ExactSimilarity, alignment, false).unwrap();
            prop_assert!(prf.matched <= prf.n_pred.min(prf.n_gold) as f64 + 1e-12);
            for v in [prf.precision, prf.recall, prf.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn reproducibility_invariant_under_run_order(
        runs in prop::collection::vec("[abc]{0,6}", 2..5),
        rotate in 1usize..4,
    ) {
        let mut map = BTreeMap::new();
        map.insert("s".to_string(), runs.clone());
        let base = reproducibility(&map).unwrap();

        let mut rotated = runs;
        let k = rotate % rotated.len();
        rotated.rotate_left(k);
        let mut map2 = BTreeMap::new();
        map2.insert("s".to_string(), rotated);
        let permuted = reproducibility(&map2).unwrap();

        prop_assert!((base.corpus_score - permuted.corpus_score).abs() < 1e-12);
    }
}
