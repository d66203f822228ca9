//! Soft-alignment scoring: facts are matched one-to-one by a similarity
//! backend and matched mass is credited fractionally.

use serde::{Deserialize, Serialize};

use crate::fact::{serialize_fact, HyperFact};

use super::similarity::SimilarityBackend;
use super::{EvalError, Prf};

/// Strategy for pairing predicted facts with gold facts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    /// Repeatedly take the globally highest-similarity unmatched pair.
    Greedy,
    /// Maximum-weight one-to-one assignment (Hungarian algorithm).
    Optimal,
}

/// Score one sample: dedup both sides on canonical serialization, build the
/// similarity matrix, align one-to-one, and sum matched similarity mass.
pub fn soft_match(
    gold: &[HyperFact],
    pred: &[HyperFact],
    backend: &dyn SimilarityBackend,
    alignment: Alignment,
    ignore_case: bool,
) -> Result<Prf, EvalError> {
    let gold_lines = dedup_lines(gold, ignore_case);
    let pred_lines = dedup_lines(pred, ignore_case);
    if gold_lines.is_empty() || pred_lines.is_empty() {
        return Ok(Prf::from_counts(pred_lines.len(), gold_lines.len(), 0.0));
    }

    let mut sim = vec![vec![0.0f64; gold_lines.len()]; pred_lines.len()];
    for (i, p) in pred_lines.iter().enumerate() {
        for (j, g) in gold_lines.iter().enumerate() {
            let s = backend.score(p, g)?;
            if !(0.0..=1.0).contains(&s) || s.is_nan() {
                return Err(EvalError::SimilarityOutOfRange {
                    backend: backend.name().to_string(),
                    value: s,
                });
            }
            sim[i][j] = s;
        }
    }

    let pairs = match alignment {
        Alignment::Greedy => greedy_align(&sim),
        Alignment::Optimal => hungarian_align(&sim),
    };
    let matched: f64 = pairs.iter().map(|&(i, j)| sim[i][j]).sum();
    Ok(Prf::from_counts(pred_lines.len(), gold_lines.len(), matched))
}

/// Canonical fact lines with duplicates removed, original order kept.
fn dedup_lines(facts: &[HyperFact], ignore_case: bool) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for f in facts {
        let mut line = serialize_fact(f);
        if ignore_case {
            line = line.to_lowercase();
        }
        if seen.insert(line.clone()) {
            out.push(line);
        }
    }
    out
}

/// Pick the globally best unmatched (pred, gold) pair until one side is
/// exhausted. Ties break on lower pred index, then lower gold index, so the
/// result is deterministic.
fn greedy_align(sim: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let n_pred = sim.len();
    let n_gold = if n_pred == 0 { 0 } else { sim[0].len() };
    let mut pred_used = vec![false; n_pred];
    let mut gold_used = vec![false; n_gold];
    let mut pairs = Vec::new();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n_pred {
            if pred_used[i] {
                continue;
            }
            for j in 0..n_gold {
                if gold_used[j] {
                    continue;
                }
                let cand = (sim[i][j], i, j);
                let better = match best {
                    None => true,
                    Some((bs, bi, bj)) => {
                        cand.0 > bs || (cand.0 == bs && (i, j) < (bi, bj))
                    }
                };
                if better {
                    best = Some(cand);
                }
            }
        }
        match best {
            Some((_, i, j)) => {
                pred_used[i] = true;
                gold_used[j] = true;
                pairs.push((i, j));
            }
            None => break,
        }
    }
    pairs
}

/// Maximum-weight assignment via the Hungarian algorithm with potentials,
/// O(n^2 m). Returns (pred, gold) index pairs for the smaller side.
fn hungarian_align(sim: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let n_pred = sim.len();
    let n_gold = if n_pred == 0 { 0 } else { sim[0].len() };
    if n_pred == 0 || n_gold == 0 {
        return Vec::new();
    }
    // The classic formulation assigns every row, so rows must be the smaller
    // side; transpose if predictions outnumber gold.
    let transposed = n_pred > n_gold;
    let (n, m) = if transposed {
        (n_gold, n_pred)
    } else {
        (n_pred, n_gold)
    };
    let cost = |i: usize, j: usize| -> f64 {
        if transposed {
            -sim[j][i]
        } else {
            -sim[i][j]
        }
    };

    const INF: f64 = f64::INFINITY;
    // 1-based potentials over rows (u) and columns (v); way[j] is the column
    // preceding j on the augmenting path, p[j] the row assigned to column j.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut pairs = Vec::new();
    for j in 1..=m {
        if p[j] != 0 {
            let (row, col) = (p[j] - 1, j - 1);
            if transposed {
                pairs.push((col, row));
            } else {
                pairs.push((row, col));
            }
        }
    }
    pairs.sort_unstable();
    pairs
}
