//! Pluggable text→text similarity backends for the soft scorer.
//!
//! Every backend maps a pair of texts into [0, 1], is symmetric, and
//! scores identical non-empty texts as 1. Three run fully offline
//! (`exact`, `token_f1`, `trigram`); `http_embedding` calls a
//! token-embedding service and combines the returned vectors the way
//! BERTScore does (greedy max-similarity precision/recall, harmonic
//! mean), with negative cosines floored at zero.

use std::collections::HashMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::EvalError;

pub trait SimilarityBackend: Send + Sync {
    fn name(&self) -> &str;
    fn score(&self, a: &str, b: &str) -> Result<f64, EvalError>;
}

/// 1.0 iff the two texts are byte-identical.
pub struct ExactSimilarity;

impl SimilarityBackend for ExactSimilarity {
    fn name(&self) -> &str {
        "exact"
    }
    fn score(&self, a: &str, b: &str) -> Result<f64, EvalError> {
        Ok(if a == b { 1.0 } else { 0.0 })
    }
}

/// Whitespace-token multiset overlap F1.
pub fn token_f1(a: &str, b: &str) -> f64 {
    let ta: Vec<&str> = a.split_whitespace().collect();
    let tb: Vec<&str> = b.split_whitespace().collect();
    if ta.is_empty() && tb.is_empty() {
        return 1.0;
    }
    if ta.is_empty() || tb.is_empty() {
        return 0.0;
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for tok in &ta {
        *counts.entry(tok).or_default() += 1;
    }
    let mut overlap = 0usize;
    for tok in &tb {
        if let Some(c) = counts.get_mut(tok) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    2.0 * overlap as f64 / (ta.len() + tb.len()) as f64
}

pub struct TokenF1Similarity;

impl SimilarityBackend for TokenF1Similarity {
    fn name(&self) -> &str {
        "token_f1"
    }
    fn score(&self, a: &str, b: &str) -> Result<f64, EvalError> {
        Ok(token_f1(a, b))
    }
}

fn trigram_counts(text: &str) -> HashMap<Vec<char>, usize> {
    let mut counts = HashMap::new();
    if text.is_empty() {
        return counts;
    }
    let padded: Vec<char> = "##"
        .chars()
        .chain(text.chars())
        .chain("##".chars())
        .collect();
    for window in padded.windows(3) {
        *counts.entry(window.to_vec()).or_default() += 1;
    }
    counts
}

/// Cosine similarity of character-trigram count vectors over
/// `##`-padded texts. Identical non-empty texts score 1; an empty text
/// has an empty vector and scores 0 against anything.
pub fn trigram_cosine(a: &str, b: &str) -> f64 {
    let ca = trigram_counts(a);
    let cb = trigram_counts(b);
    if ca.is_empty() || cb.is_empty() {
        return 0.0;
    }
    if ca == cb {
        // Equal vectors are exactly 1; the sqrt round-trip below is not.
        return 1.0;
    }
    let dot: f64 = ca
        .iter()
        .filter_map(|(tri, &na)| cb.get(tri).map(|&nb| (na * nb) as f64))
        .sum();
    let norm_a: f64 = ca.values().map(|&n| (n * n) as f64).sum::<f64>().sqrt();
    let norm_b: f64 = cb.values().map(|&n| (n * n) as f64).sum::<f64>().sqrt();
    (dot / (norm_a * norm_b)).min(1.0)
}

pub struct TrigramCosineSimilarity;

impl SimilarityBackend for TrigramCosineSimilarity {
    fn name(&self) -> &str {
        "trigram_cosine"
    }
    fn score(&self, a: &str, b: &str) -> Result<f64, EvalError> {
        Ok(trigram_cosine(a, b))
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: [&'a str; 2],
}

#[derive(Deserialize)]
struct EmbedResponse {
    /// Per input text, one vector per token.
    embeddings: Vec<Vec<Vec<f64>>>,
}

/// Similarity via an external token-embedding service.
///
/// POSTs `{"texts": [a, b]}` to the configured URL and expects
/// `{"embeddings": [[<token vector>...], [<token vector>...]]}` back.
pub struct HttpEmbeddingSimilarity {
    url: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpEmbeddingSimilarity {
    pub fn new(url: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(timeout).build();
        Self {
            url: url.into(),
            api_key,
            agent,
        }
    }

    fn fetch(&self, a: &str, b: &str) -> Result<EmbedResponse, EvalError> {
        let mut req = self.agent.post(&self.url);
        if let Some(key) = &self.api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        let resp = req
            .send_json(EmbedRequest { texts: [a, b] })
            .map_err(|e| EvalError::SimilarityBackend(e.to_string()))?;
        resp.into_json()
            .map_err(|e| EvalError::SimilarityBackend(format!("bad embedding response: {e}")))
    }
}

fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    dot / (nu * nv)
}

/// Greedy max-similarity F1 over two token-vector lists.
fn greedy_token_f1(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let directional = |from: &[Vec<f64>], to: &[Vec<f64>]| -> f64 {
        from.iter()
            .map(|u| {
                to.iter()
                    .map(|v| cosine(u, v).max(0.0))
                    .fold(0.0f64, f64::max)
            })
            .sum::<f64>()
            / from.len() as f64
    };
    let p = directional(a, b);
    let r = directional(b, a);
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

impl SimilarityBackend for HttpEmbeddingSimilarity {
    fn name(&self) -> &str {
        "http_embedding"
    }

    fn score(&self, a: &str, b: &str) -> Result<f64, EvalError> {
        let resp = self.fetch(a, b)?;
        if resp.embeddings.len() != 2 {
            return Err(EvalError::SimilarityBackend(format!(
                "expected 2 embedding lists, got {}",
                resp.embeddings.len()
            )));
        }
        Ok(greedy_token_f1(&resp.embeddings[0], &resp.embeddings[1]).clamp(0.0, 1.0))
    }
}
