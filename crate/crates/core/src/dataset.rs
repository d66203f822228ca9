//! Dataset ingestion: convert HyperRED-format releases to the canonical
//! fact JSONL, load canonical files, and draw deterministic subsets.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::fact::{normalize, HyperFact};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    FileUnreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    FileUnwritable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    SchemaViolation { line: usize, message: String },
    #[error("line {line}: duplicate sample id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("subset of {requested} requested from {available} samples")]
    SubsetTooLarge { requested: usize, available: usize },
    #[error("invalid field mapping: {0}")]
    BadMapping(String),
}

/// One sentence with its (possibly empty) gold facts. This is the canonical
/// JSONL line schema, shared by gold files and prediction files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceSample {
    pub id: String,
    pub text: String,
    #[serde(rename = "facts", default)]
    pub gold: Vec<HyperFact>,
}

/// Key names in the raw HyperRED release. The defaults match the public
/// JSON layout: a `tokens` array plus `relations` entries whose `head` and
/// `tail` are `[start, end)` token spans (end exclusive), a relation
/// `label`, and `qualifiers` entries with their own `span` and `label`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldMapping {
    pub tokens: String,
    pub relations: String,
    pub head: String,
    pub tail: String,
    pub label: String,
    pub qualifiers: String,
    pub span: String,
}

impl Default for FieldMapping {
    fn default() -> Self {
        FieldMapping {
            tokens: "tokens".into(),
            relations: "relations".into(),
            head: "head".into(),
            tail: "tail".into(),
            label: "label".into(),
            qualifiers: "qualifiers".into(),
            span: "span".into(),
        }
    }
}

impl FieldMapping {
    fn validate(&self) -> Result<(), DatasetError> {
        for (field, key) in [
            ("tokens", &self.tokens),
            ("relations", &self.relations),
            ("head", &self.head),
            ("tail", &self.tail),
            ("label", &self.label),
            ("qualifiers", &self.qualifiers),
            ("span", &self.span),
        ] {
            if key.is_empty() {
                return Err(DatasetError::BadMapping(format!("empty key for {field}")));
            }
        }
        Ok(())
    }
}

/// Why a raw record was dropped during conversion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "detail")]
pub enum SkipReason {
    /// The line is not valid JSON.
    BadJson(String),
    /// A mapped key is missing or has the wrong shape.
    SchemaViolation(String),
    /// An entity or qualifier span falls outside the token list.
    SpanOutOfRange,
    /// The joined tokens normalize to an empty sentence.
    EmptyText,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordSkip {
    /// 0-based index of the record in the raw input.
    pub record: usize,
    pub reason: SkipReason,
}

/// Conversion tally: every raw record is either written or listed in
/// `skipped`, and `facts_emitted` counts relation annotations preserved.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversionStats {
    pub samples_read: usize,
    pub samples_written: usize,
    pub facts_emitted: usize,
    pub skipped: Vec<RecordSkip>,
}

/// Convert a raw HyperRED file (JSONL, or one top-level JSON array) to
/// canonical fact JSONL. Records with schema or span problems are skipped
/// and tallied rather than aborting the conversion; only I/O failures are
/// fatal.
pub fn convert_hyperred(
    raw_path: impl AsRef<Path>,
    mapping: &FieldMapping,
    out_path: impl AsRef<Path>,
) -> Result<ConversionStats, DatasetError> {
    mapping.validate()?;
    let raw_path = raw_path.as_ref();
    let text = std::fs::read_to_string(raw_path).map_err(|source| DatasetError::FileUnreadable {
        path: raw_path.to_path_buf(),
        source,
    })?;

    // Either a JSON array of records or one record per line.
    let records: Vec<Result<Value, String>> = if text.trim_start().starts_with('[') {
        match serde_json::from_str::<Vec<Value>>(&text) {
            Ok(vals) => vals.into_iter().map(Ok).collect(),
            Err(e) => vec![Err(e.to_string())],
        }
    } else {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str::<Value>(l).map_err(|e| e.to_string()))
            .collect()
    };

    let out_path = out_path.as_ref();
    let out = std::fs::File::create(out_path).map_err(|source| DatasetError::FileUnwritable {
        path: out_path.to_path_buf(),
        source,
    })?;
    let mut out = BufWriter::new(out);

    let mut stats = ConversionStats {
        samples_read: 0,
        samples_written: 0,
        facts_emitted: 0,
        skipped: Vec::new(),
    };
    for (record, parsed) in records.into_iter().enumerate() {
        stats.samples_read += 1;
        let value = match parsed {
            Ok(v) => v,
            Err(e) => {
                stats.skipped.push(RecordSkip {
                    record,
                    reason: SkipReason::BadJson(e),
                });
                continue;
            }
        };
        match convert_record(&value, mapping, record) {
            Ok(sample) => {
                stats.facts_emitted += sample.gold.len();
                stats.samples_written += 1;
                let line = serde_json::to_string(&sample).expect("sample serializes");
                writeln!(out, "{line}").map_err(|source| DatasetError::FileUnwritable {
                    path: out_path.to_path_buf(),
                    source,
                })?;
            }
            Err(reason) => stats.skipped.push(RecordSkip { record, reason }),
        }
    }
    out.flush().map_err(|source| DatasetError::FileUnwritable {
        path: out_path.to_path_buf(),
        source,
    })?;
    Ok(stats)
}

fn convert_record(
    value: &Value,
    mapping: &FieldMapping,
    record: usize,
) -> Result<SentenceSample, SkipReason> {
    let obj = value
        .as_object()
        .ok_or_else(|| SkipReason::SchemaViolation("record is not an object".into()))?;
    let tokens: Vec<&str> = obj
        .get(&mapping.tokens)
        .and_then(Value::as_array)
        .ok_or_else(|| SkipReason::SchemaViolation(format!("missing key {:?}", mapping.tokens)))?
        .iter()
        .map(|t| {
            t.as_str()
                .ok_or_else(|| SkipReason::SchemaViolation("non-string token".into()))
        })
        .collect::<Result<_, _>>()?;
    let text = normalize(&tokens.join(" "));
    if text.is_empty() {
        return Err(SkipReason::EmptyText);
    }

    let relations = obj
        .get(&mapping.relations)
        .and_then(Value::as_array)
        .ok_or_else(|| SkipReason::SchemaViolation(format!("missing key {:?}", mapping.relations)))?;

    let mut gold = Vec::new();
    for rel in relations {
        let rel = rel
            .as_object()
            .ok_or_else(|| SkipReason::SchemaViolation("relation entry is not an object".into()))?;
        let head = span_text(rel.get(&mapping.head), &tokens, &mapping.head)?;
        let tail = span_text(rel.get(&mapping.tail), &tokens, &mapping.tail)?;
        let label = rel
            .get(&mapping.label)
            .and_then(Value::as_str)
            .ok_or_else(|| SkipReason::SchemaViolation(format!("missing key {:?}", mapping.label)))?;
        let mut quals = Vec::new();
        if let Some(qs) = rel.get(&mapping.qualifiers) {
            let qs = qs
                .as_array()
                .ok_or_else(|| SkipReason::SchemaViolation("qualifiers is not an array".into()))?;
            for q in qs {
                let q = q.as_object().ok_or_else(|| {
                    SkipReason::SchemaViolation("qualifier entry is not an object".into())
                })?;
                let key = q
                    .get(&mapping.label)
                    .and_then(Value::as_str)
                    .ok_or_else(|| {
                        SkipReason::SchemaViolation(format!("missing key {:?}", mapping.label))
                    })?;
                let value = span_text(q.get(&mapping.span), &tokens, &mapping.span)?;
                quals.push((key.to_string(), value));
            }
        }
        let qual_refs: Vec<(&str, &str)> = quals
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_str()))
            .collect();
        let fact = HyperFact::from_strs(&head, label, &tail, &qual_refs)
            .map_err(|e| SkipReason::SchemaViolation(e.to_string()))?;
        gold.push(fact);
    }
    Ok(SentenceSample {
        id: format!("hyperred-{record:06}"),
        text,
        gold,
    })
}

/// Render a `[start, end)` token span to normalized surface text.
fn span_text(span: Option<&Value>, tokens: &[&str], key: &str) -> Result<String, SkipReason> {
    let span = span
        .and_then(Value::as_array)
        .ok_or_else(|| SkipReason::SchemaViolation(format!("missing span {key:?}")))?;
    if span.len() != 2 {
        return Err(SkipReason::SchemaViolation(format!(
            "span {key:?} is not a [start, end) pair"
        )));
    }
    let (start, end) = match (span[0].as_u64(), span[1].as_u64()) {
        (Some(s), Some(e)) => (s as usize, e as usize),
        _ => return Err(SkipReason::SpanOutOfRange),
    };
    if start >= end || end > tokens.len() {
        return Err(SkipReason::SpanOutOfRange);
    }
    let text = normalize(&tokens[start..end].join(" "));
    if text.is_empty() {
        return Err(SkipReason::SpanOutOfRange);
    }
    Ok(text)
}

/// Load a canonical fact JSONL file, preserving order and rejecting
/// duplicate ids. Blank lines are ignored.
pub fn load_samples(path: impl AsRef<Path>) -> Result<Vec<SentenceSample>, DatasetError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DatasetError::FileUnreadable {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut samples = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| DatasetError::FileUnreadable {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let mut sample: SentenceSample =
            serde_json::from_str(&line).map_err(|e| DatasetError::SchemaViolation {
                line: line_no,
                message: e.to_string(),
            })?;
        sample.id = normalize(&sample.id);
        sample.text = normalize(&sample.text);
        if sample.id.is_empty() {
            return Err(DatasetError::SchemaViolation {
                line: line_no,
                message: "empty id".into(),
            });
        }
        if sample.text.is_empty() {
            return Err(DatasetError::SchemaViolation {
                line: line_no,
                message: "empty text".into(),
            });
        }
        if !seen.insert(sample.id.clone()) {
            return Err(DatasetError::DuplicateId {
                line: line_no,
                id: sample.id,
            });
        }
        samples.push(sample);
    }
    Ok(samples)
}

/// Write samples as canonical fact JSONL, one object per line.
pub fn write_samples(
    path: impl AsRef<Path>,
    samples: &[SentenceSample],
) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|source| DatasetError::FileUnwritable {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = BufWriter::new(file);
    for sample in samples {
        let line = serde_json::to_string(sample).expect("sample serializes");
        writeln!(out, "{line}").map_err(|source| DatasetError::FileUnwritable {
            path: path.to_path_buf(),
            source,
        })?;
    }
    out.flush().map_err(|source| DatasetError::FileUnwritable {
        path: path.to_path_buf(),
        source,
    })
}

/// xorshift64* stream seeded through one splitmix64 step, so any u64 seed
/// (including 0) yields a full-period generator. Fully specified here so
/// subsets are identical across implementations and platforms.
pub struct XorShift64Star {
    state: u64,
}

impl XorShift64Star {
    pub fn new(seed: u64) -> Self {
        // splitmix64 finalizer
        let mut z = seed.wrapping_add(0x9e3779b97f4a7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^= z >> 31;
        let state = if z == 0 { 0x9e3779b97f4a7c15 } else { z };
        XorShift64Star { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545f4914f6cdd1d)
    }
}

/// Draw a deterministic pseudo-random subset of size `n` via a partial
/// Fisher-Yates shuffle over the given order.
pub fn sample_subset(
    samples: &[SentenceSample],
    n: usize,
    seed: u64,
) -> Result<Vec<SentenceSample>, DatasetError> {
    if n > samples.len() {
        return Err(DatasetError::SubsetTooLarge {
            requested: n,
            available: samples.len(),
        });
    }
    let mut rng = XorShift64Star::new(seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    for i in 0..n {
        let remaining = (order.len() - i) as u64;
        let j = i + (rng.next_u64() % remaining) as usize;
        order.swap(i, j);
    }
    Ok(order[..n].iter().map(|&i| samples[i].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw_record() -> &'static str {
        r#"{"tokens": ["Barack", "Obama", "graduated", "from", "Harvard", "University", "in", "1991", "."], "relations": [{"head": [0, 2], "tail": [4, 6], "label": "educated at", "qualifiers": [{"span": [7, 8], "label": "end time"}]}]}"#
    }

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn convert_structure_preserving() {
        let raw = write_tmp(raw_record());
        let out = tempfile::NamedTempFile::new().unwrap();
        let stats = convert_hyperred(raw.path(), &FieldMapping::default(), out.path()).unwrap();
        assert_eq!(stats.samples_read, 1);
        assert_eq!(stats.samples_written, 1);
        assert_eq!(stats.facts_emitted, 1);
        assert!(stats.skipped.is_empty());

        let samples = load_samples(out.path()).unwrap();
        assert_eq!(samples.len(), 1);
        let s = &samples[0];
        assert_eq!(s.id, "hyperred-000000");
        assert_eq!(s.text, "Barack Obama graduated from Harvard University in 1991 .");
        let expected = HyperFact::from_strs(
            "Barack Obama",
            "educated at",
            "Harvard University",
            &[("end time", "1991")],
        )
        .unwrap();
        assert_eq!(s.gold, vec![expected]);
    }

    #[test]
    fn convert_accepts_json_array_form() {
        let raw = write_tmp(&format!("[{}]", raw_record()));
        let out = tempfile::NamedTempFile::new().unwrap();
        let stats = convert_hyperred(raw.path(), &FieldMapping::default(), out.path()).unwrap();
        assert_eq!(stats.samples_written, 1);
    }

    #[test]
    fn span_past_token_count_skips_record() {
        let bad = r#"{"tokens": ["a", "b"], "relations": [{"head": [0, 1], "tail": [1, 2], "label": "r", "qualifiers": [{"span": [5, 9], "label": "k"}]}]}"#;
        let raw = write_tmp(&format!("{}\n{bad}\n", raw_record()));
        let out = tempfile::NamedTempFile::new().unwrap();
        let stats = convert_hyperred(raw.path(), &FieldMapping::default(), out.path()).unwrap();
        assert_eq!(stats.samples_read, 2);
        assert_eq!(stats.samples_written, 1);
        assert_eq!(
            stats.skipped,
            vec![RecordSkip {
                record: 1,
                reason: SkipReason::SpanOutOfRange
            }]
        );
        assert_eq!(load_samples(out.path()).unwrap().len(), 1);
    }

    #[test]
    fn missing_mapped_key_skips_record() {
        let bad = r#"{"tokens": ["a"], "relations": [{"head": [0, 1], "label": "r"}]}"#;
        let raw = write_tmp(bad);
        let out = tempfile::NamedTempFile::new().unwrap();
        let stats = convert_hyperred(raw.path(), &FieldMapping::default(), out.path()).unwrap();
        assert_eq!(stats.samples_written, 0);
        assert!(matches!(
            stats.skipped[0].reason,
            SkipReason::SchemaViolation(_)
        ));
    }

    #[test]
    fn unparseable_line_skips_record() {
        let raw = write_tmp(&format!("not json\n{}\n", raw_record()));
        let out = tempfile::NamedTempFile::new().unwrap();
        let stats = convert_hyperred(raw.path(), &FieldMapping::default(), out.path()).unwrap();
        assert_eq!(stats.samples_written, 1);
        assert!(matches!(stats.skipped[0].reason, SkipReason::BadJson(_)));
    }

    #[test]
    fn conversion_conserves_fact_counts() {
        let two_rel = r#"{"tokens": ["a", "b", "c"], "relations": [{"head": [0, 1], "tail": [1, 2], "label": "r", "qualifiers": []}, {"head": [1, 2], "tail": [2, 3], "label": "r", "qualifiers": []}]}"#;
        let raw = write_tmp(&format!("{}\n{two_rel}\n", raw_record()));
        let out = tempfile::NamedTempFile::new().unwrap();
        let stats = convert_hyperred(raw.path(), &FieldMapping::default(), out.path()).unwrap();
        assert_eq!(stats.facts_emitted, 3);
        let total: usize = load_samples(out.path())
            .unwrap()
            .iter()
            .map(|s| s.gold.len())
            .sum();
        assert_eq!(total, stats.facts_emitted);
    }

    #[test]
    fn empty_mapping_key_rejected() {
        let mut mapping = FieldMapping::default();
        mapping.label = String::new();
        let raw = write_tmp(raw_record());
        let out = tempfile::NamedTempFile::new().unwrap();
        assert!(matches!(
            convert_hyperred(raw.path(), &mapping, out.path()),
            Err(DatasetError::BadMapping(_))
        ));
    }

    #[test]
    fn renamed_keys_work_through_mapping() {
        let renamed = r#"{"toks": ["x", "y"], "rels": [{"h": [0, 1], "t": [1, 2], "name": "r", "quals": []}]}"#;
        let mapping = FieldMapping {
            tokens: "toks".into(),
            relations: "rels".into(),
            head: "h".into(),
            tail: "t".into(),
            label: "name".into(),
            qualifiers: "quals".into(),
            span: "span".into(),
        };
        let raw = write_tmp(renamed);
        let out = tempfile::NamedTempFile::new().unwrap();
        let stats = convert_hyperred(raw.path(), &mapping, out.path()).unwrap();
        assert_eq!(stats.samples_written, 1);
        assert_eq!(stats.facts_emitted, 1);
    }

    #[test]
    fn load_empty_file() {
        let f = write_tmp("");
        assert!(load_samples(f.path()).unwrap().is_empty());
    }

    #[test]
    fn load_preserves_order_and_skips_blank_lines() {
        let f = write_tmp(
            "{\"id\": \"b\", \"text\": \"second\", \"facts\": []}\n\n{\"id\": \"a\", \"text\": \"first\", \"facts\": []}\n",
        );
        let samples = load_samples(f.path()).unwrap();
        let ids: Vec<&str> = samples.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, vec!["b", "a"]);
    }

    #[test]
    fn load_rejects_duplicate_ids() {
        let f = write_tmp(
            "{\"id\": \"a\", \"text\": \"x\", \"facts\": []}\n{\"id\": \"a\", \"text\": \"y\", \"facts\": []}\n",
        );
        assert!(matches!(
            load_samples(f.path()),
            Err(DatasetError::DuplicateId { line: 2, .. })
        ));
    }

    #[test]
    fn load_rejects_bad_schema() {
        let f = write_tmp("{\"id\": \"a\"}\n");
        assert!(matches!(
            load_samples(f.path()),
            Err(DatasetError::SchemaViolation { line: 1, .. })
        ));
    }

    #[test]
    fn missing_facts_field_defaults_empty() {
        let f = write_tmp("{\"id\": \"a\", \"text\": \"unlabeled\"}\n");
        let samples = load_samples(f.path()).unwrap();
        assert!(samples[0].gold.is_empty());
    }

    #[test]
    fn write_then_load_round_trips() {
        let samples = vec![SentenceSample {
            id: "s1".into(),
            text: "some sentence".into(),
            gold: vec![HyperFact::from_strs("a", "r", "b", &[("k", "v")]).unwrap()],
        }];
        let f = tempfile::NamedTempFile::new().unwrap();
        write_samples(f.path(), &samples).unwrap();
        assert_eq!(load_samples(f.path()).unwrap(), samples);
    }

    fn numbered(n: usize) -> Vec<SentenceSample> {
        (0..n)
            .map(|i| SentenceSample {
                id: format!("s{i}"),
                text: format!("sentence {i}"),
                gold: Vec::new(),
            })
            .collect()
    }

    #[test]
    fn subset_full_size_is_permutation() {
        let samples = numbered(10);
        let subset = sample_subset(&samples, 10, 7).unwrap();
        let mut ids: Vec<&str> = subset.iter().map(|s| s.id.as_str()).collect();
        ids.sort_unstable();
        let mut expected: Vec<&str> = samples.iter().map(|s| s.id.as_str()).collect();
        expected.sort_unstable();
        assert_eq!(ids, expected);
    }

    #[test]
    fn subset_deterministic_for_seed() {
        let samples = numbered(20);
        let a = sample_subset(&samples, 5, 42).unwrap();
        let b = sample_subset(&samples, 5, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_subset(&samples, 5, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn subset_zero_and_too_large() {
        let samples = numbered(3);
        assert!(sample_subset(&samples, 0, 1).unwrap().is_empty());
        assert!(matches!(
            sample_subset(&samples, 4, 1),
            Err(DatasetError::SubsetTooLarge { requested: 4, available: 3 })
        ));
    }

    #[test]
    fn subset_sequence_is_frozen() {
        // Golden order for seed 42 over 10 samples; guards the PRNG and the
        // shuffle against accidental reimplementation drift.
        let samples = numbered(10);
        let subset = sample_subset(&samples, 10, 42).unwrap();
        let ids: Vec<&str> = subset.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, GOLDEN_SEED42_ORDER);
    }

    // Computed by an independent reimplementation of the documented
    // splitmix64 + xorshift64* + partial Fisher-Yates pipeline.
    const GOLDEN_SEED42_ORDER: [&str; 10] = [
        "s2", "s5", "s9", "s8", "s6", "s3", "s0", "s4", "s7", "s1",
    ];

    #[test]
    fn prng_stream_is_frozen() {
        let mut rng = XorShift64Star::new(42);
        let first: Vec<u64> = (0..4).map(|_| rng.next_u64()).collect();
        assert_eq!(first, GOLDEN_SEED42_STREAM);
    }

    const GOLDEN_SEED42_STREAM: [u64; 4] = [
        3580622183945639842,
        10378725325292465923,
        8967075514996744559,
        5001014893397904463,
    ];
}
