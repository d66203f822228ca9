//! Hyper-relational fact data model: text normalization, canonical
//! serialization, and quintuple expansion.
//!
//! A [`HyperFact`] is a relation triple plus zero or more key:value
//! qualifiers that contextualize the whole triple. All scorers compare
//! facts on their normalized surface strings, and the exact-match scorer
//! works on [`Quintuple`] expansions.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// Errors raised while constructing fact values.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum FactError {
    #[error("entity mention is empty after normalization")]
    EmptyMention,
    #[error("relation label is empty after normalization")]
    EmptyRelation,
    #[error("qualifier key is empty after normalization")]
    EmptyQualifierKey,
}

/// Normalize a piece of surface text: trim, collapse internal whitespace
/// runs to a single space, then apply Unicode NFC. Case is preserved.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_run = false;
    for ch in text.trim().chars() {
        if ch.is_whitespace() {
            in_run = true;
        } else {
            if in_run && !out.is_empty() {
                out.push(' ');
            }
            in_run = false;
            out.push(ch);
        }
    }
    out.nfc().collect()
}

/// Characters with structural meaning in the canonical line format.
///
/// They are backslash-escaped inside fields so any surface string
/// round-trips through serialize/parse.
pub(crate) const ESCAPED_CHARS: &[char] = &['\\', '|', ';', ':', '(', ')', '[', ']'];

pub(crate) fn escape_field(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        if ESCAPED_CHARS.contains(&ch) {
            out.push('\\');
        }
        out.push(ch);
    }
    out
}

/// Resolve backslash escapes. Lenient: a backslash before a
/// non-structural character is dropped, a trailing backslash is kept.
pub(crate) fn unescape_field(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(ch) = chars.next() {
        if ch == '\\' {
            match chars.next() {
                Some(next) => out.push(next),
                None => out.push('\\'),
            }
        } else {
            out.push(ch);
        }
    }
    out
}

/// An entity as it appeared in text, paired with its normalized form.
///
/// Equality, ordering, and hashing are defined on the normalized form
/// only; the raw surface is kept for diagnostics.
#[derive(Debug, Clone)]
pub struct EntityMention {
    surface: String,
    normalized: String,
}

impl EntityMention {
    pub fn new(surface: impl Into<String>) -> Result<Self, FactError> {
        let surface = surface.into();
        let normalized = normalize(&surface);
        if normalized.is_empty() {
            return Err(FactError::EmptyMention);
        }
        Ok(Self { surface, normalized })
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    pub fn normalized(&self) -> &str {
        &self.normalized
    }
}

impl PartialEq for EntityMention {
    fn eq(&self, other: &Self) -> bool {
        self.normalized == other.normalized
    }
}

impl Eq for EntityMention {}

impl PartialOrd for EntityMention {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EntityMention {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.normalized.cmp(&other.normalized)
    }
}

impl std::hash::Hash for EntityMention {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.normalized.hash(state);
    }
}

impl Serialize for EntityMention {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.normalized)
    }
}

impl<'de> Deserialize<'de> for EntityMention {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        EntityMention::new(raw).map_err(serde::de::Error::custom)
    }
}

/// A key:value attachment scoping a triple's validity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "QualifierRepr", into = "QualifierRepr")]
pub struct Qualifier {
    key: String,
    value: EntityMention,
}

#[derive(Serialize, Deserialize)]
struct QualifierRepr {
    key: String,
    value: EntityMention,
}

impl TryFrom<QualifierRepr> for Qualifier {
    type Error = FactError;
    fn try_from(repr: QualifierRepr) -> Result<Self, Self::Error> {
        Qualifier::new(repr.key, repr.value)
    }
}

impl From<Qualifier> for QualifierRepr {
    fn from(q: Qualifier) -> Self {
        QualifierRepr { key: q.key, value: q.value }
    }
}

impl Qualifier {
    pub fn new(key: impl Into<String>, value: EntityMention) -> Result<Self, FactError> {
        let key = normalize(&key.into());
        if key.is_empty() {
            return Err(FactError::EmptyQualifierKey);
        }
        Ok(Self { key, value })
    }

    pub fn key(&self) -> &str {
        &self.key
    }

    pub fn value(&self) -> &EntityMention {
        &self.value
    }
}

/// One hyper-relational fact: a (head, relation, tail) triple plus
/// qualifiers held in sorted order with no duplicate (key, value) pairs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "FactRepr", into = "FactRepr")]
pub struct HyperFact {
    head: EntityMention,
    relation: String,
    tail: EntityMention,
    qualifiers: Vec<Qualifier>,
}

#[derive(Serialize, Deserialize)]
struct FactRepr {
    head: EntityMention,
    relation: String,
    tail: EntityMention,
    #[serde(default)]
    qualifiers: Vec<Qualifier>,
}

impl TryFrom<FactRepr> for HyperFact {
    type Error = FactError;
    fn try_from(repr: FactRepr) -> Result<Self, Self::Error> {
        HyperFact::new(repr.head, repr.relation, repr.tail, repr.qualifiers)
    }
}

impl From<HyperFact> for FactRepr {
    fn from(f: HyperFact) -> Self {
        FactRepr {
            head: f.head,
            relation: f.relation,
            tail: f.tail,
            qualifiers: f.qualifiers,
        }
    }
}

impl HyperFact {
    /// Build a fact, normalizing the relation label and sorting and
    /// deduplicating qualifiers by (key, normalized value).
    pub fn new(
        head: EntityMention,
        relation: impl Into<String>,
        tail: EntityMention,
        mut qualifiers: Vec<Qualifier>,
    ) -> Result<Self, FactError> {
        let relation = normalize(&relation.into());
        if relation.is_empty() {
            return Err(FactError::EmptyRelation);
        }
        qualifiers.sort();
        qualifiers.dedup();
        Ok(Self { head, relation, tail, qualifiers })
    }

    /// Convenience constructor from raw strings.
    pub fn from_strs(
        head: &str,
        relation: &str,
        tail: &str,
        qualifiers: &[(&str, &str)],
    ) -> Result<Self, FactError> {
        let quals = qualifiers
            .iter()
            .map(|(k, v)| Qualifier::new(*k, EntityMention::new(*v)?))
            .collect::<Result<Vec<_>, _>>()?;
        HyperFact::new(
            EntityMention::new(head)?,
            relation,
            EntityMention::new(tail)?,
            quals,
        )
    }

    pub fn head(&self) -> &EntityMention {
        &self.head
    }

    pub fn relation(&self) -> &str {
        &self.relation
    }

    pub fn tail(&self) -> &EntityMention {
        &self.tail
    }

    pub fn qualifiers(&self) -> &[Qualifier] {
        &self.qualifiers
    }
}

/// The exact-match scoring unit: (head, relation, tail, qualifier key,
/// qualifier value). A fact without qualifiers expands to a single
/// quintuple whose qualifier slot is `None`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Quintuple {
    pub head: String,
    pub relation: String,
    pub tail: String,
    pub qualifier: Option<(String, String)>,
}

impl Quintuple {
    /// Case-folded copy, for case-insensitive comparison.
    pub fn to_lowercase(&self) -> Self {
        Self {
            head: self.head.to_lowercase(),
            relation: self.relation.to_lowercase(),
            tail: self.tail.to_lowercase(),
            qualifier: self
                .qualifier
                .as_ref()
                .map(|(k, v)| (k.to_lowercase(), v.to_lowercase())),
        }
    }
}

/// Expand a fact into one quintuple per qualifier, all sharing the
/// triple; a qualifier-free fact yields one sentinel quintuple.
pub fn expand_quintuples(fact: &HyperFact) -> Vec<Quintuple> {
    let head = fact.head.normalized.clone();
    let relation = fact.relation.clone();
    let tail = fact.tail.normalized.clone();
    if fact.qualifiers.is_empty() {
        return vec![Quintuple { head, relation, tail, qualifier: None }];
    }
    fact.qualifiers
        .iter()
        .map(|q| Quintuple {
            head: head.clone(),
            relation: relation.clone(),
            tail: tail.clone(),
            qualifier: Some((q.key.clone(), q.value.normalized.clone())),
        })
        .collect()
}

/// Canonical single-line form: `(head | relation | tail) [k1: v1; k2: v2]`,
/// qualifiers in sorted order, `[]` section omitted when empty. Structural
/// characters inside fields are backslash-escaped.
pub fn serialize_fact(fact: &HyperFact) -> String {
    let mut out = format!(
        "({} | {} | {})",
        escape_field(&fact.head.normalized),
        escape_field(&fact.relation),
        escape_field(&fact.tail.normalized),
    );
    if !fact.qualifiers.is_empty() {
        let quals: Vec<String> = fact
            .qualifiers
            .iter()
            .map(|q| {
                format!(
                    "{}: {}",
                    escape_field(&q.key),
                    escape_field(&q.value.normalized)
                )
            })
            .collect();
        out.push_str(" [");
        out.push_str(&quals.join("; "));
        out.push(']');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obama_fact() -> HyperFact {
        HyperFact::from_strs(
            "Barack Obama",
            "educated at",
            "Harvard University",
            &[("end time", "1991")],
        )
        .unwrap()
    }

    #[test]
    fn normalize_collapses_whitespace() {
        assert_eq!(normalize("  Harvard   University "), "Harvard University");
    }

    #[test]
    fn normalize_fixed_points() {
        assert_eq!(normalize("1991"), "1991");
        assert_eq!(normalize(""), "");
    }

    #[test]
    fn normalize_is_idempotent() {
        for s in ["  a \t b ", "x", "", " \u{00e9}tat ", "e\u{0301}tat"] {
            assert_eq!(normalize(&normalize(s)), normalize(s));
        }
    }

    #[test]
    fn normalize_applies_nfc() {
        // "e" + combining acute composes to U+00E9
        assert_eq!(normalize("e\u{0301}tat"), "\u{00e9}tat");
    }

    #[test]
    fn mention_rejects_whitespace_only() {
        assert_eq!(EntityMention::new("   "), Err(FactError::EmptyMention));
    }

    #[test]
    fn mention_equality_on_normalized() {
        let a = EntityMention::new(" Palermo ").unwrap();
        let b = EntityMention::new("Palermo").unwrap();
        assert_eq!(a, b);
        assert_ne!(a.surface(), b.surface());
    }

    #[test]
    fn expand_single_qualifier() {
        let quints = expand_quintuples(&obama_fact());
        assert_eq!(
            quints,
            vec![Quintuple {
                head: "Barack Obama".into(),
                relation: "educated at".into(),
                tail: "Harvard University".into(),
                qualifier: Some(("end time".into(), "1991".into())),
            }]
        );
    }

    #[test]
    fn expand_two_qualifiers_gives_two_quintuples() {
        let fact = HyperFact::from_strs(
            "a",
            "r",
            "b",
            &[("start time", "1990"), ("end time", "1991")],
        )
        .unwrap();
        assert_eq!(expand_quintuples(&fact).len(), 2);
    }

    #[test]
    fn expand_no_qualifiers_gives_sentinel() {
        let fact = HyperFact::from_strs("a", "r", "b", &[]).unwrap();
        let quints = expand_quintuples(&fact);
        assert_eq!(quints.len(), 1);
        assert_eq!(quints[0].qualifier, None);
    }

    #[test]
    fn expand_distinct_qualifiers_distinct_quintuples() {
        let fact = HyperFact::from_strs(
            "a",
            "r",
            "b",
            &[("k", "v1"), ("k", "v2"), ("k2", "v1")],
        )
        .unwrap();
        let quints = expand_quintuples(&fact);
        let set: std::collections::HashSet<_> = quints.iter().collect();
        assert_eq!(set.len(), quints.len());
    }

    #[test]
    fn serialize_obama_fact() {
        assert_eq!(
            serialize_fact(&obama_fact()),
            "(Barack Obama | educated at | Harvard University) [end time: 1991]"
        );
    }

    #[test]
    fn serialize_bare_triple_omits_brackets() {
        let fact = HyperFact::from_strs("Palermo", "capital of", "Kingdom of Sicily", &[]).unwrap();
        assert_eq!(
            serialize_fact(&fact),
            "(Palermo | capital of | Kingdom of Sicily)"
        );
    }

    #[test]
    fn qualifiers_serialize_in_sorted_order() {
        let fact = HyperFact::from_strs(
            "a",
            "r",
            "b",
            &[("start time", "1990"), ("end time", "1991")],
        )
        .unwrap();
        assert_eq!(
            serialize_fact(&fact),
            "(a | r | b) [end time: 1991; start time: 1990]"
        );
    }

    #[test]
    fn duplicate_qualifiers_collapse() {
        let fact = HyperFact::from_strs(
            "a",
            "r",
            "b",
            &[("end time", "1991"), ("end time", " 1991 ")],
        )
        .unwrap();
        assert_eq!(fact.qualifiers().len(), 1);
    }

    #[test]
    fn escaping_round_trips() {
        let nasty = r"a\b|c;d:e(f)g[h]i";
        assert_eq!(unescape_field(&escape_field(nasty)), nasty);
    }

    #[test]
    fn canonical_json_round_trip() {
        let fact = obama_fact();
        let json = serde_json::to_string(&fact).unwrap();
        assert_eq!(
            json,
            r#"{"head":"Barack Obama","relation":"educated at","tail":"Harvard University","qualifiers":[{"key":"end time","value":"1991"}]}"#
        );
        let back: HyperFact = serde_json::from_str(&json).unwrap();
        assert_eq!(back, fact);
    }

    #[test]
    fn json_rejects_empty_head() {
        let json = r#"{"head":"  ","relation":"r","tail":"b","qualifiers":[]}"#;
        assert!(serde_json::from_str::<HyperFact>(json).is_err());
    }
}
