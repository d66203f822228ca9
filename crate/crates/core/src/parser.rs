//! Parser for raw model completions under the canonical line grammar:
//!
//! ```text
//! '(' field '|' field '|' field ')' [ '[' key ':' value (';' key ':' value)* ']' ]
//! ```
//!
//! Completions are parsed line by line. Prose lines and malformed
//! candidates become diagnostics instead of failing the whole
//! completion; ontology mismatches are warnings. Structural characters
//! inside fields arrive backslash-escaped (the serializer escapes them),
//! and a lenient scan keeps unescaped inner parentheses in model output
//! parseable anyway.

use serde::{Deserialize, Serialize};

use crate::fact::{unescape_field, EntityMention, HyperFact, Qualifier};
use crate::ontology::Ontology;

/// Why a line (or fact) was skipped or flagged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticReason {
    NotAFactLine,
    BadArity,
    EmptyField,
    MalformedQualifier,
    UnknownRelation,
    UnknownQualifierKey,
    DuplicateFact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    /// Structural failure; the line produced no fact.
    Skip,
    /// The fact parsed but something is off (ontology mismatch, duplicate).
    Warn,
}

impl DiagnosticReason {
    pub fn severity(self) -> Severity {
        match self {
            Self::NotAFactLine
            | Self::BadArity
            | Self::EmptyField
            | Self::MalformedQualifier => Severity::Skip,
            Self::UnknownRelation | Self::UnknownQualifierKey | Self::DuplicateFact => {
                Severity::Warn
            }
        }
    }
}

/// One per-line finding, with a 1-based line number into the raw input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostic {
    line_number: usize,
    severity: Severity,
    reason: DiagnosticReason,
    excerpt: String,
}

impl ParseDiagnostic {
    pub fn new(line_number: usize, reason: DiagnosticReason, excerpt: impl Into<String>) -> Self {
        Self {
            line_number,
            severity: reason.severity(),
            reason,
            excerpt: excerpt.into(),
        }
    }

    pub fn line_number(&self) -> usize {
        self.line_number
    }

    pub fn severity(&self) -> Severity {
        self.severity
    }

    pub fn reason(&self) -> DiagnosticReason {
        self.reason
    }

    pub fn excerpt(&self) -> &str {
        &self.excerpt
    }
}

/// Everything recovered from one completion.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ParseOutcome {
    pub facts: Vec<HyperFact>,
    pub diagnostics: Vec<ParseDiagnostic>,
}

/// Offsets of unescaped occurrences of `needle` in `text`.
fn unescaped_positions(text: &str, needle: char) -> Vec<usize> {
    let mut positions = Vec::new();
    let mut escaped = false;
    for (idx, ch) in text.char_indices() {
        if escaped {
            escaped = false;
        } else if ch == '\\' {
            escaped = true;
        } else if ch == needle {
            positions.push(idx);
        }
    }
    positions
}

/// Split on unescaped occurrences of `sep`, keeping escapes intact.
fn split_unescaped(text: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut start = 0;
    for pos in unescaped_positions(text, sep) {
        parts.push(&text[start..pos]);
        start = pos + sep.len_utf8();
    }
    parts.push(&text[start..]);
    parts
}

fn parse_line_inner(line: &str) -> Result<HyperFact, DiagnosticReason> {
    let line = line.trim();
    if !line.starts_with('(') {
        return Err(DiagnosticReason::NotAFactLine);
    }

    // Peel off a trailing qualifier section first: the last unescaped '['
    // opens it. Serialized fields escape brackets, so this is unambiguous
    // for canonical output and a reasonable guess for free-form output.
    // The closing ']' counts only if it is itself unescaped, which needs
    // backslash-run parity (`\\]` ends in an unescaped bracket, `\]` not).
    let closes_with_bracket = unescaped_positions(line, ']')
        .last()
        .is_some_and(|&pos| pos == line.len() - 1);
    let (triple_part, qual_part) = if closes_with_bracket {
        match unescaped_positions(line, '[').last() {
            Some(&open) => (
                line[..open].trim_end(),
                Some(&line[open + 1..line.len() - 1]),
            ),
            None => return Err(DiagnosticReason::NotAFactLine),
        }
    } else {
        (line, None)
    };

    // The triple closes at its last unescaped ')', which must also be the
    // last non-space character of the triple part.
    let close = match unescaped_positions(triple_part, ')').last() {
        Some(&pos) if triple_part[pos + 1..].trim().is_empty() => pos,
        _ => return Err(DiagnosticReason::NotAFactLine),
    };
    let interior = &triple_part[1..close];
    let fields = split_unescaped(interior, '|');
    if fields.len() != 3 {
        return Err(DiagnosticReason::BadArity);
    }
    let head = unescape_field(fields[0]);
    let relation = unescape_field(fields[1]);
    let tail = unescape_field(fields[2]);

    let mut qualifiers = Vec::new();
    if let Some(quals) = qual_part {
        if quals.trim().is_empty() {
            return Err(DiagnosticReason::MalformedQualifier);
        }
        for part in split_unescaped(quals, ';') {
            let colon = match unescaped_positions(part, ':').first() {
                Some(&pos) => pos,
                None => return Err(DiagnosticReason::MalformedQualifier),
            };
            let key = unescape_field(&part[..colon]);
            let value = unescape_field(&part[colon + 1..]);
            let value = EntityMention::new(value)
                .map_err(|_| DiagnosticReason::MalformedQualifier)?;
            let qual =
                Qualifier::new(key, value).map_err(|_| DiagnosticReason::MalformedQualifier)?;
            qualifiers.push(qual);
        }
    }

    let head = EntityMention::new(head).map_err(|_| DiagnosticReason::EmptyField)?;
    let tail = EntityMention::new(tail).map_err(|_| DiagnosticReason::EmptyField)?;
    HyperFact::new(head, relation, tail, qualifiers).map_err(|_| DiagnosticReason::EmptyField)
}

/// Parse a single line into a fact, or a diagnostic explaining why not.
///
/// This is the grammar-level operation: no ontology gating happens here.
pub fn parse_fact_line(line: &str) -> Result<HyperFact, ParseDiagnostic> {
    parse_line_inner(line).map_err(|reason| ParseDiagnostic::new(1, reason, line.trim()))
}

/// Parse a whole completion, tolerating surrounding prose.
///
/// Facts are validated against the ontology: unknown relations and
/// qualifier keys produce warnings, and in `strict` mode the affected
/// facts are dropped. Duplicate facts (after normalization) are kept
/// once, with a warning on repeats.
pub fn parse_completion(raw: &str, ontology: &Ontology, strict: bool) -> ParseOutcome {
    let mut outcome = ParseOutcome::default();
    let mut seen: std::collections::HashSet<HyperFact> = std::collections::HashSet::new();

    for (idx, line) in raw.lines().enumerate() {
        let line_number = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fact = match parse_line_inner(trimmed) {
            Ok(fact) => fact,
            Err(reason) => {
                outcome
                    .diagnostics
                    .push(ParseDiagnostic::new(line_number, reason, trimmed));
                continue;
            }
        };
        if !seen.insert(fact.clone()) {
            outcome.diagnostics.push(ParseDiagnostic::new(
                line_number,
                DiagnosticReason::DuplicateFact,
                trimmed,
            ));
            continue;
        }

        let mut unknown = false;
        if ontology.lookup_relation(fact.relation()).is_none() {
            unknown = true;
            outcome.diagnostics.push(ParseDiagnostic::new(
                line_number,
                DiagnosticReason::UnknownRelation,
                fact.relation(),
            ));
        }
        for qual in fact.qualifiers() {
            if ontology.lookup_qualifier(qual.key()).is_none() {
                unknown = true;
                outcome.diagnostics.push(ParseDiagnostic::new(
                    line_number,
                    DiagnosticReason::UnknownQualifierKey,
                    qual.key(),
                ));
            }
        }
        if !(strict && unknown) {
            outcome.facts.push(fact);
        }
    }
    outcome
}
