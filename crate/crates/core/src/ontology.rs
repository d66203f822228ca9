//! Relation/qualifier ontology loading, validation, and lookup.
//!
//! The ontology is the contract both prompt construction and parser
//! validation work against: prompts list every definition verbatim, and
//! the parser flags relations or qualifier keys outside the loaded set.
//! Entries are re-sorted lexicographically at load time so downstream
//! prompt text is byte-deterministic regardless of file order.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fact::normalize;

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("cannot read ontology file {path}: {source}")]
    FileUnreadable {
        path: String,
        source: std::io::Error,
    },
    #[error("ontology schema violation: {0}")]
    SchemaViolation(String),
    #[error("duplicate ontology entry: {0:?}")]
    DuplicateName(String),
}

/// A named relation with its natural-language gloss.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationDef {
    pub name: String,
    pub description: String,
}

/// A qualifier key with its natural-language gloss.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualifierDef {
    pub key: String,
    pub description: String,
}

/// The validated relation/qualifier catalog.
///
/// Immutable after construction; relations are sorted by name and
/// qualifiers by key, both case-sensitively.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "OntologyRepr")]
pub struct Ontology {
    name: String,
    version: String,
    relations: Vec<RelationDef>,
    qualifiers: Vec<QualifierDef>,
}

#[derive(Deserialize)]
struct OntologyRepr {
    name: String,
    version: String,
    relations: Vec<RelationDef>,
    #[serde(default)]
    qualifiers: Vec<QualifierDef>,
}

impl TryFrom<OntologyRepr> for Ontology {
    type Error = OntologyError;
    fn try_from(repr: OntologyRepr) -> Result<Self, Self::Error> {
        Ontology::new(repr.name, repr.version, repr.relations, repr.qualifiers)
    }
}

impl Ontology {
    /// Validate and canonicalize an ontology.
    ///
    /// All labels and descriptions go through the same normalization as
    /// entity surfaces (trim, collapse whitespace, NFC), so lookups from
    /// parsed model output compare like for like.
    pub fn new(
        name: String,
        version: String,
        relations: Vec<RelationDef>,
        qualifiers: Vec<QualifierDef>,
    ) -> Result<Self, OntologyError> {
        if relations.is_empty() {
            return Err(OntologyError::SchemaViolation(
                "ontology defines zero relations".into(),
            ));
        }
        let mut relations: Vec<RelationDef> = relations
            .into_iter()
            .enumerate()
            .map(|(i, def)| {
                let name = normalize(&def.name);
                let description = normalize(&def.description);
                if name.is_empty() {
                    return Err(OntologyError::SchemaViolation(format!(
                        "relations[{i}]: empty name"
                    )));
                }
                if description.is_empty() {
                    return Err(OntologyError::SchemaViolation(format!(
                        "relations[{i}] ({name:?}): empty description"
                    )));
                }
                Ok(RelationDef { name, description })
            })
            .collect::<Result<_, _>>()?;
        let mut qualifiers: Vec<QualifierDef> = qualifiers
            .into_iter()
            .enumerate()
            .map(|(i, def)| {
                let key = normalize(&def.key);
                let description = normalize(&def.description);
                if key.is_empty() {
                    return Err(OntologyError::SchemaViolation(format!(
                        "qualifiers[{i}]: empty key"
                    )));
                }
                if description.is_empty() {
                    return Err(OntologyError::SchemaViolation(format!(
                        "qualifiers[{i}] ({key:?}): empty description"
                    )));
                }
                Ok(QualifierDef { key, description })
            })
            .collect::<Result<_, _>>()?;

        relations.sort_by(|a, b| a.name.cmp(&b.name));
        for pair in relations.windows(2) {
            if pair[0].name == pair[1].name {
                return Err(OntologyError::DuplicateName(pair[0].name.clone()));
            }
        }
        qualifiers.sort_by(|a, b| a.key.cmp(&b.key));
        for pair in qualifiers.windows(2) {
            if pair[0].key == pair[1].key {
                return Err(OntologyError::DuplicateName(pair[0].key.clone()));
            }
        }

        Ok(Self {
            name: normalize(&name),
            version: normalize(&version),
            relations,
            qualifiers,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    /// Relations in lexicographic name order.
    pub fn relations(&self) -> &[RelationDef] {
        &self.relations
    }

    /// Qualifiers in lexicographic key order.
    pub fn qualifiers(&self) -> &[QualifierDef] {
        &self.qualifiers
    }

    /// Exact, case-sensitive lookup; the query is normalized first, so
    /// surrounding whitespace is tolerated.
    pub fn lookup_relation(&self, name: &str) -> Option<&RelationDef> {
        let name = normalize(name);
        self.relations
            .binary_search_by(|def| def.name.as_str().cmp(&name))
            .ok()
            .map(|i| &self.relations[i])
    }

    /// Exact, case-sensitive lookup; symmetric to [`Self::lookup_relation`].
    pub fn lookup_qualifier(&self, key: &str) -> Option<&QualifierDef> {
        let key = normalize(key);
        self.qualifiers
            .binary_search_by(|def| def.key.as_str().cmp(&key))
            .ok()
            .map(|i| &self.qualifiers[i])
    }

    pub fn from_json(json: &str) -> Result<Self, OntologyError> {
        serde_json::from_str(json).map_err(|e| match classify(&e) {
            Some(err) => err,
            None => OntologyError::SchemaViolation(e.to_string()),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ontology serializes")
    }
}

// serde wraps our TryFrom error in its own; recover the original kind so
// DuplicateName is not reported as a schema violation.
fn classify(err: &serde_json::Error) -> Option<OntologyError> {
    let msg = err.to_string();
    msg.strip_prefix("duplicate ontology entry: ")
        .map(|rest| OntologyError::DuplicateName(rest.trim_matches('"').to_string()))
}

/// Load and validate an ontology from the documented JSON file format.
pub fn load_ontology(path: impl AsRef<Path>) -> Result<Ontology, OntologyError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| OntologyError::FileUnreadable {
        path: path.display().to_string(),
        source,
    })?;
    Ontology::from_json(&text)
}
