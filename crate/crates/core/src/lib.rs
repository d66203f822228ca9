//! Core library for zero-shot hyper-relational fact extraction and
//! evaluation: ontology-grounded prompt construction, a pluggable
//! chat-completion gateway with content-addressed caching, a tolerant
//! output parser, dataset conversion, and exact / soft / reproducibility
//! scoring.

pub mod dataset;
pub mod eval;
pub mod fact;
pub mod gateway;
pub mod hash;
pub mod markdown;
pub mod ontology;
pub mod parser;
pub mod prompt;

pub use fact::{expand_quintuples, normalize, serialize_fact, EntityMention, HyperFact, Qualifier, Quintuple};
pub use ontology::{load_ontology, Ontology, QualifierDef, RelationDef};
pub use parser::{parse_completion, parse_fact_line, ParseDiagnostic, ParseOutcome};
