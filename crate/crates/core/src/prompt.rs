//! Deterministic zero-shot prompt assembly: task instruction, ontology
//! definitions, one chain-of-thought exemplar, and the output-format
//! contract, split into a reusable system text and a per-sentence user text.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fact::normalize;
use crate::hash::content_hash;
use crate::ontology::Ontology;
use crate::parser::parse_completion;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("exemplar expected_output does not parse cleanly: {0}")]
    ExemplarUnparseable(String),
    #[error("sentence is empty after normalization")]
    EmptySentence,
    #[error("cannot read {path}: {source}")]
    FileUnreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("exemplar schema: {0}")]
    ExemplarSchema(#[from] serde_json::Error),
}

/// The output-format contract embedded in every prompt. The parser accepts
/// exactly what this text asks the model to produce.
pub const FORMAT_GRAMMAR: &str = "\
Output one fact per line and nothing else. Each line has the form:

(head | relation | tail) [key1: value1; key2: value2]

- The parenthesized triple is mandatory. The bracketed qualifier list is \
optional; omit it for facts without qualifiers.
- Separate the three triple fields with `|`, qualifiers with `;`, and a \
qualifier key from its value with `:`.
- If a field's own text contains any of `\\ | ; : ( ) [ ]`, escape that \
character with a preceding backslash.
- Use only relation names and qualifier keys from the lists above, spelled \
exactly as listed.
- If the sentence supports no fact, output nothing.";

/// One worked example: sentence, reasoning, and the expected output lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoTExemplar {
    pub context_sentence: String,
    pub reasoning: String,
    pub expected_output: String,
}

/// Read an exemplar from a JSON file.
pub fn load_exemplar(path: impl AsRef<Path>) -> Result<CoTExemplar, PromptError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| PromptError::FileUnreadable {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

/// A fully assembled prompt, minus the target sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    system_text: String,
    user_template: String,
    exemplar: CoTExemplar,
    format_grammar_text: String,
}

/// A prompt for one concrete sentence, with a recomputable content hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub system_text: String,
    pub user_text: String,
    pub prompt_hash: String,
}

/// Hash binding a rendered prompt's two texts.
pub fn prompt_hash(system_text: &str, user_text: &str) -> String {
    content_hash(&[system_text, user_text])
}

/// Assemble the prompt spec for an ontology and exemplar. The exemplar's
/// expected output must parse under the grammar against this ontology with
/// zero diagnostics, so the model is never shown an example the parser
/// would reject.
pub fn build_prompt_spec(ont: &Ontology, exemplar: CoTExemplar) -> Result<PromptSpec, PromptError> {
    let outcome = parse_completion(&exemplar.expected_output, ont, false);
    if let Some(diag) = outcome.diagnostics.first() {
        return Err(PromptError::ExemplarUnparseable(format!(
            "line {}: {:?} in {:?}",
            diag.line_number(),
            diag.reason(),
            diag.excerpt()
        )));
    }
    if outcome.facts.is_empty() {
        return Err(PromptError::ExemplarUnparseable(
            "expected_output contains no fact lines".into(),
        ));
    }

    let mut system = String::new();
    system.push_str(
        "You are an information extraction system. Given one context sentence, \
extract every hyper-relational fact it states: a head entity, a relation, a \
tail entity, and zero or more qualifier key/value pairs that refine the fact.\n\
\n\
Definitions:\n\
- An entity is a real-world object mentioned in the sentence, such as a \
person, country, type of document, organization, place, work, or time \
expression.\n\
- A relation is a directed link from a head entity to a tail entity. Use \
only the relations listed below.\n\
- A qualifier is a key/value pair that refines a fact, such as a time span, \
a rank, or an academic field. Use only the qualifier keys listed below; the \
value must come from the sentence.\n",
    );
    system.push_str("\nRelations (name: description):\n");
    for def in ont.relations() {
        system.push_str(&def.name);
        system.push_str(": ");
        system.push_str(&def.description);
        system.push('\n');
    }
    system.push_str("\nQualifiers (key: description):\n");
    for def in ont.qualifiers() {
        system.push_str(&def.key);
        system.push_str(": ");
        system.push_str(&def.description);
        system.push('\n');
    }
    system.push_str("\nOutput format:\n");
    system.push_str(FORMAT_GRAMMAR);
    system.push_str("\n\nExample:\nSentence: ");
    system.push_str(&exemplar.context_sentence);
    system.push_str("\nReasoning: ");
    system.push_str(&exemplar.reasoning);
    system.push_str("\nOutput:\n");
    system.push_str(&exemplar.expected_output);
    system.push('\n');

    Ok(PromptSpec {
        system_text: system,
        user_template: "Sentence: {SENTENCE}\nOutput:".to_string(),
        exemplar,
        format_grammar_text: FORMAT_GRAMMAR.to_string(),
    })
}

impl PromptSpec {
    pub fn system_text(&self) -> &str {
        &self.system_text
    }

    pub fn user_template(&self) -> &str {
        &self.user_template
    }

    pub fn exemplar(&self) -> &CoTExemplar {
        &self.exemplar
    }

    pub fn format_grammar_text(&self) -> &str {
        &self.format_grammar_text
    }
}

/// Fill the sentence slot and hash the result. Pure: equal inputs yield
/// byte-equal prompts.
pub fn render(spec: &PromptSpec, sentence: &str) -> Result<RenderedPrompt, PromptError> {
    let sentence = normalize(sentence);
    if sentence.is_empty() {
        return Err(PromptError::EmptySentence);
    }
    let user_text = spec.user_template.replacen("{SENTENCE}", &sentence, 1);
    let hash = prompt_hash(&spec.system_text, &user_text);
    Ok(RenderedPrompt {
        system_text: spec.system_text.clone(),
        user_text,
        prompt_hash: hash,
    })
}
