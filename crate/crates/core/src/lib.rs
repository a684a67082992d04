//! Question-answer blueprints for summarization data.
//!
//! A blueprint is an ordered list of question-answer pairs that plans the
//! content of a summary. This crate annotates `(document, summary)` pairs
//! with blueprints, writes and parses the three model target layouts,
//! applies plan-level control transforms, and computes QA- and
//! entailment-based metrics. The learned components (question generation,
//! question answering, entailment) sit behind the client traits in
//! [`clients`], with an HTTP backend and a fixture-driven mock.

pub mod annotate;
pub mod candidates;
pub mod clients;
pub mod control;
pub mod eval;
pub mod formats;
pub mod propsplit;
pub mod text;
pub mod types;

pub use types::{
    AnnotatedExample, Blueprint, CharSpan, CoreError, Document, Proposition, QAPair,
    SentenceBlueprint, Source, Summary,
};
