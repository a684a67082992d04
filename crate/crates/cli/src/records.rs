//! JSONL record layouts and their conversion to core types.

use blueprint_core::formats::{ParseFlag, TargetVariant};
use blueprint_core::{AnnotatedExample, Blueprint, CharSpan, CoreError, Document, QAPair, Source, Summary};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanRecord {
    pub start: usize,
    pub end: usize,
}

impl From<SpanRecord> for CharSpan {
    fn from(s: SpanRecord) -> Self {
        CharSpan::new(s.start, s.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub question: String,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<usize>,
}

impl PairRecord {
    pub fn from_pair(p: &QAPair) -> Self {
        Self {
            question: p.question.clone(),
            answer: p.answer.clone(),
            start: p.answer_span.map(|s| s.start),
            end: p.answer_span.map(|s| s.end),
        }
    }

    pub fn to_pair(&self) -> Result<QAPair, CoreError> {
        let pair = QAPair::new(self.question.clone(), self.answer.clone());
        match (self.start, self.end) {
            (Some(start), Some(end)) => Ok(pair.with_span(CharSpan::new(start, end))),
            (None, None) => Ok(pair),
            (start, end) => Err(CoreError::InvalidSpan {
                start: start.unwrap_or(0),
                end: end.unwrap_or(0),
                len: 0,
            }),
        }
    }
}

pub fn pair_records(blueprint: &Blueprint) -> Vec<PairRecord> {
    blueprint.iter().map(PairRecord::from_pair).collect()
}

pub fn to_blueprint(pairs: &[PairRecord]) -> Result<Blueprint, CoreError> {
    pairs.iter().map(PairRecord::to_pair).collect::<Result<Vec<_>, _>>().map(Blueprint::new)
}

/// One `(input, summary)` example, optionally with its blueprint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub example_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
    pub sources: Vec<Source>,
    pub summary: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub propositions: Option<Vec<SpanRecord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blueprint: Option<Vec<PairRecord>>,
}

impl CorpusRecord {
    pub fn document(&self) -> Result<Document, CoreError> {
        Document::new(self.example_id.clone(), self.query.clone(), self.sources.clone())
    }

    pub fn summary(&self) -> Result<Summary, CoreError> {
        Summary::new(self.summary.as_str())
    }

    /// Proposition overrides, checked against the summary length.
    pub fn proposition_spans(&self) -> Result<Option<Vec<CharSpan>>, CoreError> {
        let len = self.summary.chars().count();
        self.propositions
            .as_ref()
            .map(|spans| {
                spans
                    .iter()
                    .map(|s| CharSpan::checked(s.start, s.end, len))
                    .collect()
            })
            .transpose()
    }

    /// The blueprint, with every anchored pair checked against the summary.
    pub fn checked_blueprint(&self) -> Result<Option<Blueprint>, CoreError> {
        let Some(pairs) = &self.blueprint else {
            return Ok(None);
        };
        let bp = to_blueprint(pairs)?;
        for p in bp.iter() {
            p.validate(Some(&self.summary))?;
        }
        Ok(Some(bp))
    }

    /// Every span the record carries must be valid.
    pub fn validate(&self) -> Result<(), CoreError> {
        self.document()?;
        self.proposition_spans()?;
        self.checked_blueprint()?;
        Ok(())
    }

    pub fn from_annotated(base: &CorpusRecord, ex: &AnnotatedExample) -> Self {
        Self {
            blueprint: Some(pair_records(&ex.blueprint)),
            ..base.clone()
        }
    }
}

/// Model output to be parsed. Lines written by `serialize` are accepted as
/// they are: their `target` field is read as the decode text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeRecord {
    pub example_id: String,
    #[serde(alias = "target")]
    pub text: String,
    #[serde(default)]
    pub variant: Option<TargetVariant>,
    #[serde(default)]
    pub step_index: Option<usize>,
}

/// A parsed prediction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuredRecord {
    pub example_id: String,
    pub blueprint: Vec<PairRecord>,
    pub summary: String,
    #[serde(default)]
    pub flags: Vec<ParseFlag>,
}

/// Input to `control`: a structured prediction, or a corpus record, which
/// also carries its sources.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub example_id: String,
    pub summary: String,
    #[serde(default)]
    pub blueprint: Vec<PairRecord>,
    #[serde(default)]
    pub query: Option<String>,
    #[serde(default)]
    pub sources: Option<Vec<Source>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformedRecord {
    pub example_id: String,
    pub transform: String,
    pub summary: String,
    pub blueprint: Vec<PairRecord>,
    /// Plan per summary sentence, in sentence order.
    pub sentence_plans: Vec<Vec<PairRecord>>,
    pub removed: usize,
    #[serde(default)]
    pub unchecked: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub example_id: String,
    pub variant: String,
    pub input: String,
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_index: Option<usize>,
}

/// Sidecar entry for a record that failed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRecord {
    /// 1-based line in the input file.
    pub line: usize,
    pub example_id: Option<String>,
    pub error: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marker: Option<String>,
}
