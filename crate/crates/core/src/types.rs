//! Domain types shared by the annotation pipeline, the target formats and
//! the metric suite.
//!
//! All offsets are *character* offsets (Unicode scalar values), not byte
//! offsets, so that spans written to JSONL are portable across languages.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoreError {
    #[error("invalid span {start}..{end} for text of {len} characters")]
    InvalidSpan { start: usize, end: usize, len: usize },
    #[error("document has no sources")]
    NoSources,
    #[error("source `{0}` has empty text")]
    EmptySource(String),
    #[error("summary has no sentences")]
    EmptySummary,
    #[error("sentence spans overlap or are out of order at index {0}")]
    UnorderedSentences(usize),
    #[error("non-whitespace text at character {0} is not covered by any sentence")]
    UncoveredText(usize),
    #[error("question-answer pair has an empty {0}")]
    EmptyPairField(&'static str),
    #[error("answer span {start}..{end} reads `{found}`, expected `{expected}`")]
    AnswerSpanMismatch {
        start: usize,
        end: usize,
        found: String,
        expected: String,
    },
}

/// Half-open character range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

impl CharSpan {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    /// Checked constructor against a text of `len` characters.
    pub fn checked(start: usize, end: usize, len: usize) -> Result<Self, CoreError> {
        if start < end && end <= len {
            Ok(Self { start, end })
        } else {
            Err(CoreError::InvalidSpan { start, end, len })
        }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, other: &CharSpan) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn contains_offset(&self, offset: usize) -> bool {
        self.start <= offset && offset < self.end
    }

    /// Slice `text` by this span. Returns `None` if the span is out of range.
    pub fn slice<'a>(&self, text: &'a str) -> Option<&'a str> {
        if self.start > self.end {
            return None;
        }
        let index = text::TextIndex::new(text);
        index.slice(text, *self)
    }

    pub fn shift(&self, by: usize) -> Self {
        Self::new(self.start + by, self.end + by)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Source {
    pub id: String,
    pub text: String,
}

/// The model input: one or more source texts plus an optional query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
    pub sources: Vec<Source>,
}

impl Document {
    pub fn new(id: impl Into<String>, query: Option<String>, sources: Vec<Source>) -> Result<Self, CoreError> {
        let doc = Self {
            id: id.into(),
            query,
            sources,
        };
        doc.validate()?;
        Ok(doc)
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if self.sources.is_empty() {
            return Err(CoreError::NoSources);
        }
        for source in &self.sources {
            if source.text.trim().is_empty() {
                return Err(CoreError::EmptySource(source.id.clone()));
            }
        }
        Ok(())
    }

    /// Sources joined by newlines, without the query.
    pub fn concatenated_sources(&self) -> String {
        self.sources
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Model input text: query first when present, then the sources.
    pub fn input_text(&self) -> String {
        match &self.query {
            Some(q) if !q.trim().is_empty() => format!("{}\n{}", q, self.concatenated_sources()),
            _ => self.concatenated_sources(),
        }
    }
}

/// The output text with its sentence segmentation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    text: String,
    sentences: Vec<CharSpan>,
}

impl Summary {
    /// Segment `text` with [`text::split_sentences`].
    pub fn new(text: impl Into<String>) -> Result<Self, CoreError> {
        let text = text.into();
        let sentences = text::split_sentences(&text);
        Self::from_parts(text, sentences)
    }

    pub fn from_parts(text: String, sentences: Vec<CharSpan>) -> Result<Self, CoreError> {
        if sentences.is_empty() {
            return Err(CoreError::EmptySummary);
        }
        let chars: Vec<char> = text.chars().collect();
        let len = chars.len();
        let mut cursor = 0usize;
        for (i, span) in sentences.iter().enumerate() {
            CharSpan::checked(span.start, span.end, len)?;
            if span.start < cursor {
                return Err(CoreError::UnorderedSentences(i));
            }
            if let Some(off) = (cursor..span.start).find(|&k| !chars[k].is_whitespace()) {
                return Err(CoreError::UncoveredText(off));
            }
            cursor = span.end;
        }
        if let Some(off) = (cursor..len).find(|&k| !chars[k].is_whitespace()) {
            return Err(CoreError::UncoveredText(off));
        }
        Ok(Self { text, sentences })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn sentences(&self) -> &[CharSpan] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn sentence_text(&self, i: usize) -> &str {
        let index = text::TextIndex::new(&self.text);
        index
            .slice(&self.text, self.sentences[i])
            .expect("sentence spans validated at construction")
    }

    pub fn sentence_texts(&self) -> Vec<&str> {
        let index = text::TextIndex::new(&self.text);
        self.sentences
            .iter()
            .map(|s| index.slice(&self.text, *s).expect("validated span"))
            .collect()
    }

    /// Index of the sentence whose span contains the character `offset`.
    pub fn sentence_of(&self, offset: usize) -> Option<usize> {
        self.sentences.iter().position(|s| s.contains_offset(offset))
    }
}

/// One `(question, answer)` entry of a blueprint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAPair {
    pub question: String,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_span: Option<CharSpan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sort_key: Option<usize>,
}

impl QAPair {
    pub fn new(question: impl Into<String>, answer: impl Into<String>) -> Self {
        Self {
            question: question.into(),
            answer: answer.into(),
            answer_span: None,
            sort_key: None,
        }
    }

    pub fn with_span(mut self, span: CharSpan) -> Self {
        self.answer_span = Some(span);
        self
    }

    /// Check the pair invariants, including the answer span against `summary`.
    pub fn validate(&self, summary: Option<&str>) -> Result<(), CoreError> {
        if self.question.trim().is_empty() {
            return Err(CoreError::EmptyPairField("question"));
        }
        if self.answer.trim().is_empty() {
            return Err(CoreError::EmptyPairField("answer"));
        }
        if let (Some(span), Some(text)) = (self.answer_span, summary) {
            let found = span.slice(text).ok_or(CoreError::InvalidSpan {
                start: span.start,
                end: span.end,
                len: text.chars().count(),
            })?;
            if found != self.answer {
                return Err(CoreError::AnswerSpanMismatch {
                    start: span.start,
                    end: span.end,
                    found: found.to_string(),
                    expected: self.answer.clone(),
                });
            }
        }
        Ok(())
    }

    /// Question and answer strings only, for comparisons that ignore anchors.
    pub fn same_text(&self, other: &QAPair) -> bool {
        self.question == other.question && self.answer == other.answer
    }
}

/// Ordered plan of question-answer pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Blueprint {
    pub pairs: Vec<QAPair>,
}

impl Blueprint {
    pub fn new(pairs: Vec<QAPair>) -> Self {
        Self { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, QAPair> {
        self.pairs.iter()
    }

    pub fn answers(&self) -> Vec<&str> {
        self.pairs.iter().map(|p| p.answer.as_str()).collect()
    }

    pub fn questions(&self) -> Vec<&str> {
        self.pairs.iter().map(|p| p.question.as_str()).collect()
    }

    /// Pairs as `(question, answer)` tuples, dropping span anchors.
    pub fn text_pairs(&self) -> Vec<(String, String)> {
        self.pairs
            .iter()
            .map(|p| (p.question.clone(), p.answer.clone()))
            .collect()
    }
}

impl FromIterator<QAPair> for Blueprint {
    fn from_iter<I: IntoIterator<Item = QAPair>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

/// Sub-sentential unit used by Rheme selection.
///
/// `span` is the partition piece and may include a leading connector
/// ("and", "which") that is not part of `text`; `text_span` is the exact
/// slice `text` was taken from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposition {
    pub span: CharSpan,
    pub text_span: CharSpan,
    pub text: String,
}

impl Proposition {
    /// A proposition whose text is exactly the slice at `span`.
    pub fn from_span(summary: &str, span: CharSpan) -> Result<Self, CoreError> {
        let len = summary.chars().count();
        let span = CharSpan::checked(span.start, span.end, len)?;
        let text = span.slice(summary).unwrap_or_default().to_string();
        Ok(Self {
            span,
            text_span: span,
            text,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceBlueprint {
    pub sentence_index: usize,
    pub pairs: Vec<QAPair>,
}

/// The `(d, b, s)` tuple with its per-sentence plans.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedExample {
    pub document: Document,
    pub summary: Summary,
    pub blueprint: Blueprint,
    pub sentence_blueprints: Vec<SentenceBlueprint>,
    pub propositions: Vec<Proposition>,
}
