//! Answer candidate extraction: base noun phrases, named entities and
//! numbers found in a summary.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clients::ClientError;
use crate::text::TextIndex;
use crate::types::{CharSpan, Summary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateKind {
    NounPhrase,
    NamedEntity,
    NumberOrDate,
}

impl CandidateKind {
    // higher wins when two backends report the same span
    fn priority(self) -> u8 {
        match self {
            CandidateKind::NumberOrDate => 2,
            CandidateKind::NamedEntity => 1,
            CandidateKind::NounPhrase => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerCandidate {
    pub text: String,
    #[serde(flatten)]
    pub span: CharSpan,
    pub kind: CandidateKind,
}

#[derive(Debug, Error)]
pub enum CandidateError {
    #[error("candidate backend unavailable: {0}")]
    BackendUnavailable(#[source] ClientError),
    #[error("candidate `{text}` at {start}..{end} does not match the summary")]
    InvalidCandidate {
        text: String,
        start: usize,
        end: usize,
    },
}

/// Source of answer candidates for a summary.
pub trait CandidateBackend: Send + Sync {
    fn extract(&self, summary: &Summary) -> Result<Vec<AnswerCandidate>, ClientError>;
}

/// Offline backend built on [`heuristic_backend`].
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicBackend;

impl CandidateBackend for HeuristicBackend {
    fn extract(&self, summary: &Summary) -> Result<Vec<AnswerCandidate>, ClientError> {
        Ok(heuristic_backend(summary))
    }
}

/// Run `backend`, validate every span against the summary, then sort by
/// `(start, end)` and drop duplicate spans. Nested candidates are kept.
pub fn extract_candidates(
    summary: &Summary,
    backend: &dyn CandidateBackend,
) -> Result<Vec<AnswerCandidate>, CandidateError> {
    let raw = backend
        .extract(summary)
        .map_err(CandidateError::BackendUnavailable)?;
    let index = TextIndex::new(summary.text());
    for c in &raw {
        let ok = c.span.start < c.span.end
            && index.slice(summary.text(), c.span) == Some(c.text.as_str());
        if !ok {
            return Err(CandidateError::InvalidCandidate {
                text: c.text.clone(),
                start: c.span.start,
                end: c.span.end,
            });
        }
    }
    Ok(dedupe(raw))
}

fn dedupe(candidates: Vec<AnswerCandidate>) -> Vec<AnswerCandidate> {
    let mut by_span: BTreeMap<(usize, usize), AnswerCandidate> = BTreeMap::new();
    for c in candidates {
        let key = (c.span.start, c.span.end);
        match by_span.get(&key) {
            Some(prev) if prev.kind.priority() >= c.kind.priority() => {}
            _ => {
                by_span.insert(key, c);
            }
        }
    }
    by_span.into_values().collect()
}

const DETERMINERS: &[&str] = &[
    "the", "a", "an", "this", "that", "these", "those", "his", "her", "its", "their", "our",
    "my", "your", "some", "any", "each", "every", "no", "several", "many", "few", "all", "both",
];

const CLOSED_CLASS: &[&str] = &[
    // pronouns
    "he", "she", "it", "they", "we", "i", "you", "him", "them", "us", "me", "who", "whom",
    "whose", "which", "what", "there", "here",
    // prepositions
    "of", "in", "on", "at", "by", "for", "with", "from", "to", "into", "onto", "over", "under",
    "about", "as", "than", "during", "following", "between", "through", "after", "before",
    "since", "until", "upon", "within", "without", "against", "among", "across", "per", "via",
    // conjunctions
    "and", "or", "but", "nor", "so", "yet", "if", "because", "while", "although", "though",
    "whereas", "when", "where", "how", "why", "whether",
    // auxiliaries and modals
    "is", "are", "was", "were", "be", "been", "being", "am", "has", "have", "had", "do", "does",
    "did", "will", "would", "shall", "should", "can", "could", "may", "might", "must",
    // common verbs that are not inflected with -ed
    "built", "made", "found", "known", "born", "given", "taken", "became", "become", "began",
    "held", "led", "left", "won", "got", "went", "came", "said", "told", "took", "gave", "saw",
    "brought", "bought", "sold", "written", "wrote", "run", "ran", "set", "put",
    // adverbs and particles
    "not", "also", "very", "then", "too", "only", "just", "again", "once", "still", "even",
    "however", "more", "most", "less", "least", "such",
];

fn is_determiner(bare: &str) -> bool {
    DETERMINERS.contains(&bare)
}

fn is_number(core: &str) -> bool {
    core.chars().next().is_some_and(|c| c.is_ascii_digit())
        && core
            .chars()
            .all(|c| c.is_alphanumeric() || matches!(c, ',' | '.' | '-' | '/'))
}

#[derive(Debug)]
struct Token {
    // char span of the word with surrounding punctuation trimmed
    core: CharSpan,
    bare: String,
    capitalized: bool,
    number: bool,
    // punctuation separates this token from the next one
    break_after: bool,
    // punctuation separates this token from the previous one
    break_before: bool,
}

impl Token {
    fn open_class(&self) -> bool {
        if self.number {
            return true;
        }
        if is_determiner(&self.bare) || CLOSED_CLASS.contains(&self.bare.as_str()) {
            return false;
        }
        if !self.capitalized && (self.bare.ends_with("ed") || self.bare.ends_with("ly")) {
            return false;
        }
        true
    }
}

fn tokens_of(sentence: &str, offset: usize) -> Vec<Token> {
    let index = TextIndex::new(sentence);
    let mut tokens = Vec::new();
    let mut pending_break = false;
    for (b, raw) in split_with_offsets(sentence) {
        let lead = raw.len() - raw.trim_start_matches(|c: char| !c.is_alphanumeric()).len();
        let core = raw.trim_matches(|c: char| !c.is_alphanumeric());
        if core.is_empty() {
            if let Some(prev) = tokens.last_mut() {
                let prev: &mut Token = prev;
                prev.break_after = true;
            }
            pending_break = true;
            continue;
        }
        let start = b + lead;
        let end = start + core.len();
        let span = index.span_of_bytes(start, end).expect("char boundaries");
        tokens.push(Token {
            core: span.shift(offset),
            bare: core.to_lowercase(),
            capitalized: core.chars().next().is_some_and(char::is_uppercase),
            number: is_number(core),
            break_after: end < b + raw.len(),
            break_before: lead > 0 || pending_break,
        });
        pending_break = false;
    }
    tokens
}

fn split_with_offsets(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split_whitespace()
        .map(move |w| (w.as_ptr() as usize - text.as_ptr() as usize, w))
}

fn joined(tokens: &[Token], i: usize) -> bool {
    !tokens[i].break_after && !tokens[i + 1].break_before
}

/// Deterministic offline candidate extraction.
///
/// * capitalized-token runs that do not start a sentence, plus every
///   contiguous sub-run (up to six tokens) as nested candidates;
/// * an optional determiner followed by a run of open-class tokens, where
///   the open/closed decision comes from a bundled closed-class word list;
/// * numeric tokens and `NUM to NUM` ranges.
///
/// Runs never cross punctuation.
pub fn heuristic_backend(summary: &Summary) -> Vec<AnswerCandidate> {
    let text = summary.text();
    let index = TextIndex::new(text);
    let mut out = Vec::new();
    for span in summary.sentences() {
        let sentence = index.slice(text, *span).expect("valid sentence span");
        let tokens = tokens_of(sentence, span.start);
        let emit = |out: &mut Vec<AnswerCandidate>, from: usize, to: usize, kind| {
            let span = CharSpan::new(tokens[from].core.start, tokens[to].core.end);
            let text = index.slice(text, span).expect("token span").to_string();
            out.push(AnswerCandidate { text, span, kind });
        };

        // capitalized runs
        let mut i = 1;
        while i < tokens.len() {
            if !tokens[i].capitalized || CLOSED_CLASS.contains(&tokens[i].bare.as_str()) {
                i += 1;
                continue;
            }
            let mut j = i;
            while j + 1 < tokens.len() && tokens[j + 1].capitalized && joined(&tokens, j) {
                j += 1;
            }
            let run_len = j - i + 1;
            if run_len <= 6 {
                for a in i..=j {
                    for b in a..=j {
                        emit(&mut out, a, b, CandidateKind::NamedEntity);
                    }
                }
            } else {
                emit(&mut out, i, j, CandidateKind::NamedEntity);
            }
            i = j + 1;
        }

        // determiner + open-class runs
        let mut i = 0;
        while i < tokens.len() {
            let start = i;
            let mut j = i;
            if is_determiner(&tokens[i].bare) {
                if i + 1 >= tokens.len() || !joined(&tokens, i) || !tokens[i + 1].open_class() {
                    i += 1;
                    continue;
                }
                j = i + 1;
            } else if !tokens[i].open_class() {
                i += 1;
                continue;
            }
            while j + 1 < tokens.len() && tokens[j + 1].open_class() && joined(&tokens, j) {
                j += 1;
            }
            let all_numbers = tokens[start..=j].iter().all(|t| t.number);
            if !all_numbers {
                emit(&mut out, start, j, CandidateKind::NounPhrase);
            }
            i = j + 1;
        }

        // numbers and ranges
        for k in 0..tokens.len() {
            if !tokens[k].number {
                continue;
            }
            emit(&mut out, k, k, CandidateKind::NumberOrDate);
            if k + 2 < tokens.len()
                && tokens[k + 1].bare == "to"
                && tokens[k + 2].number
                && joined(&tokens, k)
                && joined(&tokens, k + 1)
            {
                emit(&mut out, k, k + 2, CandidateKind::NumberOrDate);
            }
        }
    }
    dedupe(out)
}
