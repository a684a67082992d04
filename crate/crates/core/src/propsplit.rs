//! Lexical proposition splitting.
//!
//! A sentence is split greedily and hierarchically. A chunk longer than
//! `max_words` content words is cut at the leftmost boundary of the highest
//! priority tier that leaves at least `min_words` content words on both
//! sides, and both halves are split again:
//!
//! 1. after a word ending in a punctuation token (`.`, `,`, `;`);
//! 2. before a coordination token or relative pronoun, which is dropped from
//!    the right-hand proposition text but kept inside its span;
//! 3. before a preposition.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{is_content_word, TextIndex};
use crate::types::{CharSpan, Proposition, Summary};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SplitConfigError {
    #[error("min_words must be at least 1")]
    MinWords,
    #[error("max_words ({max}) must be >= min_words ({min})")]
    MaxWords { min: usize, max: usize },
    #[error("boundary token list `{0}` is empty")]
    EmptyList(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub punctuation_tokens: Vec<String>,
    pub coordination_tokens: Vec<String>,
    pub relative_pronouns: Vec<String>,
    pub prepositions: Vec<String>,
    pub min_words: usize,
    pub max_words: usize,
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            punctuation_tokens: strings(&[".", ",", ";"]),
            coordination_tokens: strings(&["and", "but", "or"]),
            relative_pronouns: strings(&["that", "who", "which", "where", "when", "whose", "whom"]),
            prepositions: strings(&[
                "at", "by", "from", "for", "in", "on", "to", "with", "of", "during", "following",
            ]),
            min_words: 3,
            max_words: 12,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<(), SplitConfigError> {
        if self.min_words < 1 {
            return Err(SplitConfigError::MinWords);
        }
        if self.max_words < self.min_words {
            return Err(SplitConfigError::MaxWords {
                min: self.min_words,
                max: self.max_words,
            });
        }
        for (name, list) in [
            ("punctuation_tokens", &self.punctuation_tokens),
            ("coordination_tokens", &self.coordination_tokens),
            ("relative_pronouns", &self.relative_pronouns),
            ("prepositions", &self.prepositions),
        ] {
            if list.is_empty() {
                return Err(SplitConfigError::EmptyList(name));
            }
        }
        Ok(())
    }

    fn in_list(list: &[String], word: &str) -> bool {
        list.iter().any(|t| t.eq_ignore_ascii_case(word))
    }
}

#[derive(Debug)]
struct Word {
    span: CharSpan,
    raw: String,
    // lowercase, stripped of surrounding punctuation
    bare: String,
    content: bool,
}

fn words_of(text: &str) -> Vec<Word> {
    let index = TextIndex::new(text);
    let mut words = Vec::new();
    let mut start: Option<usize> = None;
    for (b, c) in text.char_indices().chain(std::iter::once((text.len(), ' '))) {
        match (start, c.is_whitespace()) {
            (None, false) => start = Some(b),
            (Some(s), true) => {
                let raw = &text[s..b];
                let bare = raw
                    .trim_matches(|ch: char| !ch.is_alphanumeric())
                    .to_lowercase();
                words.push(Word {
                    span: index.span_of_bytes(s, b).expect("char boundaries"),
                    raw: raw.to_string(),
                    bare,
                    content: is_content_word(raw),
                });
                start = None;
            }
            _ => {}
        }
    }
    words
}

struct Splitter<'a> {
    words: &'a [Word],
    config: &'a SplitConfig,
    // prefix sums of content words
    prefix: Vec<usize>,
}

/// A chunk of words `[span_start, end)` whose text starts at `text_start`.
#[derive(Debug, Clone, Copy)]
struct Chunk {
    span_start: usize,
    text_start: usize,
    end: usize,
}

impl<'a> Splitter<'a> {
    fn new(words: &'a [Word], config: &'a SplitConfig) -> Self {
        let mut prefix = vec![0];
        for w in words {
            prefix.push(prefix.last().unwrap() + usize::from(w.content));
        }
        Self {
            words,
            config,
            prefix,
        }
    }

    fn content(&self, from: usize, to: usize) -> usize {
        self.prefix[to] - self.prefix[from]
    }

    fn is_connector(&self, w: &Word) -> bool {
        SplitConfig::in_list(&self.config.coordination_tokens, &w.bare)
            || SplitConfig::in_list(&self.config.relative_pronouns, &w.bare)
    }

    fn ends_with_punctuation(&self, w: &Word) -> bool {
        let trimmed = w
            .raw
            .trim_end_matches(['"', '\'', ')', ']', '\u{201d}', '\u{2019}']);
        self.config
            .punctuation_tokens
            .iter()
            .any(|p| !p.is_empty() && trimmed.ends_with(p.as_str()))
    }

    /// Start a chunk at `start`, dropping one leading connector when it is
    /// followed by more words. Sentence-initial chunks only drop
    /// coordination tokens.
    fn chunk_from(&self, start: usize, end: usize, sentence_initial: bool) -> Chunk {
        let mut text_start = start;
        if start + 1 < end {
            let w = &self.words[start];
            let strip = if sentence_initial {
                SplitConfig::in_list(&self.config.coordination_tokens, &w.bare)
            } else {
                self.is_connector(w)
            };
            if strip {
                text_start = start + 1;
            }
        }
        Chunk {
            span_start: start,
            text_start,
            end,
        }
    }

    /// Word index of the first eligible boundary, tiers in priority order.
    fn find_boundary(&self, chunk: Chunk) -> Option<usize> {
        let min = self.config.min_words;
        let (lo, hi) = (chunk.text_start, chunk.end);
        let eligible = |k: usize| {
            let right = self.chunk_from(k, hi, false);
            self.content(lo, k) >= min && self.content(right.text_start, hi) >= min
        };
        let tiers: [&dyn Fn(&Word, &Word) -> bool; 3] = [
            &|prev, _| self.ends_with_punctuation(prev),
            &|_, next| self.is_connector(next),
            &|_, next| SplitConfig::in_list(&self.config.prepositions, &next.bare),
        ];
        for tier in tiers {
            if let Some(k) =
                (lo + 1..hi).find(|&k| tier(&self.words[k - 1], &self.words[k]) && eligible(k))
            {
                return Some(k);
            }
        }
        None
    }

    fn split(&self, chunk: Chunk, out: &mut Vec<Chunk>) {
        if self.content(chunk.text_start, chunk.end) > self.config.max_words {
            if let Some(k) = self.find_boundary(chunk) {
                let left = Chunk {
                    span_start: chunk.span_start,
                    text_start: chunk.text_start,
                    end: k,
                };
                self.split(left, out);
                let right = self.chunk_from(k, chunk.end, false);
                self.split(right, out);
                return;
            }
        }
        out.push(chunk);
    }
}

/// Split one sentence into propositions; spans are relative to `sentence_text`.
pub fn split_propositions(sentence_text: &str, config: &SplitConfig) -> Vec<Proposition> {
    let words = words_of(sentence_text);
    if words.is_empty() {
        return Vec::new();
    }
    let splitter = Splitter::new(&words, config);
    let mut chunks = Vec::new();
    splitter.split(splitter.chunk_from(0, words.len(), true), &mut chunks);
    let index = TextIndex::new(sentence_text);
    chunks
        .into_iter()
        .map(|c| {
            let last = words[c.end - 1].span.end;
            let span = CharSpan::new(words[c.span_start].span.start, last);
            let text_span = CharSpan::new(words[c.text_start].span.start, last);
            Proposition {
                span,
                text_span,
                text: index
                    .slice(sentence_text, text_span)
                    .expect("word spans are valid")
                    .to_string(),
            }
        })
        .collect()
}

/// Split every sentence of `summary`; spans are in summary coordinates.
pub fn split_summary(summary: &Summary, config: &SplitConfig) -> Vec<Proposition> {
    summary
        .sentences()
        .iter()
        .zip(summary.sentence_texts())
        .flat_map(|(span, text)| {
            split_propositions(text, config).into_iter().map(move |p| Proposition {
                span: p.span.shift(span.start),
                text_span: p.text_span.shift(span.start),
                text: p.text,
            })
        })
        .collect()
}
