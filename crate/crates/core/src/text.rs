//! Text normalization, tokenization and sentence segmentation.
//!
//! Two tokenizations are used throughout the crate:
//!
//! * [`normalize_answer`] follows the SQuAD evaluation convention
//!   (lowercase, strip punctuation, drop the articles *a*, *an*, *the*) and
//!   backs round-trip matching and token-level F1.
//! * [`word_tokens`] / [`bag_tokens`] apply the same lowercasing and
//!   punctuation rules but keep articles; they back Coverage and the
//!   n-gram statistics.
//!
//! Hyphens between two alphanumeric characters are kept, so
//! `high-performance` is one token.

use std::collections::BTreeMap;

use crate::types::CharSpan;

const ARTICLES: [&str; 3] = ["a", "an", "the"];

/// Maps character offsets to byte offsets for one text.
#[derive(Debug, Clone)]
pub struct TextIndex {
    // byte offset of every char boundary, including the end of the text
    bounds: Vec<usize>,
}

impl TextIndex {
    pub fn new(text: &str) -> Self {
        let mut bounds: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        bounds.push(text.len());
        Self { bounds }
    }

    /// Number of characters in the indexed text.
    pub fn char_len(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn byte(&self, char_offset: usize) -> Option<usize> {
        self.bounds.get(char_offset).copied()
    }

    /// Character offset of a byte offset that lies on a char boundary.
    pub fn char_of(&self, byte_offset: usize) -> Option<usize> {
        self.bounds.binary_search(&byte_offset).ok()
    }

    pub fn slice<'a>(&self, text: &'a str, span: CharSpan) -> Option<&'a str> {
        if span.start > span.end {
            return None;
        }
        let start = self.byte(span.start)?;
        let end = self.byte(span.end)?;
        text.get(start..end)
    }

    pub fn span_of_bytes(&self, start: usize, end: usize) -> Option<CharSpan> {
        Some(CharSpan::new(self.char_of(start)?, self.char_of(end)?))
    }
}

/// Lowercase one whitespace-delimited word and drop punctuation, keeping
/// hyphens that sit between two alphanumeric characters.
fn clean_word(word: &str) -> String {
    let chars: Vec<char> = word.chars().collect();
    let mut out = String::with_capacity(word.len());
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            out.extend(c.to_lowercase());
        } else if c == '-'
            && i > 0
            && i + 1 < chars.len()
            && chars[i - 1].is_alphanumeric()
            && chars[i + 1].is_alphanumeric()
        {
            out.push('-');
        }
    }
    out
}

/// Lowercased, punctuation-stripped token sequence. Articles are kept.
pub fn word_tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(clean_word)
        .filter(|w| !w.is_empty())
        .collect()
}

/// SQuAD-style answer normalization.
pub fn normalize_answer(text: &str) -> Vec<String> {
    word_tokens(text)
        .into_iter()
        .filter(|w| !ARTICLES.contains(&w.as_str()))
        .collect()
}

/// Whether a word counts towards length thresholds (has any alphanumeric).
pub fn is_content_word(word: &str) -> bool {
    word.chars().any(char::is_alphanumeric)
}

/// Multiset of tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenBag {
    counts: BTreeMap<String, usize>,
}

impl TokenBag {
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut counts = BTreeMap::new();
        for t in tokens {
            *counts.entry(t.into()).or_insert(0) += 1;
        }
        Self { counts }
    }

    pub fn count(&self, token: &str) -> usize {
        self.counts.get(token).copied().unwrap_or(0)
    }

    /// Total number of tokens, counting multiplicity.
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Size of the multiset intersection.
    pub fn overlap(&self, other: &TokenBag) -> usize {
        self.counts
            .iter()
            .map(|(t, &n)| n.min(other.count(t)))
            .sum()
    }

    /// Remove the multiset intersection with `other` from `self`.
    pub fn remove_overlap(&mut self, other: &TokenBag) {
        for (t, &n) in &other.counts {
            if let Some(c) = self.counts.get_mut(t) {
                *c = c.saturating_sub(n);
            }
        }
        self.counts.retain(|_, c| *c > 0);
    }

    /// Multiset sum.
    pub fn union_add(&self, other: &TokenBag) -> TokenBag {
        let mut counts = self.counts.clone();
        for (t, &n) in &other.counts {
            *counts.entry(t.clone()).or_insert(0) += n;
        }
        TokenBag { counts }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.counts.iter().map(|(t, &n)| (t.as_str(), n))
    }
}

pub fn bag_tokens(text: &str) -> TokenBag {
    TokenBag::from_tokens(word_tokens(text))
}

const ABBREVIATIONS: &[&str] = &[
    "mr.", "mrs.", "ms.", "dr.", "prof.", "sr.", "jr.", "st.", "mt.", "vs.", "etc.", "e.g.",
    "i.e.", "inc.", "ltd.", "co.", "corp.", "no.", "fig.", "approx.", "u.s.", "u.k.", "jan.",
    "feb.", "mar.", "apr.", "jun.", "jul.", "aug.", "sep.", "sept.", "oct.", "nov.", "dec.",
];

fn is_closing(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

fn is_sentence_opener(c: char) -> bool {
    c.is_uppercase() || c.is_numeric() || matches!(c, '"' | '\'' | '(' | '[' | '\u{201c}' | '\u{2018}')
}

/// Rule-based sentence segmentation.
///
/// A boundary is a run of `.`, `!` or `?` (optionally followed by closing
/// quotes or brackets), then whitespace, then an uppercase letter, a digit or
/// an opening quote. A `.` that ends a known abbreviation is not a boundary.
/// Returned spans are trimmed and cover every non-whitespace character.
pub fn split_sentences(text: &str) -> Vec<CharSpan> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < n && chars[i].is_whitespace() {
        i += 1;
    }
    let mut start = i;
    while i < n {
        let c = chars[i];
        if matches!(c, '.' | '!' | '?') {
            let mut j = i + 1;
            while j < n && (matches!(chars[j], '.' | '!' | '?') || is_closing(chars[j])) {
                j += 1;
            }
            if j < n && chars[j].is_whitespace() {
                let mut k = j;
                while k < n && chars[k].is_whitespace() {
                    k += 1;
                }
                if k < n && is_sentence_opener(chars[k]) && !ends_with_abbreviation(&chars, start, i) {
                    spans.push(CharSpan::new(start, j));
                    start = k;
                    i = k;
                    continue;
                }
            }
            i = j;
            continue;
        }
        i += 1;
    }
    let mut end = n;
    while end > start && chars[end - 1].is_whitespace() {
        end -= 1;
    }
    if end > start {
        spans.push(CharSpan::new(start, end));
    }
    spans
}

fn ends_with_abbreviation(chars: &[char], sentence_start: usize, period: usize) -> bool {
    if chars[period] != '.' {
        return false;
    }
    let mut w = period;
    while w > sentence_start && !chars[w - 1].is_whitespace() {
        w -= 1;
    }
    let word: String = chars[w..=period].iter().collect::<String>().to_lowercase();
    ABBREVIATIONS.contains(&word.as_str())
}
