//! Corpus statistics: lengths, sentence counts, blueprint sizes and the
//! proportion of summary n-grams unseen in the input.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::text::{split_sentences, word_tokens};
use crate::types::Blueprint;

/// Fraction of target n-gram positions whose n-gram never occurs in the
/// source. Targets with fewer than `n` tokens score 0.
pub fn novel_ngrams(source_text: &str, target_text: &str, n: usize) -> f64 {
    assert!(n >= 1, "n-gram order must be at least 1");
    let source = word_tokens(source_text);
    let target = word_tokens(target_text);
    if target.len() < n {
        return 0.0;
    }
    let seen: HashSet<&[String]> = source.windows(n).collect();
    let grams: Vec<&[String]> = target.windows(n).collect();
    let novel = grams.iter().filter(|g| !seen.contains(*g)).count();
    novel as f64 / grams.len() as f64
}

/// The fields statistics are computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsExample {
    pub sources: Vec<String>,
    pub summary: String,
    pub blueprint: Option<Blueprint>,
}

/// Per-example averages over a corpus. Word counts split on whitespace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub examples: usize,
    pub documents_per_example: f64,
    pub input_words: f64,
    pub input_sentences: f64,
    pub words_per_document: f64,
    pub summary_words: f64,
    pub summary_sentences: f64,
    /// Novel n-gram proportions for n = 1..=4.
    pub novel_ngrams: [f64; 4],
    /// Averaged over examples that carry a blueprint.
    pub qa_pairs_per_blueprint: Option<f64>,
    pub summary_plus_blueprint_words: Option<f64>,
}

fn words(text: &str) -> usize {
    text.split_whitespace().count()
}

fn avg(values: impl Iterator<Item = f64>) -> (f64, usize) {
    values.fold((0.0, 0), |(s, n), v| (s + v, n + 1))
}

pub fn dataset_stats(corpus: &[StatsExample]) -> Result<DatasetStats, EvalError> {
    if corpus.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let n = corpus.len() as f64;
    let per = |f: &dyn Fn(&StatsExample) -> f64| corpus.iter().map(f).sum::<f64>() / n;

    let input_words = |e: &StatsExample| e.sources.iter().map(|s| words(s)).sum::<usize>() as f64;
    let mut novel = [0.0; 4];
    for (k, slot) in novel.iter_mut().enumerate() {
        *slot = per(&|e| novel_ngrams(&e.sources.join("\n"), &e.summary, k + 1));
    }
    let with_blueprint = || corpus.iter().filter_map(|e| e.blueprint.as_ref().map(|b| (e, b)));
    let (pairs_sum, with_bp) = avg(with_blueprint().map(|(_, b)| b.len() as f64));
    let (plus_sum, _) = avg(with_blueprint().map(|(e, b)| {
        let bp_words: usize = b.iter().map(|p| words(&p.question) + words(&p.answer)).sum();
        (words(&e.summary) + bp_words) as f64
    }));
    Ok(DatasetStats {
        examples: corpus.len(),
        documents_per_example: per(&|e| e.sources.len() as f64),
        input_words: per(&input_words),
        input_sentences: per(&|e| e.sources.iter().map(|s| split_sentences(s).len()).sum::<usize>() as f64),
        words_per_document: per(&|e| {
            if e.sources.is_empty() {
                0.0
            } else {
                input_words(e) / e.sources.len() as f64
            }
        }),
        summary_words: per(&|e| words(&e.summary) as f64),
        summary_sentences: per(&|e| split_sentences(&e.summary).len() as f64),
        novel_ngrams: novel,
        qa_pairs_per_blueprint: (with_bp > 0).then(|| pairs_sum / with_bp as f64),
        summary_plus_blueprint_words: (with_bp > 0).then(|| plus_sum / with_bp as f64),
    })
}
