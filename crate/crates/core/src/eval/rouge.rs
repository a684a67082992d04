//! Summary-level ROUGE-L ("RougeLSum"): newlines separate sentences, and
//! each reference sentence is matched against the union of its longest
//! common subsequences with every candidate sentence.
//!
//! Tokens are lowercased runs of ASCII letters and digits. When a sentence
//! pair has several longest common subsequences, the one with the
//! lexicographically smallest reference positions is used. Hits are capped
//! by the token counts of both texts, so a token cannot be credited more
//! often than it occurs.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::types::{Blueprint, Summary};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Lowercase, map everything except `[a-z0-9]` to spaces, split.
pub fn rouge_tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .chars()
        .map(|c| if c.is_ascii_lowercase() || c.is_ascii_digit() { c } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

fn sentences(text: &str) -> Vec<Vec<String>> {
    text.split('\n')
        .map(rouge_tokens)
        .filter(|s| !s.is_empty())
        .collect()
}

/// Reference positions of the lexicographically smallest LCS of `r` and `c`.
pub fn lcs_positions<T: PartialEq>(r: &[T], c: &[T]) -> Vec<usize> {
    let (n, m) = (r.len(), c.len());
    // suffix table: l[i][j] = LCS length of r[i..] and c[j..]
    let mut l = vec![vec![0usize; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            l[i][j] = if r[i] == c[j] {
                l[i + 1][j + 1] + 1
            } else {
                l[i + 1][j].max(l[i][j + 1])
            };
        }
    }
    let mut out = Vec::with_capacity(l[0][0]);
    let (mut i, mut j) = (0, 0);
    while l[i][j] > 0 {
        let want = l[i][j];
        let (ni, nj) = (i..n)
            .find_map(|ii| {
                (j..m)
                    .find(|&jj| r[ii] == c[jj] && l[ii + 1][jj + 1] + 1 == want)
                    .map(|jj| (ii, jj))
            })
            .expect("an LCS continuation exists while the table is positive");
        out.push(ni);
        i = ni + 1;
        j = nj + 1;
    }
    out
}

/// RougeLSum between two texts whose sentences are newline-separated.
pub fn rouge_lsum_score(candidate: &str, reference: &str) -> RougeScore {
    let cand = sentences(candidate);
    let refs = sentences(reference);
    let n: usize = cand.iter().map(Vec::len).sum();
    let m: usize = refs.iter().map(Vec::len).sum();
    if n == 0 && m == 0 {
        return RougeScore {
            precision: 1.0,
            recall: 1.0,
            f1: 1.0,
        };
    }
    if n == 0 || m == 0 {
        return RougeScore {
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
        };
    }
    let mut cand_counts: HashMap<&str, usize> = HashMap::new();
    for t in cand.iter().flatten() {
        *cand_counts.entry(t).or_default() += 1;
    }
    let mut ref_counts: HashMap<&str, usize> = HashMap::new();
    for t in refs.iter().flatten() {
        *ref_counts.entry(t).or_default() += 1;
    }
    let mut hits = 0usize;
    for r in &refs {
        let union: BTreeSet<usize> = cand.iter().flat_map(|c| lcs_positions(r, c)).collect();
        for &pos in &union {
            let t = r[pos].as_str();
            let (Some(cc), Some(rc)) = (cand_counts.get_mut(t), ref_counts.get_mut(t)) else {
                continue;
            };
            if *cc > 0 && *rc > 0 {
                hits += 1;
                *cc -= 1;
                *rc -= 1;
            }
        }
    }
    let precision = hits as f64 / n as f64;
    let recall = hits as f64 / m as f64;
    let f1 = if hits == 0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    RougeScore {
        precision,
        recall,
        f1,
    }
}

/// F1 of [`rouge_lsum_score`].
pub fn rouge_lsum(candidate: &str, reference: &str) -> f64 {
    rouge_lsum_score(candidate, reference).f1
}

/// One line per summary sentence, the layout RougeLSum expects.
pub fn sentences_per_line(text: &str) -> String {
    match Summary::new(text) {
        Ok(s) => s.sentence_texts().join("\n"),
        Err(_) => text.trim().to_string(),
    }
}

/// How a blueprint is flattened before scoring.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlueprintLayout {
    /// One `question answer` line per pair. Whole pairs can move without
    /// penalty; only their content is compared.
    #[default]
    LinePerPair,
    /// All pairs on one line, so pair order affects the LCS.
    SingleLine,
}

/// `question answer` per pair, in plan order.
pub fn linearize_blueprint(blueprint: &Blueprint, layout: BlueprintLayout) -> String {
    let sep = match layout {
        BlueprintLayout::LinePerPair => "\n",
        BlueprintLayout::SingleLine => " ",
    };
    blueprint
        .iter()
        .map(|p| format!("{} {}", p.question, p.answer))
        .collect::<Vec<_>>()
        .join(sep)
}

/// RougeLSum between linearized blueprints, one line per pair.
pub fn blueprint_rouge(predicted: &Blueprint, reference: &Blueprint) -> f64 {
    blueprint_rouge_with(predicted, reference, BlueprintLayout::LinePerPair)
}

pub fn blueprint_rouge_with(predicted: &Blueprint, reference: &Blueprint, layout: BlueprintLayout) -> f64 {
    rouge_lsum(
        &linearize_blueprint(predicted, layout),
        &linearize_blueprint(reference, layout),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::QAPair;

    #[test]
    fn tokenizer() {
        assert_eq!(rouge_tokens("High-performance, 2005!"), ["high", "performance", "2005"]);
    }

    #[test]
    fn trivial_cases() {
        assert_eq!(rouge_lsum("a b c", "a b c"), 1.0);
        assert_eq!(rouge_lsum("a b", "c d"), 0.0);
        assert_eq!(rouge_lsum("", ""), 1.0);
        assert_eq!(rouge_lsum("", "a"), 0.0);
        assert_eq!(rouge_lsum("a", ""), 0.0);
    }

    #[test]
    fn smallest_reference_positions() {
        let r = ["a", "b", "a"];
        let c = ["a"];
        assert_eq!(lcs_positions(&r, &c), [0]);
        let r = ["b", "a", "b"];
        let c = ["a", "b"];
        assert_eq!(lcs_positions(&r, &c), [1, 2]);
    }

    #[test]
    fn hits_are_capped_by_counts() {
        // both reference sentences match the single candidate "a", but the
        // candidate has only one "a" to give
        let s = rouge_lsum_score("a", "a\na");
        assert_eq!(s.precision, 1.0);
        assert_eq!(s.recall, 0.5);
    }

    #[test]
    fn line_per_pair_ignores_pair_order() {
        let b = Blueprint::new(vec![
            QAPair::new("Who built it?", "Ford"),
            QAPair::new("When?", "1965 to 1968"),
        ]);
        let rev = Blueprint::new(b.pairs.iter().rev().cloned().collect());
        assert_eq!(blueprint_rouge(&b, &b), 1.0);
        assert_eq!(blueprint_rouge(&Blueprint::default(), &b), 0.0);
        // each reference line finds its own line in the candidate, so a
        // pure reordering of whole lines keeps full overlap
        assert_eq!(blueprint_rouge(&rev, &b), 1.0);
        assert!(blueprint_rouge_with(&rev, &b, BlueprintLayout::SingleLine) < 1.0);
    }
}
