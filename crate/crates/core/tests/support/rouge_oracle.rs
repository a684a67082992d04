//! Brute-force RougeLSum reference for small inputs.
//!
//! The longest common subsequence of each sentence pair is found by trying
//! every subset of reference positions, so the result does not depend on
//! any dynamic-programming table. Only usable for short sentences.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

fn sentences(text: &str) -> Vec<Vec<&str>> {
    text.split('\n')
        .map(|s| s.split_whitespace().collect::<Vec<_>>())
        .filter(|s| !s.is_empty())
        .collect()
}

fn is_subsequence(needle: &[&str], hay: &[&str]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|n| it.any(|h| h == n))
}

/// Reference positions of the longest common subsequence with the
/// lexicographically smallest position list.
pub fn brute_lcs(r: &[&str], c: &[&str]) -> Vec<usize> {
    assert!(r.len() <= 16, "brute force only for short sentences");
    let mut best: Vec<usize> = Vec::new();
    for mask in 0u32..(1 << r.len()) {
        let pos: Vec<usize> = (0..r.len()).filter(|i| mask & (1 << i) != 0).collect();
        if pos.len() < best.len() {
            continue;
        }
        let toks: Vec<&str> = pos.iter().map(|&i| r[i]).collect();
        if !is_subsequence(&toks, c) {
            continue;
        }
        if pos.len() > best.len() || pos < best {
            best = pos;
        }
    }
    best
}

/// F1 for whitespace-tokenized, lowercase inputs.
pub fn brute_rouge_lsum(candidate: &str, reference: &str) -> f64 {
    let cand = sentences(candidate);
    let refs = sentences(reference);
    let n: usize = cand.iter().map(Vec::len).sum();
    let m: usize = refs.iter().map(Vec::len).sum();
    if n == 0 && m == 0 {
        return 1.0;
    }
    if n == 0 || m == 0 {
        return 0.0;
    }
    let mut cc: HashMap<&str, usize> = HashMap::new();
    for t in cand.iter().flatten() {
        *cc.entry(t).or_default() += 1;
    }
    let mut rc: HashMap<&str, usize> = HashMap::new();
    for t in refs.iter().flatten() {
        *rc.entry(t).or_default() += 1;
    }
    let mut hits = 0.0;
    for r in &refs {
        let union: BTreeSet<usize> = cand.iter().flat_map(|c| brute_lcs(r, c)).collect();
        for p in union {
            let t = r[p];
            let (a, b) = (cc.get(t).copied().unwrap_or(0), rc.get(t).copied().unwrap_or(0));
            if a > 0 && b > 0 {
                hits += 1.0;
                cc.insert(t, a - 1);
                rc.insert(t, b - 1);
            }
        }
    }
    if hits == 0.0 {
        return 0.0;
    }
    let p = hits / n as f64;
    let r = hits / m as f64;
    2.0 * p * r / (p + r)
}

/// Every text of 1..=`max_sentences` newline-separated sentences, each of
/// 0..=`max_tokens` tokens drawn from `alphabet`.
pub fn all_texts(max_sentences: usize, max_tokens: usize, alphabet: &[&str]) -> Vec<String> {
    let mut sents: Vec<String> = Vec::new();
    for len in 0..=max_tokens {
        let total = alphabet.len().pow(len as u32);
        for mut code in 0..total {
            let mut toks = Vec::with_capacity(len);
            for _ in 0..len {
                toks.push(alphabet[code % alphabet.len()]);
                code /= alphabet.len();
            }
            sents.push(toks.join(" "));
        }
    }
    let mut out: Vec<String> = sents.clone();
    let mut layer: Vec<String> = sents.clone();
    for _ in 1..max_sentences {
        layer = layer
            .iter()
            .flat_map(|t| sents.iter().map(move |s| format!("{t}\n{s}")))
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}
