//! Blueprint annotation: overgenerate QA pairs from answer candidates, then
//! filter them (round-trip consistency, Rheme, Coverage) and sort.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::{extract_candidates, heuristic_backend, AnswerCandidate, CandidateError};
use crate::clients::{answer_question, batch, generate_question, ClientError, ModelClients};
use crate::clients::{QuestionAnswerer, QuestionGenerator};
use crate::eval::token_f1;
use crate::propsplit::{split_summary, SplitConfig};
use crate::text::{bag_tokens, normalize_answer, TextIndex, TokenBag};
use crate::types::{
    AnnotatedExample, Blueprint, CharSpan, CoreError, Document, Proposition, QAPair,
    SentenceBlueprint, Summary,
};

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error(transparent)]
    Candidates(#[from] CandidateError),
    #[error("round-trip check failed: {0}")]
    RoundTrip(#[source] ClientError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("invalid annotate config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundtripMode {
    NormalizedExact,
    /// Keep a pair when token F1 between prediction and answer is at least τ.
    F1Threshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageUnit {
    QuestionPlusAnswerTokens,
    AnswerTokensOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortMode {
    FirstOccurrence,
    AnswerSpan,
    Random(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotateConfig {
    pub roundtrip_mode: RoundtripMode,
    pub coverage_unit: CoverageUnit,
    pub sort_mode: SortMode,
    pub enable_rheme: bool,
    pub enable_coverage: bool,
}

impl Default for AnnotateConfig {
    fn default() -> Self {
        Self {
            roundtrip_mode: RoundtripMode::NormalizedExact,
            coverage_unit: CoverageUnit::QuestionPlusAnswerTokens,
            sort_mode: SortMode::FirstOccurrence,
            enable_rheme: true,
            enable_coverage: true,
        }
    }
}

impl AnnotateConfig {
    pub fn validate(&self) -> Result<(), AnnotateError> {
        if let RoundtripMode::F1Threshold(tau) = self.roundtrip_mode {
            if !(tau > 0.0 && tau <= 1.0) {
                return Err(AnnotateError::Config(format!(
                    "round-trip F1 threshold {tau} outside (0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// One question per candidate, generated with the whole summary as context.
/// Candidates whose QG call fails are dropped with a warning.
pub fn overgenerate(
    summary: &Summary,
    cands: &[AnswerCandidate],
    qg: &dyn QuestionGenerator,
) -> Vec<QAPair> {
    let results = batch(cands, |c| generate_question(&c.text, summary.text(), qg));
    cands
        .iter()
        .zip(results)
        .filter_map(|(c, r)| match r {
            Ok(q) => Some(QAPair::new(q, c.text.clone()).with_span(c.span)),
            Err(e) => {
                log::warn!(
                    "dropping candidate `{}` at {}..{}: {e}",
                    c.text,
                    c.span.start,
                    c.span.end
                );
                None
            }
        })
        .collect()
}

fn answers_match(predicted: &str, answer: &str, mode: RoundtripMode) -> bool {
    match mode {
        RoundtripMode::NormalizedExact => normalize_answer(predicted) == normalize_answer(answer),
        RoundtripMode::F1Threshold(tau) => token_f1(predicted, answer) >= tau,
    }
}

/// Keep pairs whose question, answered over the summary, gives back the
/// pair's answer. Any QA failure fails the whole call.
pub fn roundtrip_filter(
    pairs: &[QAPair],
    summary: &Summary,
    qa: &dyn QuestionAnswerer,
    config: &AnnotateConfig,
) -> Result<Vec<QAPair>, ClientError> {
    let responses = batch(pairs, |p| answer_question(&p.question, summary.text(), qa));
    let mut kept = Vec::new();
    for (pair, response) in pairs.iter().zip(responses) {
        let response = response?;
        if !response.no_answer && answers_match(&response.answer, &pair.answer, config.roundtrip_mode)
        {
            kept.push(pair.clone());
        } else {
            log::debug!(
                "round-trip rejects `{}`: expected `{}`, got `{}`",
                pair.question,
                pair.answer,
                response.prediction()
            );
        }
    }
    Ok(kept)
}

/// At most one pair per proposition: the one whose answer ends furthest
/// right, then the longest answer, then the earliest pair.
pub fn rheme_select(pairs: &[QAPair], propositions: &[Proposition]) -> Vec<QAPair> {
    propositions
        .iter()
        .filter_map(|prop| {
            pairs
                .iter()
                .enumerate()
                .filter_map(|(i, p)| p.answer_span.filter(|s| prop.span.contains(s)).map(|s| (i, p, s)))
                .max_by(|(i, a, sa), (j, b, sb)| {
                    sa.end
                        .cmp(&sb.end)
                        .then(a.answer.chars().count().cmp(&b.answer.chars().count()))
                        .then(j.cmp(i))
                })
                .map(|(_, p, _)| p.clone())
        })
        .collect()
}

fn pair_tokens(pair: &QAPair, unit: CoverageUnit) -> TokenBag {
    match unit {
        CoverageUnit::QuestionPlusAnswerTokens => {
            bag_tokens(&format!("{} {}", pair.question, pair.answer))
        }
        CoverageUnit::AnswerTokensOnly => bag_tokens(&pair.answer),
    }
}

/// Greedy lexical coverage of the summary's token bag. Returns the picked
/// pairs in their input order.
pub fn coverage_select(pairs: &[QAPair], summary: &Summary, config: &AnnotateConfig) -> Vec<QAPair> {
    let mut residual = bag_tokens(summary.text());
    let bags: Vec<TokenBag> = pairs
        .iter()
        .map(|p| pair_tokens(p, config.coverage_unit))
        .collect();
    let mut picked = vec![false; pairs.len()];
    while !residual.is_empty() {
        let best = (0..pairs.len())
            .filter(|&i| !picked[i])
            .map(|i| (i, bags[i].overlap(&residual)))
            .max_by(|&(i, oi), &(j, oj)| {
                let si = pairs[i].answer_span.map_or(usize::MAX, |s| s.start);
                let sj = pairs[j].answer_span.map_or(usize::MAX, |s| s.start);
                oi.cmp(&oj).then(sj.cmp(&si)).then(j.cmp(&i))
            });
        match best {
            Some((i, overlap)) if overlap > 0 => {
                residual.remove_overlap(&bags[i]);
                picked[i] = true;
            }
            _ => break,
        }
    }
    pairs
        .iter()
        .zip(picked)
        .filter(|(_, keep)| *keep)
        .map(|(p, _)| p.clone())
        .collect()
}

/// Character offset of the first occurrence of `needle` in `text` that
/// starts and ends on token boundaries. Case-sensitive.
pub fn find_token_occurrence(text: &str, needle: &str) -> Option<usize> {
    if needle.is_empty() {
        return None;
    }
    let index = TextIndex::new(text);
    let is_word = |c: Option<char>| c.is_some_and(char::is_alphanumeric);
    text.match_indices(needle).find_map(|(b, m)| {
        let before = text[..b].chars().next_back();
        let after = text[b + m.len()..].chars().next();
        let inner_first = m.chars().next();
        let inner_last = m.chars().next_back();
        let left_ok = !(is_word(before) && is_word(inner_first));
        let right_ok = !(is_word(after) && is_word(inner_last));
        (left_ok && right_ok).then(|| index.char_of(b)).flatten()
    })
}

fn first_occurrence_key(pair: &QAPair, summary: &Summary) -> usize {
    find_token_occurrence(summary.text(), &pair.answer)
        .or(pair.answer_span.map(|s| s.start))
        .unwrap_or(usize::MAX)
}

/// Order pairs into a plan. Every output pair carries `sort_key`, the first
/// whole-token occurrence of its answer (falling back to its span start).
pub fn sort_blueprint(pairs: &[QAPair], summary: &Summary, config: &AnnotateConfig) -> Blueprint {
    let mut pairs: Vec<QAPair> = pairs
        .iter()
        .map(|p| {
            let mut p = p.clone();
            let key = first_occurrence_key(&p, summary);
            p.sort_key = (key != usize::MAX).then_some(key);
            p
        })
        .collect();
    match config.sort_mode {
        SortMode::FirstOccurrence => pairs.sort_by_key(|p| p.sort_key.unwrap_or(usize::MAX)),
        SortMode::AnswerSpan => pairs.sort_by_key(|p| {
            p.answer_span
                .map(|s| s.start)
                .or(p.sort_key)
                .unwrap_or(usize::MAX)
        }),
        SortMode::Random(seed) => pairs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed)),
    }
    Blueprint::new(pairs)
}

fn anchor(pair: &QAPair, summary: &Summary) -> Option<usize> {
    pair.answer_span
        .map(|s| s.start)
        .or(pair.sort_key)
        .or_else(|| find_token_occurrence(summary.text(), &pair.answer))
}

/// Split the plan per summary sentence by where each answer sits. Pairs
/// that cannot be located go to the first sentence.
pub fn align_to_sentences(blueprint: &Blueprint, summary: &Summary) -> Vec<SentenceBlueprint> {
    let mut out: Vec<SentenceBlueprint> = (0..summary.len())
        .map(|i| SentenceBlueprint {
            sentence_index: i,
            pairs: Vec::new(),
        })
        .collect();
    for pair in blueprint.iter() {
        let sentence = anchor(pair, summary)
            .map(|a| {
                summary
                    .sentences()
                    .iter()
                    .rposition(|s| s.start <= a)
                    .unwrap_or(0)
            })
            .unwrap_or(0);
        out[sentence].pairs.push(pair.clone());
    }
    out
}

/// Run the whole chain on one example. `override_propositions` replaces
/// the rule-based proposition split.
pub fn annotate_example(
    document: &Document,
    summary: &Summary,
    clients: &ModelClients,
    split_config: &SplitConfig,
    config: &AnnotateConfig,
    override_propositions: Option<&[CharSpan]>,
) -> Result<AnnotatedExample, AnnotateError> {
    config.validate()?;
    let propositions = match override_propositions {
        Some(spans) => spans
            .iter()
            .map(|s| Proposition::from_span(summary.text(), *s))
            .collect::<Result<Vec<_>, _>>()?,
        None => split_summary(summary, split_config),
    };
    let cands = match extract_candidates(summary, clients.candidates.as_ref()) {
        Ok(c) => c,
        Err(CandidateError::BackendUnavailable(e)) => {
            log::warn!("candidate backend unavailable ({e}); using heuristic candidates");
            let mut c = heuristic_backend(summary);
            c.sort_by_key(|c| (c.span.start, c.span.end));
            c.dedup_by_key(|c| c.span);
            c
        }
        Err(e) => return Err(e.into()),
    };
    let pairs = overgenerate(summary, &cands, clients.qg.as_ref());
    let mut pairs = roundtrip_filter(&pairs, summary, clients.qa.as_ref(), config)
        .map_err(AnnotateError::RoundTrip)?;
    if config.enable_rheme {
        pairs = rheme_select(&pairs, &propositions);
    }
    if config.enable_coverage {
        pairs = coverage_select(&pairs, summary, config);
    }
    let blueprint = sort_blueprint(&pairs, summary, config);
    let sentence_blueprints = align_to_sentences(&blueprint, summary);
    Ok(AnnotatedExample {
        document: document.clone(),
        summary: summary.clone(),
        blueprint,
        sentence_blueprints,
        propositions,
    })
}
