//! Metrics: QA-F1 informativeness and grounding, entailment faithfulness,
//! RougeLSum for summaries and blueprints, and corpus statistics.

pub mod rouge;
pub mod stats;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clients::{answer_question, batch, entail_prob, ClientError, ModelClients};
use crate::clients::{EntailmentScorer, QuestionAnswerer};
use crate::text::{normalize_answer, split_sentences, TextIndex, TokenBag};
use crate::types::{Blueprint, Document, Summary};

pub use rouge::{blueprint_rouge, blueprint_rouge_with, rouge_lsum, BlueprintLayout};
pub use stats::{dataset_stats, novel_ngrams, DatasetStats, StatsExample};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("blueprint is empty")]
    EmptyBlueprint,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("invalid eval config: {0}")]
    Config(String),
}

/// SQuAD token F1 over normalized answers.
pub fn token_f1(predicted: &str, gold: &str) -> f64 {
    let p = normalize_answer(predicted);
    let g = normalize_answer(gold);
    match (p.is_empty(), g.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let common = TokenBag::from_tokens(&p).overlap(&TokenBag::from_tokens(&g));
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / p.len() as f64;
    let recall = common as f64 / g.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionScore {
    pub question: String,
    pub gold_answer: String,
    pub predicted_answer: String,
    pub f1: f64,
}

/// Ask every blueprint question of `summary_text` and score the answers
/// against the blueprint's. An empty text answers nothing and is not sent
/// to the QA backend.
pub fn qa_based_score(
    summary_text: &str,
    blueprint: &Blueprint,
    qa: &dyn QuestionAnswerer,
) -> Result<(f64, Vec<QuestionScore>), EvalError> {
    if blueprint.is_empty() {
        return Err(EvalError::EmptyBlueprint);
    }
    let blank = summary_text.trim().is_empty();
    let predictions = batch(&blueprint.pairs, |p| {
        if blank {
            Ok(String::new())
        } else {
            answer_question(&p.question, summary_text, qa).map(|r| r.prediction().to_string())
        }
    });
    let mut scores = Vec::with_capacity(blueprint.len());
    for (pair, predicted) in blueprint.iter().zip(predictions) {
        let predicted = predicted?;
        scores.push(QuestionScore {
            question: pair.question.clone(),
            gold_answer: pair.answer.clone(),
            f1: token_f1(&predicted, &pair.answer),
            predicted_answer: predicted,
        });
    }
    let mean = scores.iter().map(|s| s.f1).sum::<f64>() / scores.len() as f64;
    Ok((mean, scores))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaithfulnessConfig {
    /// Longest premise, in characters, sent in one entailment request.
    pub max_premise_chars: usize,
    pub threshold: f64,
}

impl Default for FaithfulnessConfig {
    fn default() -> Self {
        Self {
            max_premise_chars: 8192,
            threshold: 0.5,
        }
    }
}

impl FaithfulnessConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.max_premise_chars == 0 {
            return Err(EvalError::Config("max_premise_chars must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(EvalError::Config(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        Ok(())
    }
}

/// Split `text` into chunks of at most `max_chars` characters, breaking at
/// sentence boundaries where possible. Sentences longer than the budget
/// are cut at the budget.
pub fn premise_chunks(text: &str, max_chars: usize) -> Vec<String> {
    let max_chars = max_chars.max(1);
    let index = TextIndex::new(text);
    if index.char_len() <= max_chars {
        return vec![text.to_string()];
    }
    let mut pieces: Vec<&str> = Vec::new();
    for span in split_sentences(text) {
        let s = index.slice(text, span).expect("sentence spans are valid");
        let mut rest = s;
        while rest.chars().count() > max_chars {
            let cut = rest.char_indices().nth(max_chars).map_or(rest.len(), |(b, _)| b);
            pieces.push(&rest[..cut]);
            rest = &rest[cut..];
        }
        if !rest.is_empty() {
            pieces.push(rest);
        }
    }
    let mut chunks: Vec<String> = Vec::new();
    let mut current = String::new();
    for piece in pieces {
        let extra = piece.chars().count() + usize::from(!current.is_empty());
        if !current.is_empty() && current.chars().count() + extra > max_chars {
            chunks.push(std::mem::take(&mut current));
        }
        if !current.is_empty() {
            current.push(' ');
        }
        current.push_str(piece);
    }
    if !current.is_empty() {
        chunks.push(current);
    }
    chunks
}

/// Mean over summary sentences of `1[max_chunk E(chunk, sentence) > threshold]`.
pub fn faithfulness(
    document: &Document,
    summary: &Summary,
    nli: &dyn EntailmentScorer,
    config: &FaithfulnessConfig,
) -> Result<(f64, Vec<bool>), EvalError> {
    config.validate()?;
    let chunks = premise_chunks(&document.concatenated_sources(), config.max_premise_chars);
    let sentences = summary.sentence_texts();
    let jobs: Vec<(usize, &str)> = (0..sentences.len())
        .flat_map(|i| chunks.iter().map(move |c| (i, c.as_str())))
        .collect();
    let probs = batch(&jobs, |&(i, chunk)| entail_prob(chunk, sentences[i], nli));
    let mut best = vec![0.0f64; sentences.len()];
    for (&(i, _), p) in jobs.iter().zip(probs) {
        best[i] = best[i].max(p?);
    }
    let labels: Vec<bool> = best.iter().map(|&p| p > config.threshold).collect();
    let score = labels.iter().filter(|&&l| l).count() as f64 / labels.len() as f64;
    Ok((score, labels))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub faithfulness: FaithfulnessConfig,
    pub blueprint_layout: BlueprintLayout,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            faithfulness: FaithfulnessConfig::default(),
            blueprint_layout: BlueprintLayout::LinePerPair,
        }
    }
}

/// Everything needed to score one prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalInput {
    pub example_id: String,
    pub document: Document,
    pub predicted_summary: String,
    pub predicted_blueprint: Option<Blueprint>,
    pub reference_summary: String,
    pub reference_blueprint: Blueprint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub example_id: String,
    /// `None` when the reference blueprint is empty.
    pub informativeness: Option<f64>,
    /// `None` when no non-empty predicted blueprint is given.
    pub grounding: Option<f64>,
    pub faithfulness: f64,
    pub faithfulness_labels: Vec<bool>,
    pub rouge_lsum_summary: f64,
    pub rouge_lsum_blueprint: Option<f64>,
    pub per_question: Vec<QuestionScore>,
    pub grounding_per_question: Vec<QuestionScore>,
}

pub fn evaluate_example(
    input: &EvalInput,
    clients: &ModelClients,
    config: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    let (informativeness, per_question) = if input.reference_blueprint.is_empty() {
        (None, Vec::new())
    } else {
        let (s, q) = qa_based_score(&input.predicted_summary, &input.reference_blueprint, clients.qa.as_ref())?;
        (Some(s), q)
    };
    let (grounding, grounding_per_question) = match &input.predicted_blueprint {
        Some(b) if !b.is_empty() => {
            let (s, q) = qa_based_score(&input.predicted_summary, b, clients.qa.as_ref())?;
            (Some(s), q)
        }
        _ => (None, Vec::new()),
    };
    let (faithfulness, faithfulness_labels) = match Summary::new(input.predicted_summary.as_str()) {
        Ok(summary) => self::faithfulness(&input.document, &summary, clients.nli.as_ref(), &config.faithfulness)?,
        Err(_) => (0.0, Vec::new()),
    };
    let rouge_lsum_summary = rouge_lsum(
        &rouge::sentences_per_line(&input.predicted_summary),
        &rouge::sentences_per_line(&input.reference_summary),
    );
    let rouge_lsum_blueprint = input
        .predicted_blueprint
        .as_ref()
        .map(|b| blueprint_rouge_with(b, &input.reference_blueprint, config.blueprint_layout));
    Ok(EvalReport {
        example_id: input.example_id.clone(),
        informativeness,
        grounding,
        faithfulness,
        faithfulness_labels,
        rouge_lsum_summary,
        rouge_lsum_blueprint,
        per_question,
        grounding_per_question,
    })
}

/// Corpus means. Per-example scores are averaged over the examples that
/// have them; the `_pooled` variants average over all questions at once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalAggregate {
    pub examples: usize,
    pub informativeness: Option<f64>,
    pub informativeness_pooled: Option<f64>,
    pub grounding: Option<f64>,
    pub grounding_pooled: Option<f64>,
    pub faithfulness: Option<f64>,
    pub rouge_lsum_summary: Option<f64>,
    pub rouge_lsum_blueprint: Option<f64>,
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn aggregate(reports: &[EvalReport]) -> EvalAggregate {
    EvalAggregate {
        examples: reports.len(),
        informativeness: mean(reports.iter().filter_map(|r| r.informativeness)),
        informativeness_pooled: mean(reports.iter().flat_map(|r| r.per_question.iter().map(|q| q.f1))),
        grounding: mean(reports.iter().filter_map(|r| r.grounding)),
        grounding_pooled: mean(
            reports
                .iter()
                .flat_map(|r| r.grounding_per_question.iter().map(|q| q.f1)),
        ),
        faithfulness: mean(reports.iter().map(|r| r.faithfulness)),
        rouge_lsum_summary: mean(reports.iter().map(|r| r.rouge_lsum_summary)),
        rouge_lsum_blueprint: mean(reports.iter().filter_map(|r| r.rouge_lsum_blueprint)),
    }
}
