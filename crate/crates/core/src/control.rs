//! Controllability transforms over predicted blueprints: dropping pairs the
//! input cannot answer, keeping one pair per sentence, and building decoder
//! prompts that force an edited plan.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clients::{answer_question, batch, ClientError, QuestionAnswerer};
use crate::eval::token_f1;
use crate::formats::{answer_plan_body, e2e_prompt, iterative_prompt, FormatConfig};
use crate::types::{Blueprint, Document, QAPair, SentenceBlueprint};

#[derive(Debug, Error)]
pub enum ControlError {
    #[error("unsupported variant `{0}` (expected e2e, multitask or iterative)")]
    UnsupportedVariant(String),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("invalid control config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Q1Selection {
    FirstInPlanOrder,
    LongestAnswer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlConfig {
    pub drop_threshold: f64,
    pub q1_selection: Q1Selection,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            drop_threshold: 0.5,
            q1_selection: Q1Selection::FirstInPlanOrder,
        }
    }
}

impl ControlConfig {
    pub fn validate(&self) -> Result<(), ControlError> {
        if !(0.0..=1.0).contains(&self.drop_threshold) {
            return Err(ControlError::Config(format!(
                "drop threshold {} outside [0, 1]",
                self.drop_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropOutcome {
    pub blueprint: Blueprint,
    /// Pairs kept without a check because they have no question.
    pub unchecked: usize,
}

/// Keep pairs whose question, asked against the input sources, comes back
/// with an answer scoring at least `drop_threshold` token F1. Pairs
/// without a question cannot be checked; they are kept and counted.
pub fn drop_unanswerable(
    blueprint: &Blueprint,
    document: &Document,
    qa: &dyn QuestionAnswerer,
    config: &ControlConfig,
) -> Result<DropOutcome, ClientError> {
    let context = document.concatenated_sources();
    let results = batch(&blueprint.pairs, |p| {
        if p.question.trim().is_empty() {
            Ok(None)
        } else {
            answer_question(&p.question, &context, qa).map(Some)
        }
    });
    let mut kept = Vec::new();
    let mut unchecked = 0;
    for (pair, r) in blueprint.iter().zip(results) {
        match r? {
            None => {
                unchecked += 1;
                kept.push(pair.clone());
            }
            Some(resp) => {
                if !resp.no_answer && token_f1(&resp.answer, &pair.answer) >= config.drop_threshold {
                    kept.push(pair.clone());
                }
            }
        }
    }
    if unchecked > 0 {
        log::warn!("{unchecked} answer-only pair(s) kept without an answerability check");
    }
    Ok(DropOutcome {
        blueprint: Blueprint::new(kept),
        unchecked,
    })
}

/// Reduce every non-empty sentence plan to a single pair.
pub fn truncate_q1(sentence_blueprints: &[SentenceBlueprint], config: &ControlConfig) -> Vec<SentenceBlueprint> {
    sentence_blueprints
        .iter()
        .map(|sb| {
            let pick = match config.q1_selection {
                Q1Selection::FirstInPlanOrder => sb.pairs.first(),
                Q1Selection::LongestAnswer => sb
                    .pairs
                    .iter()
                    .rev()
                    .max_by_key(|p| p.answer.chars().count()),
            };
            SentenceBlueprint {
                sentence_index: sb.sentence_index,
                pairs: pick.cloned().into_iter().collect(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptVariant {
    E2e,
    Multitask,
    Iterative,
}

impl FromStr for PromptVariant {
    type Err = ControlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "e2e" => Ok(Self::E2e),
            "multitask" => Ok(Self::Multitask),
            "iterative" => Ok(Self::Iterative),
            other => Err(ControlError::UnsupportedVariant(other.to_string())),
        }
    }
}

/// Model input plus the forced decoder prefix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditPrompt {
    pub input: String,
    pub prompt: String,
    pub step_index: Option<usize>,
}

/// Decoder prompt forcing `edited` as the plan. For the iterative variant
/// the whole edit becomes the first sentence's plan; use
/// [`iterative_edit_prompts`] for per-sentence plans.
pub fn apply_plan_edit(
    document: &Document,
    edited: &Blueprint,
    variant: PromptVariant,
    config: &FormatConfig,
) -> EditPrompt {
    let input = document.input_text();
    match variant {
        PromptVariant::E2e => EditPrompt {
            input,
            prompt: e2e_prompt(&edited.pairs, config),
            step_index: None,
        },
        PromptVariant::Multitask => {
            let answers = answer_plan_body(&edited.pairs, config);
            let mut prompt = config.plan_marker.clone();
            if !answers.is_empty() {
                prompt.push(' ');
                prompt.push_str(&answers);
            }
            prompt.push(' ');
            prompt.push_str(&config.summary_marker);
            EditPrompt {
                input: format!("{} {}", config.gen_summary_prefix, input),
                prompt,
                step_index: None,
            }
        }
        PromptVariant::Iterative => EditPrompt {
            input,
            prompt: iterative_prompt("", &edited.pairs, config),
            step_index: Some(0),
        },
    }
}

/// One prompt per sentence plan; step `i` gets sentences `0..i` as context.
pub fn iterative_edit_prompts(
    document: &Document,
    sentences: &[&str],
    plans: &[SentenceBlueprint],
    config: &FormatConfig,
) -> Vec<EditPrompt> {
    let input = document.input_text();
    plans
        .iter()
        .enumerate()
        .map(|(i, sb)| {
            let context = sentences[..i.min(sentences.len())].join(" ");
            EditPrompt {
                input: input.clone(),
                prompt: iterative_prompt(&context, &sb.pairs, config),
                step_index: Some(i),
            }
        })
        .collect()
}

/// Pairs as `{question, answer}` for plan-edit files.
pub fn pairs_without_anchors(pairs: &[QAPair]) -> Vec<QAPair> {
    pairs
        .iter()
        .map(|p| QAPair::new(p.question.clone(), p.answer.clone()))
        .collect()
}
