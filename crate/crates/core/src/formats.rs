//! Target text layouts for the three blueprint model variants, and their
//! parsers.
//!
//! A target is a run of segments joined by single spaces. Each segment is a
//! marker followed by `" " + body` when the body is non-empty:
//!
//! ```text
//! e2e:        Plan: a1; q1; a2; q2 Summary: s
//! multitask:  Plan: a1; a2 Summary: s          Plan: a1; a2 Questions: q1; q2
//! iterative:  Context: s1 Plan: a2; q2 Next Sentence: s2
//! ```
//!
//! Content that contains a marker is escaped by adding one colon after the
//! marker (`Plan:` becomes `Plan::`); a marker in the layout is never
//! directly followed by a colon. The pair separator is not escaped, so
//! fields must not contain it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{AnnotatedExample, Blueprint, QAPair};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("missing `{0}` marker")]
    MissingMarker(String),
    #[error("plan has an odd number of fields ({0})")]
    OddFieldCount(usize),
    #[error("{answers} answers but {questions} questions")]
    LengthMismatch { answers: usize, questions: usize },
    #[error("invalid format config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanOrder {
    /// `a1; q1; a2; q2`
    AnswerQuestion,
    /// `q1; a1; q2; a2`
    QuestionAnswer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FormatConfig {
    pub plan_marker: String,
    pub summary_marker: String,
    pub questions_marker: String,
    pub context_marker: String,
    pub next_sentence_marker: String,
    pub gen_summary_prefix: String,
    pub gen_questions_prefix: String,
    pub pair_separator: String,
    pub end_plan_token: String,
    pub end_sentence_token: String,
    pub plan_order: PlanOrder,
}

impl Default for FormatConfig {
    fn default() -> Self {
        Self {
            plan_marker: "Plan:".into(),
            summary_marker: "Summary:".into(),
            questions_marker: "Questions:".into(),
            context_marker: "Context:".into(),
            next_sentence_marker: "Next Sentence:".into(),
            gen_summary_prefix: "Generate Summary:".into(),
            gen_questions_prefix: "Generate Questions:".into(),
            pair_separator: "; ".into(),
            end_plan_token: "[END_PLAN]".into(),
            end_sentence_token: "[END]".into(),
            plan_order: PlanOrder::AnswerQuestion,
        }
    }
}

impl FormatConfig {
    /// Markers that delimit target segments.
    pub fn target_markers(&self) -> [&str; 5] {
        [
            &self.plan_marker,
            &self.summary_marker,
            &self.questions_marker,
            &self.context_marker,
            &self.next_sentence_marker,
        ]
    }

    /// Target markers must be distinct, end in a colon, start with a
    /// non-colon and not contain one another. The generation prefixes only
    /// appear in inputs and are not checked against them.
    pub fn validate(&self) -> Result<(), FormatError> {
        let markers = self.target_markers();
        for (i, m) in markers.iter().enumerate() {
            if !m.ends_with(':') || m.len() < 2 || m.starts_with(':') {
                return Err(FormatError::Config(format!(
                    "marker `{m}` must end in `:` and start with another character"
                )));
            }
            for (j, other) in markers.iter().enumerate() {
                if i != j && other.contains(m) {
                    return Err(FormatError::Config(format!("marker `{m}` occurs inside `{other}`")));
                }
            }
        }
        if self.pair_separator.is_empty() {
            return Err(FormatError::Config("empty pair separator".into()));
        }
        if markers.iter().any(|m| m.contains(self.pair_separator.as_str())) {
            return Err(FormatError::Config("pair separator occurs inside a marker".into()));
        }
        if self.end_plan_token.is_empty() || self.end_sentence_token.is_empty() {
            return Err(FormatError::Config("empty end token".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetVariant {
    E2e,
    MultitaskSummary,
    MultitaskQuestions,
    Iterative,
}

/// One training or inference record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetInstance {
    pub input_text: String,
    pub target_text: String,
    /// Characters at the start of `target_text` excluded from the loss.
    pub loss_mask_prefix_len: usize,
    pub variant: TargetVariant,
    pub step_index: Option<usize>,
}

impl TargetInstance {
    pub fn into_record(self, example_id: impl Into<String>) -> TargetRecord {
        TargetRecord {
            input: self.input_text,
            target: self.target_text,
            loss_mask_prefix_len: self.loss_mask_prefix_len,
            variant: self.variant,
            step_index: self.step_index,
            example_id: example_id.into(),
        }
    }
}

/// JSONL line layout of a [`TargetInstance`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetRecord {
    pub input: String,
    pub target: String,
    pub loss_mask_prefix_len: usize,
    pub variant: TargetVariant,
    pub step_index: Option<usize>,
    pub example_id: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseMode {
    Strict,
    #[default]
    Tolerant,
}

/// Recoverable irregularities met while parsing a decode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ParseFlag {
    /// The plan ended with a field that has no partner.
    OddFieldCount { fields: usize },
    /// Multitask decodes disagree on the number of pairs.
    LengthMismatch { answers: usize, questions: usize },
    /// The questions decode was empty; pairs carry empty questions.
    AnswersOnly,
    EmptySentence,
    MissingTerminator,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parsed {
    pub blueprint: Blueprint,
    pub summary: String,
    pub flags: Vec<ParseFlag>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterativeStep {
    pub pairs: Vec<QAPair>,
    pub sentence: String,
    pub is_end: bool,
    pub flags: Vec<ParseFlag>,
}

/// Add one colon after every marker occurrence in `text`.
pub fn escape(text: &str, config: &FormatConfig) -> String {
    let markers = config.target_markers();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < text.len() {
        if let Some(m) = markers.iter().find(|m| text[i..].starts_with(**m)) {
            out.push_str(m);
            out.push(':');
            i += m.len();
        } else {
            let c = text[i..].chars().next().expect("inside text");
            out.push(c);
            i += c.len_utf8();
        }
    }
    out
}

/// Inverse of [`escape`].
pub fn unescape(text: &str, config: &FormatConfig) -> String {
    let markers = config.target_markers();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < text.len() {
        if let Some(m) = markers.iter().find(|m| text[i..].starts_with(**m)) {
            out.push_str(m);
            i += m.len();
            if text[i..].starts_with(':') {
                i += 1;
            }
        } else {
            let c = text[i..].chars().next().expect("inside text");
            out.push(c);
            i += c.len_utf8();
        }
    }
    out
}

/// Byte offset of the first layout (unescaped) occurrence of `marker` at
/// or after `from`.
fn find_marker(text: &str, marker: &str, from: usize) -> Option<usize> {
    let mut at = from;
    while let Some(rel) = text[at..].find(marker) {
        let pos = at + rel;
        if !text[pos + marker.len()..].starts_with(':') {
            return Some(pos);
        }
        at = pos + marker.len();
    }
    None
}

fn find_last_marker(text: &str, marker: &str) -> Option<usize> {
    let mut last = None;
    let mut at = 0;
    while let Some(pos) = find_marker(text, marker, at) {
        last = Some(pos);
        at = pos + marker.len();
    }
    last
}

/// Segment body between byte offsets: the layout space after the marker
/// and before the next marker are removed.
fn body(text: &str, start: usize, end: usize, trailing_space: bool) -> &str {
    let mut s = &text[start..end];
    s = s.strip_prefix(' ').unwrap_or(s);
    if trailing_space {
        s = s.strip_suffix(' ').unwrap_or(s);
    }
    s
}

fn push_segment(out: &mut String, marker: &str, body: &str) {
    if !out.is_empty() {
        out.push(' ');
    }
    out.push_str(marker);
    if !body.is_empty() {
        out.push(' ');
        out.push_str(body);
    }
}

fn join_fields<'a>(fields: impl IntoIterator<Item = &'a str>, config: &FormatConfig) -> String {
    fields
        .into_iter()
        .map(|f| escape(f, config))
        .collect::<Vec<_>>()
        .join(&config.pair_separator)
}

fn split_fields(body: &str, config: &FormatConfig) -> Vec<String> {
    if body.is_empty() {
        return Vec::new();
    }
    body.split(config.pair_separator.as_str())
        .map(|f| unescape(f, config))
        .collect()
}

/// Plan body with both questions and answers, in `plan_order`.
pub fn plan_body(pairs: &[QAPair], config: &FormatConfig) -> String {
    join_fields(
        pairs.iter().flat_map(|p| match config.plan_order {
            PlanOrder::AnswerQuestion => [p.answer.as_str(), p.question.as_str()],
            PlanOrder::QuestionAnswer => [p.question.as_str(), p.answer.as_str()],
        }),
        config,
    )
}

/// Answers-only plan body.
pub fn answer_plan_body(pairs: &[QAPair], config: &FormatConfig) -> String {
    join_fields(pairs.iter().map(|p| p.answer.as_str()), config)
}

fn pairs_from_fields(
    fields: Vec<String>,
    config: &FormatConfig,
    mode: ParseMode,
    flags: &mut Vec<ParseFlag>,
) -> Result<Vec<QAPair>, FormatError> {
    let n = fields.len();
    if n % 2 == 1 {
        if mode == ParseMode::Strict {
            return Err(FormatError::OddFieldCount(n));
        }
        flags.push(ParseFlag::OddFieldCount { fields: n });
    }
    let mut it = fields.into_iter();
    let mut pairs = Vec::with_capacity(n.div_ceil(2));
    while let Some(first) = it.next() {
        let second = it.next().unwrap_or_default();
        let (answer, question) = match config.plan_order {
            PlanOrder::AnswerQuestion => (first, second),
            PlanOrder::QuestionAnswer => (second, first),
        };
        pairs.push(QAPair::new(question, answer));
    }
    Ok(pairs)
}

/// `Plan: <pairs> Summary:` with no summary body; the prompt that forces a
/// plan on the e2e decoder.
pub fn e2e_prompt(pairs: &[QAPair], config: &FormatConfig) -> String {
    let mut out = String::new();
    push_segment(&mut out, &config.plan_marker, &plan_body(pairs, config));
    push_segment(&mut out, &config.summary_marker, "");
    out
}

pub fn serialize_e2e(example: &AnnotatedExample, config: &FormatConfig) -> TargetInstance {
    let mut target = String::new();
    push_segment(&mut target, &config.plan_marker, &plan_body(&example.blueprint.pairs, config));
    push_segment(
        &mut target,
        &config.summary_marker,
        &escape(example.summary.text(), config),
    );
    TargetInstance {
        input_text: example.document.input_text(),
        target_text: target,
        loss_mask_prefix_len: 0,
        variant: TargetVariant::E2e,
        step_index: None,
    }
}

/// Plan and text segments of a decode: `(plan_body, rest_body)`.
fn split_plan_and<'a>(
    text: &'a str,
    second: &str,
    config: &FormatConfig,
) -> Result<(&'a str, &'a str), FormatError> {
    let plan = find_marker(text, &config.plan_marker, 0)
        .ok_or_else(|| FormatError::MissingMarker(config.plan_marker.clone()))?;
    let plan_end = plan + config.plan_marker.len();
    let next = find_marker(text, second, plan_end)
        .ok_or_else(|| FormatError::MissingMarker(second.to_string()))?;
    Ok((
        body(text, plan_end, next, true),
        body(text, next + second.len(), text.len(), false),
    ))
}

pub fn parse_e2e(text: &str, config: &FormatConfig, mode: ParseMode) -> Result<Parsed, FormatError> {
    let (plan, summary) = split_plan_and(text, &config.summary_marker, config)?;
    let mut flags = Vec::new();
    let pairs = pairs_from_fields(split_fields(plan, config), config, mode, &mut flags)?;
    Ok(Parsed {
        blueprint: Blueprint::new(pairs),
        summary: unescape(summary, config),
        flags,
    })
}

/// The summary task and the questions task, in that order.
pub fn serialize_multitask(
    example: &AnnotatedExample,
    config: &FormatConfig,
) -> (TargetInstance, TargetInstance) {
    let input = example.document.input_text();
    let answers = answer_plan_body(&example.blueprint.pairs, config);

    let mut summary_target = String::new();
    push_segment(&mut summary_target, &config.plan_marker, &answers);
    push_segment(
        &mut summary_target,
        &config.summary_marker,
        &escape(example.summary.text(), config),
    );

    let mut questions_target = String::new();
    push_segment(&mut questions_target, &config.plan_marker, &answers);
    push_segment(
        &mut questions_target,
        &config.questions_marker,
        &join_fields(example.blueprint.iter().map(|p| p.question.as_str()), config),
    );

    let with_prefix = |prefix: &str| {
        let mut s = String::new();
        push_segment(&mut s, prefix, &input);
        s
    };
    (
        TargetInstance {
            input_text: with_prefix(&config.gen_summary_prefix),
            target_text: summary_target,
            loss_mask_prefix_len: 0,
            variant: TargetVariant::MultitaskSummary,
            step_index: None,
        },
        TargetInstance {
            input_text: with_prefix(&config.gen_questions_prefix),
            target_text: questions_target,
            loss_mask_prefix_len: 0,
            variant: TargetVariant::MultitaskQuestions,
            step_index: None,
        },
    )
}

/// Zip answers from the summary decode with questions from the questions
/// decode. An empty questions decode yields answer-only pairs.
pub fn parse_multitask(
    summary_decode: &str,
    questions_decode: &str,
    config: &FormatConfig,
    mode: ParseMode,
) -> Result<Parsed, FormatError> {
    let (plan, summary) = split_plan_and(summary_decode, &config.summary_marker, config)?;
    let answers = split_fields(plan, config);
    let questions = if questions_decode.trim().is_empty() {
        Vec::new()
    } else {
        let (_, qs) = split_plan_and(questions_decode, &config.questions_marker, config)?;
        split_fields(qs, config)
    };
    let mut flags = Vec::new();
    let pairs: Vec<QAPair> = if questions.is_empty() && !answers.is_empty() {
        flags.push(ParseFlag::AnswersOnly);
        answers.into_iter().map(|a| QAPair::new("", a)).collect()
    } else {
        if answers.len() != questions.len() {
            if mode == ParseMode::Strict {
                return Err(FormatError::LengthMismatch {
                    answers: answers.len(),
                    questions: questions.len(),
                });
            }
            flags.push(ParseFlag::LengthMismatch {
                answers: answers.len(),
                questions: questions.len(),
            });
        }
        answers
            .into_iter()
            .zip(questions)
            .map(|(a, q)| QAPair::new(q, a))
            .collect()
    };
    Ok(Parsed {
        blueprint: Blueprint::new(pairs),
        summary: unescape(summary, config),
        flags,
    })
}

/// `Context: <ctx> Plan: <plan> Next Sentence:` plus the sentence body;
/// returns the text and the length in characters of the context prefix.
fn iterative_text(context: &str, plan: &str, sentence: &str, config: &FormatConfig) -> (String, usize) {
    let mut out = String::new();
    push_segment(&mut out, &config.context_marker, &escape(context, config));
    out.push(' ');
    let mask = out.chars().count();
    out.push_str(&config.plan_marker);
    if !plan.is_empty() {
        out.push(' ');
        out.push_str(plan);
    }
    push_segment(&mut out, &config.next_sentence_marker, sentence);
    (out, mask)
}

/// Decoder prompt for one iterative step with a forced plan.
pub fn iterative_prompt(context: &str, pairs: &[QAPair], config: &FormatConfig) -> String {
    iterative_text(context, &plan_body(pairs, config), "", config).0
}

/// `n + 1` instances: one per summary sentence, then the terminator.
pub fn serialize_iterative(example: &AnnotatedExample, config: &FormatConfig) -> Vec<TargetInstance> {
    let input = example.document.input_text();
    let sentences = example.summary.sentence_texts();
    let n = sentences.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let context = sentences[..i].join(" ");
        let (plan, sentence) = if i < n {
            let pairs = example
                .sentence_blueprints
                .iter()
                .find(|sb| sb.sentence_index == i)
                .map(|sb| sb.pairs.as_slice())
                .unwrap_or_default();
            (plan_body(pairs, config), escape(sentences[i], config))
        } else {
            (config.end_plan_token.clone(), config.end_sentence_token.clone())
        };
        let (target, mask) = iterative_text(&context, &plan, &sentence, config);
        out.push(TargetInstance {
            input_text: input.clone(),
            target_text: target,
            loss_mask_prefix_len: mask,
            variant: TargetVariant::Iterative,
            step_index: Some(i),
        });
    }
    out
}

/// Parse one step decode. Anything up to the last context block is
/// ignored, so both bare decodes and full targets are accepted.
pub fn parse_iterative_step(
    decode: &str,
    config: &FormatConfig,
    mode: ParseMode,
) -> Result<IterativeStep, FormatError> {
    let from = find_last_marker(decode, &config.context_marker)
        .map(|p| p + config.context_marker.len())
        .unwrap_or(0);
    let (plan, sentence) =
        split_plan_and(&decode[from..], &config.next_sentence_marker, config)?;
    let mut flags = Vec::new();
    let is_end = plan == config.end_plan_token || sentence == config.end_sentence_token;
    if is_end {
        return Ok(IterativeStep {
            pairs: Vec::new(),
            sentence: String::new(),
            is_end,
            flags,
        });
    }
    let pairs = pairs_from_fields(split_fields(plan, config), config, mode, &mut flags)?;
    let sentence = unescape(sentence, config);
    if sentence.is_empty() {
        flags.push(ParseFlag::EmptySentence);
    }
    Ok(IterativeStep {
        pairs,
        sentence,
        is_end,
        flags,
    })
}

/// Rebuild the plan and summary from a step loop. Steps after the first
/// terminator are ignored.
pub fn assemble_iterative(steps: &[IterativeStep]) -> Parsed {
    let mut pairs = Vec::new();
    let mut sentences = Vec::new();
    let mut flags = Vec::new();
    let mut terminated = false;
    for step in steps {
        if step.is_end {
            terminated = true;
            break;
        }
        pairs.extend(step.pairs.iter().cloned());
        if !step.sentence.is_empty() {
            sentences.push(step.sentence.as_str());
        }
        flags.extend(step.flags.iter().cloned());
    }
    if !terminated {
        flags.push(ParseFlag::MissingTerminator);
    }
    Parsed {
        blueprint: Blueprint::new(pairs),
        summary: sentences.join(" "),
        flags,
    }
}
