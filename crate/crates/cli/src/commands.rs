//! The subcommands. Records are processed on a bounded worker pool and
//! written back in input order; records that fail go to a sidecar file
//! next to the output instead of the output itself.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Display;
use std::path::Path;

use anyhow::{bail, Context};
use blueprint_core::annotate::{align_to_sentences, annotate_example};
use blueprint_core::clients::ModelClients;
use blueprint_core::control::{
    apply_plan_edit, drop_unanswerable, iterative_edit_prompts, pairs_without_anchors, truncate_q1,
    PromptVariant,
};
use blueprint_core::eval::{aggregate, dataset_stats, evaluate_example, EvalInput, StatsExample};
use blueprint_core::formats::{
    assemble_iterative, parse_e2e, parse_iterative_step, parse_multitask, serialize_e2e,
    serialize_iterative, serialize_multitask, FormatError, ParseMode, Parsed, TargetRecord,
    TargetVariant,
};
use blueprint_core::{AnnotatedExample, Blueprint, Document, Proposition, SentenceBlueprint, Summary};
use rayon::prelude::*;
use serde::Deserialize;

use crate::config::RunConfig;
use crate::io::{read_jsonl, read_jsonl_strict, write_json, write_jsonl, write_sidecar, Line};
use crate::records::{
    pair_records, to_blueprint, CorpusRecord, DecodeRecord, ErrorRecord, PairRecord, PlanRecord,
    PromptRecord, StructuredRecord, TransformedRecord,
};

/// Records written and records sent to the sidecar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Outcome {
    pub written: usize,
    pub failed: usize,
}

/// Shared state for one run.
pub struct Runner {
    pub config: RunConfig,
    pub clients: ModelClients,
    pool: rayon::ThreadPool,
}

impl Runner {
    pub fn new(config: RunConfig, clients: ModelClients) -> anyhow::Result<Self> {
        config.validate()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .context("cannot start worker pool")?;
        Ok(Self { config, clients, pool })
    }

    /// Order-preserving parallel map on the run's pool.
    fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        self.pool.install(|| items.par_iter().map(f).collect())
    }
}

fn fail(line: usize, example_id: Option<&str>, error: impl Display) -> ErrorRecord {
    ErrorRecord {
        line,
        example_id: example_id.map(str::to_string),
        error: error.to_string(),
        marker: None,
    }
}

fn format_failure(line: usize, example_id: &str, e: FormatError) -> ErrorRecord {
    let marker = match &e {
        FormatError::MissingMarker(m) => Some(m.clone()),
        _ => None,
    };
    ErrorRecord {
        marker,
        ..fail(line, Some(example_id), e)
    }
}

/// Lines whose `example_id` already appeared earlier in the file.
fn duplicate_lines<T>(lines: &[Line<T>], id: impl Fn(&T) -> &str) -> HashSet<usize> {
    let mut seen = HashSet::new();
    lines
        .iter()
        .filter_map(|l| l.value.as_ref().ok().map(|v| (l.line, id(v))))
        .filter(|(_, i)| !seen.insert(i.to_string()))
        .map(|(line, _)| line)
        .collect()
}

fn finish<T: serde::Serialize>(
    output: &Path,
    results: Vec<Result<Vec<T>, ErrorRecord>>,
) -> anyhow::Result<Outcome> {
    let mut items = Vec::new();
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(v) => items.extend(v),
            Err(e) => errors.push(e),
        }
    }
    errors.sort_by_key(|e| e.line);
    write_jsonl(output, &items)?;
    write_sidecar(output, &errors)?;
    Ok(Outcome {
        written: items.len(),
        failed: errors.len(),
    })
}

/// Read corpus-style records, turning undecodable lines and repeated ids
/// into sidecar entries.
fn corpus_lines(input: &Path) -> anyhow::Result<Vec<Result<(usize, CorpusRecord), ErrorRecord>>> {
    let lines = read_jsonl::<CorpusRecord>(input)?;
    let dupes = duplicate_lines(&lines, |r| r.example_id.as_str());
    Ok(lines
        .into_iter()
        .map(|l| match l.value {
            Err(e) => Err(fail(l.line, None, e)),
            Ok(r) if dupes.contains(&l.line) => Err(fail(l.line, Some(&r.example_id), "duplicate example_id")),
            Ok(r) => Ok((l.line, r)),
        })
        .collect())
}

pub fn annotate(run: &Runner, input: &Path, output: &Path) -> anyhow::Result<Outcome> {
    let records = corpus_lines(input)?;
    let results = run.map(&records, |r| {
        let (line, r) = r.as_ref().map_err(Clone::clone)?;
        let err = |e: &dyn Display| fail(*line, Some(&r.example_id), e);
        r.validate().map_err(|e| err(&e))?;
        let document = r.document().map_err(|e| err(&e))?;
        let summary = r.summary().map_err(|e| err(&e))?;
        let overrides = r.proposition_spans().map_err(|e| err(&e))?;
        let ex = annotate_example(
            &document,
            &summary,
            &run.clients,
            &run.config.split,
            &run.config.annotate,
            overrides.as_deref(),
        )
        .map_err(|e| err(&e))?;
        Ok(vec![CorpusRecord::from_annotated(r, &ex)])
    });
    finish(output, results)
}

/// Rebuild the annotated tuple from a record that carries a blueprint.
pub fn annotated_example(r: &CorpusRecord) -> Result<AnnotatedExample, String> {
    r.validate().map_err(|e| e.to_string())?;
    let blueprint = r
        .checked_blueprint()
        .map_err(|e| e.to_string())?
        .ok_or("missing blueprint")?;
    let summary = r.summary().map_err(|e| e.to_string())?;
    let propositions = match r.proposition_spans().map_err(|e| e.to_string())? {
        Some(spans) => spans
            .iter()
            .map(|s| Proposition::from_span(&r.summary, *s))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?,
        None => Vec::new(),
    };
    Ok(AnnotatedExample {
        document: r.document().map_err(|e| e.to_string())?,
        sentence_blueprints: align_to_sentences(&blueprint, &summary),
        summary,
        blueprint,
        propositions,
    })
}

pub fn serialize(run: &Runner, input: &Path, output: &Path, variant: PromptVariant) -> anyhow::Result<Outcome> {
    let records = corpus_lines(input)?;
    let fc = &run.config.format;
    let results = run.map(&records, |r| {
        let (line, r) = r.as_ref().map_err(Clone::clone)?;
        let ex = annotated_example(r).map_err(|e| fail(*line, Some(&r.example_id), e))?;
        let targets = match variant {
            PromptVariant::E2e => vec![serialize_e2e(&ex, fc)],
            PromptVariant::Multitask => {
                let (s, q) = serialize_multitask(&ex, fc);
                vec![s, q]
            }
            PromptVariant::Iterative => serialize_iterative(&ex, fc),
        };
        Ok(targets
            .into_iter()
            .map(|t| t.into_record(r.example_id.clone()))
            .collect::<Vec<TargetRecord>>())
    });
    finish(output, results)
}

/// Decodes of one example, in file order.
struct Group<'a> {
    example_id: &'a str,
    line: usize,
    decodes: Vec<&'a DecodeRecord>,
}

fn group_decodes(lines: &[Line<DecodeRecord>]) -> (Vec<Group<'_>>, Vec<ErrorRecord>) {
    let mut groups: Vec<Group> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut errors = Vec::new();
    for l in lines {
        match &l.value {
            Err(e) => errors.push(fail(l.line, None, e)),
            Ok(d) => {
                let i = *index.entry(d.example_id.as_str()).or_insert_with(|| {
                    groups.push(Group {
                        example_id: &d.example_id,
                        line: l.line,
                        decodes: Vec::new(),
                    });
                    groups.len() - 1
                });
                groups[i].decodes.push(d);
            }
        }
    }
    (groups, errors)
}

/// Pick the summary and questions decodes: by `variant` tag when present,
/// otherwise by position.
fn multitask_pair<'a>(decodes: &[&'a DecodeRecord]) -> Result<(&'a str, &'a str), String> {
    let mut summary = None;
    let mut questions = None;
    let mut untagged = Vec::new();
    for d in decodes {
        let slot = match d.variant {
            Some(TargetVariant::MultitaskSummary) => &mut summary,
            Some(TargetVariant::MultitaskQuestions) => &mut questions,
            None => {
                untagged.push(d.text.as_str());
                continue;
            }
            Some(other) => return Err(format!("unexpected {other:?} decode in multitask input")),
        };
        if slot.replace(d.text.as_str()).is_some() {
            return Err("repeated multitask decode".into());
        }
    }
    for text in untagged {
        let slot = if summary.is_none() {
            &mut summary
        } else if questions.is_none() {
            &mut questions
        } else {
            return Err("more than two multitask decodes".into());
        };
        *slot = Some(text);
    }
    let summary = summary.ok_or("missing summary decode")?;
    Ok((summary, questions.unwrap_or("")))
}

fn parse_group(g: &Group, variant: PromptVariant, run: &Runner, mode: ParseMode) -> Result<Parsed, ErrorRecord> {
    let fc = &run.config.format;
    let ferr = |e: FormatError| format_failure(g.line, g.example_id, e);
    match variant {
        PromptVariant::E2e => match g.decodes.as_slice() {
            [d] => parse_e2e(&d.text, fc, mode).map_err(ferr),
            _ => Err(fail(g.line, Some(g.example_id), "more than one e2e decode")),
        },
        PromptVariant::Multitask => {
            let (s, q) = multitask_pair(&g.decodes).map_err(|e| fail(g.line, Some(g.example_id), e))?;
            parse_multitask(s, q, fc, mode).map_err(ferr)
        }
        PromptVariant::Iterative => {
            let mut decodes = g.decodes.clone();
            decodes.sort_by_key(|d| d.step_index.unwrap_or(usize::MAX));
            let steps = decodes
                .iter()
                .map(|d| parse_iterative_step(&d.text, fc, mode))
                .collect::<Result<Vec<_>, _>>()
                .map_err(ferr)?;
            Ok(assemble_iterative(&steps))
        }
    }
}

pub fn parse(
    run: &Runner,
    input: &Path,
    output: &Path,
    variant: PromptVariant,
    mode: ParseMode,
) -> anyhow::Result<Outcome> {
    let lines = read_jsonl::<DecodeRecord>(input)?;
    let (groups, errors) = group_decodes(&lines);
    let mut results = run.map(&groups, |g| {
        let p = parse_group(g, variant, run, mode)?;
        Ok(vec![StructuredRecord {
            example_id: g.example_id.to_string(),
            blueprint: pair_records(&p.blueprint),
            summary: p.summary,
            flags: p.flags,
        }])
    });
    results.extend(errors.into_iter().map(Err));
    finish(output, results)
}

/// Which control transform to apply.
#[derive(Debug, Clone, PartialEq)]
pub enum Transform {
    Drop,
    Q1,
    Edit(PlanEdits),
}

impl Transform {
    fn name(&self) -> &'static str {
        match self {
            Transform::Drop => "drop",
            Transform::Q1 => "q1",
            Transform::Edit(_) => "edit",
        }
    }
}

/// A plan file for `--edit`: one plan for every record, or plans keyed by
/// `example_id`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum PlanEdits {
    Shared(Vec<PairRecord>),
    PerExample(BTreeMap<String, Vec<PairRecord>>),
}

impl PlanEdits {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("invalid plan file {}", path.display()))
    }

    fn plan_for(&self, example_id: &str) -> Option<&[PairRecord]> {
        match self {
            PlanEdits::Shared(p) => Some(p),
            PlanEdits::PerExample(m) => m.get(example_id).map(Vec::as_slice),
        }
    }
}

pub fn variant_name(v: PromptVariant) -> &'static str {
    match v {
        PromptVariant::E2e => "e2e",
        PromptVariant::Multitask => "multitask",
        PromptVariant::Iterative => "iterative",
    }
}

pub struct ControlArgs<'a> {
    pub transform: Transform,
    pub variant: PromptVariant,
    /// Sources for records that do not carry their own.
    pub corpus: Option<&'a Path>,
    pub prompts: &'a Path,
}

fn control_one(
    run: &Runner,
    r: &PlanRecord,
    corpus: &HashMap<String, CorpusRecord>,
    args: &ControlArgs,
) -> Result<(TransformedRecord, Vec<PromptRecord>), String> {
    let summary = Summary::new(r.summary.as_str()).map_err(|e| e.to_string())?;
    let blueprint = to_blueprint(&r.blueprint).map_err(|e| e.to_string())?;
    let document = match (&r.sources, corpus.get(&r.example_id)) {
        (Some(sources), _) => Document::new(r.example_id.clone(), r.query.clone(), sources.clone()),
        (None, Some(c)) => c.document(),
        (None, None) => return Err("no sources: pass --corpus or include sources in the record".into()),
    }
    .map_err(|e| e.to_string())?;
    let mut unchecked = 0;
    let (edited, plans): (Blueprint, Vec<SentenceBlueprint>) = match &args.transform {
        Transform::Drop => {
            let out = drop_unanswerable(&blueprint, &document, run.clients.qa.as_ref(), &run.config.control)
                .map_err(|e| e.to_string())?;
            unchecked = out.unchecked;
            let plans = align_to_sentences(&out.blueprint, &summary);
            (out.blueprint, plans)
        }
        Transform::Q1 => {
            let plans = truncate_q1(&align_to_sentences(&blueprint, &summary), &run.config.control);
            let edited = plans.iter().flat_map(|sb| sb.pairs.iter().cloned()).collect();
            (edited, plans)
        }
        Transform::Edit(edits) => {
            let plan = edits
                .plan_for(&r.example_id)
                .ok_or_else(|| format!("no edited plan for {}", r.example_id))?;
            let bp = to_blueprint(plan).map_err(|e| e.to_string())?;
            let edited = Blueprint::new(pairs_without_anchors(&bp.pairs));
            let plans = align_to_sentences(&edited, &summary);
            (edited, plans)
        }
    };
    let fc = &run.config.format;
    let prompts = match (args.variant, &args.transform) {
        (PromptVariant::Iterative, Transform::Drop | Transform::Q1) => {
            iterative_edit_prompts(&document, &summary.sentence_texts(), &plans, fc)
        }
        (v, _) => vec![apply_plan_edit(&document, &edited, v, fc)],
    };
    let prompts = prompts
        .into_iter()
        .map(|p| PromptRecord {
            example_id: r.example_id.clone(),
            variant: variant_name(args.variant).to_string(),
            input: p.input,
            prompt: p.prompt,
            step_index: p.step_index,
        })
        .collect();
    let record = TransformedRecord {
        example_id: r.example_id.clone(),
        transform: args.transform.name().to_string(),
        summary: r.summary.clone(),
        removed: blueprint.len().saturating_sub(edited.len()),
        blueprint: pair_records(&edited),
        sentence_plans: plans.iter().map(|sb| sb.pairs.iter().map(PairRecord::from_pair).collect()).collect(),
        unchecked,
    };
    Ok((record, prompts))
}

pub fn control(run: &Runner, input: &Path, output: &Path, args: &ControlArgs) -> anyhow::Result<Outcome> {
    let corpus: HashMap<String, CorpusRecord> = match args.corpus {
        Some(path) => read_jsonl_strict::<CorpusRecord>(path)?
            .into_iter()
            .map(|r| (r.example_id.clone(), r))
            .collect(),
        None => HashMap::new(),
    };
    let lines = read_jsonl::<PlanRecord>(input)?;
    let dupes = duplicate_lines(&lines, |r| r.example_id.as_str());
    let results = run.map(&lines, |l| {
        let r = l.value.as_ref().map_err(|e| fail(l.line, None, e))?;
        if dupes.contains(&l.line) {
            return Err(fail(l.line, Some(&r.example_id), "duplicate example_id"));
        }
        control_one(run, r, &corpus, args).map_err(|e| fail(l.line, Some(&r.example_id), e))
    });
    let mut transformed = Vec::new();
    let mut prompts = Vec::new();
    for r in results {
        match r {
            Ok((t, p)) => {
                transformed.push(Ok(vec![t]));
                prompts.extend(p);
            }
            Err(e) => transformed.push(Err(e)),
        }
    }
    write_jsonl(args.prompts, &prompts)?;
    finish(output, transformed)
}

/// A prediction to score: the output of `parse`, or any record with a
/// summary and an optional blueprint.
#[derive(Debug, Clone, Deserialize)]
pub struct PredictionRecord {
    pub example_id: String,
    pub summary: String,
    #[serde(default)]
    pub blueprint: Option<Vec<PairRecord>>,
}

pub fn evaluate(
    run: &Runner,
    predictions: &Path,
    references: &Path,
    output: &Path,
    aggregate_path: &Path,
) -> anyhow::Result<Outcome> {
    let preds = read_jsonl_strict::<PredictionRecord>(predictions)?;
    let refs = read_jsonl_strict::<CorpusRecord>(references)?;
    let mut by_id: HashMap<&str, &CorpusRecord> = HashMap::new();
    for r in &refs {
        if by_id.insert(&r.example_id, r).is_some() {
            bail!("duplicate reference id {}", r.example_id);
        }
    }
    let mut seen = HashSet::new();
    for p in &preds {
        if !seen.insert(p.example_id.as_str()) {
            bail!("duplicate prediction id {}", p.example_id);
        }
        if !by_id.contains_key(p.example_id.as_str()) {
            bail!("prediction {} has no reference", p.example_id);
        }
    }
    if let Some(r) = refs.iter().find(|r| !seen.contains(r.example_id.as_str())) {
        bail!("reference {} has no prediction", r.example_id);
    }
    let indexed: Vec<(usize, &PredictionRecord)> = preds.iter().enumerate().collect();
    let results = run.map(&indexed, |&(i, p)| {
        // record number, which is the line number when there are no blank lines
        let err = |e: &dyn Display| fail(i + 1, Some(&p.example_id), e);
        let r = by_id[p.example_id.as_str()];
        let input = EvalInput {
            example_id: p.example_id.clone(),
            document: r.document().map_err(|e| err(&e))?,
            predicted_summary: p.summary.clone(),
            predicted_blueprint: p
                .blueprint
                .as_deref()
                .map(to_blueprint)
                .transpose()
                .map_err(|e| err(&e))?,
            reference_summary: r.summary.clone(),
            reference_blueprint: r.checked_blueprint().map_err(|e| err(&e))?.unwrap_or_default(),
        };
        evaluate_example(&input, &run.clients, &run.config.eval)
            .map(|rep| vec![rep])
            .map_err(|e| err(&e))
    });
    let reports: Vec<_> = results.iter().filter_map(|r| r.as_ref().ok()).flatten().cloned().collect();
    write_json(aggregate_path, &aggregate(&reports))?;
    finish(output, results)
}

pub fn stats(input: &Path, output: Option<&Path>) -> anyhow::Result<Outcome> {
    let records = read_jsonl_strict::<CorpusRecord>(input)?;
    let corpus = records
        .iter()
        .map(|r| {
            Ok(StatsExample {
                sources: r.sources.iter().map(|s| s.text.clone()).collect(),
                summary: r.summary.clone(),
                blueprint: r.blueprint.as_deref().map(to_blueprint).transpose()?,
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let stats = dataset_stats(&corpus)?;
    match output {
        Some(path) => write_json(path, &stats)?,
        None => println!("{}", serde_json::to_string_pretty(&stats)?),
    }
    Ok(Outcome {
        written: 1,
        failed: 0,
    })
}
