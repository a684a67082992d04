//! The Shelby Mustang worked example run through every annotation stage.

use std::path::PathBuf;

use blueprint_core::annotate::{
    align_to_sentences, annotate_example, coverage_select, overgenerate, rheme_select,
    roundtrip_filter, sort_blueprint, AnnotateConfig, RoundtripMode, SortMode,
};
use blueprint_core::candidates::extract_candidates;
use blueprint_core::clients::{MockBackend, ModelClients};
use blueprint_core::formats::{
    parse_e2e, serialize_e2e, serialize_iterative, serialize_multitask, FormatConfig, ParseMode,
};
use blueprint_core::propsplit::{split_summary, SplitConfig};
use blueprint_core::{
    AnnotatedExample, Blueprint, CharSpan, Document, Proposition, QAPair, Source, Summary,
};
use serde::Deserialize;

#[derive(Deserialize)]
struct TablePair {
    id: usize,
    question: String,
    answer: String,
    start: usize,
    end: usize,
}

#[derive(Deserialize)]
struct Table {
    summary: String,
    pairs: Vec<TablePair>,
    propositions: Vec<CharSpan>,
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn table() -> Table {
    serde_json::from_str(&std::fs::read_to_string(fixture("shelby_table.json")).unwrap()).unwrap()
}

fn mock() -> MockBackend {
    MockBackend::load(&fixture("shelby_mock.json")).unwrap()
}

fn pairs(t: &Table) -> Vec<QAPair> {
    t.pairs
        .iter()
        .map(|p| QAPair::new(&p.question, &p.answer).with_span(CharSpan::new(p.start, p.end)))
        .collect()
}

/// Table row numbers (1-based) of `kept`.
fn ids(t: &Table, kept: &[QAPair]) -> Vec<usize> {
    kept.iter()
        .map(|k| {
            t.pairs
                .iter()
                .find(|p| p.answer == k.answer && Some(CharSpan::new(p.start, p.end)) == k.answer_span)
                .unwrap()
                .id
        })
        .collect()
}

fn published_propositions(t: &Table) -> Vec<Proposition> {
    t.propositions
        .iter()
        .map(|s| Proposition::from_span(&t.summary, *s).unwrap())
        .collect()
}

fn f1_config() -> AnnotateConfig {
    AnnotateConfig {
        roundtrip_mode: RoundtripMode::F1Threshold(0.5),
        ..AnnotateConfig::default()
    }
}

fn document() -> Document {
    Document::new(
        "shelby",
        None,
        vec![Source {
            id: "d1".into(),
            text: "The Shelby Mustang is a high performance variant of the Ford Mustang.".into(),
        }],
    )
    .unwrap()
}

#[test]
fn summary_has_two_sentences() {
    let t = table();
    let s = Summary::new(t.summary.as_str()).unwrap();
    assert_eq!(s.len(), 2);
    assert!(s.sentence_text(1).starts_with("Following the introduction"));
}

#[test]
fn propositions_match_golden() {
    let t = table();
    let s = Summary::new(t.summary.as_str()).unwrap();
    let got = split_summary(&s, &SplitConfig::default());
    let want: Vec<Proposition> =
        serde_json::from_str(&std::fs::read_to_string(fixture("shelby_propositions.golden.json")).unwrap())
            .unwrap();
    assert_eq!(got, want);
    assert_eq!(got[2].text, "from 1969 to 1970 by Ford.");
}

#[test]
fn overgeneration_reproduces_the_eighteen_pairs() {
    let t = table();
    let s = Summary::new(t.summary.as_str()).unwrap();
    let m = mock();
    let cands = extract_candidates(&s, &m).unwrap();
    assert_eq!(cands.len(), 18);
    let got = overgenerate(&s, &cands, &m);
    assert_eq!(got, pairs(&t));
}

#[test]
fn roundtrip_with_f1_threshold_removes_q11_and_q13() {
    let t = table();
    let s = Summary::new(t.summary.as_str()).unwrap();
    let kept = roundtrip_filter(&pairs(&t), &s, &mock(), &f1_config()).unwrap();
    let want: Vec<usize> = (1..=18).filter(|i| ![11, 13].contains(i)).collect();
    assert_eq!(ids(&t, &kept), want);
}

#[test]
fn roundtrip_with_exact_match_also_loses_q15() {
    // Q14 and Q15 share one question, so a single QA answer can match at
    // most one of them exactly.
    let t = table();
    let s = Summary::new(t.summary.as_str()).unwrap();
    let kept = roundtrip_filter(&pairs(&t), &s, &mock(), &AnnotateConfig::default()).unwrap();
    let want: Vec<usize> = (1..=18).filter(|i| ![11, 13, 15].contains(i)).collect();
    assert_eq!(ids(&t, &kept), want);
}

#[test]
fn rheme_over_published_propositions() {
    let t = table();
    let s = Summary::new(t.summary.as_str()).unwrap();
    let rt = roundtrip_filter(&pairs(&t), &s, &mock(), &f1_config()).unwrap();
    let kept = rheme_select(&rt, &published_propositions(&t));
    assert_eq!(ids(&t, &kept), [5, 8, 9, 12, 16, 18]);
    // first proposition: Q5 wins the tie on end offset by answer length
    let p1 = rheme_select(&pairs(&t)[..7], &published_propositions(&t)[..1]);
    assert_eq!(ids(&t, &p1), [5]);
}

#[test]
fn rheme_over_rule_based_propositions() {
    let t = table();
    let s = Summary::new(t.summary.as_str()).unwrap();
    let rt = roundtrip_filter(&pairs(&t), &s, &mock(), &f1_config()).unwrap();
    let props = split_summary(&s, &SplitConfig::default());
    let kept = rheme_select(&rt, &props);
    // the rule keeps "was built by Shelby American from 1965 to 1968," as
    // one proposition, so Q8 and Q9 compete and Q9 ends further right
    assert_eq!(ids(&t, &kept), [5, 9, 12, 16, 18]);
}

#[test]
fn coverage_keeps_every_rheme_survivor() {
    // Q5 holds the only pair token matching "variant" in the summary, so
    // the residual bag cannot empty before Q5 is picked; all six pairs
    // contribute unseen tokens before the loop stops.
    let t = table();
    let s = Summary::new(t.summary.as_str()).unwrap();
    let rt = roundtrip_filter(&pairs(&t), &s, &mock(), &f1_config()).unwrap();
    let rh = rheme_select(&rt, &published_propositions(&t));
    let kept = coverage_select(&rh, &s, &f1_config());
    assert_eq!(ids(&t, &kept), [5, 8, 9, 12, 16, 18]);
}

#[test]
fn sorting_the_final_four() {
    let t = table();
    let s = Summary::new(t.summary.as_str()).unwrap();
    let all = pairs(&t);
    let four: Vec<QAPair> = [9, 12, 16, 18].iter().map(|i| all[i - 1].clone()).collect();
    let fo = sort_blueprint(&four, &s, &AnnotateConfig::default());
    assert_eq!(ids(&t, &fo.pairs), [12, 9, 16, 18]);
    assert_eq!(fo.pairs[0].sort_key, Some(56));
    let span = AnnotateConfig {
        sort_mode: SortMode::AnswerSpan,
        ..AnnotateConfig::default()
    };
    assert_eq!(ids(&t, &sort_blueprint(&four, &s, &span).pairs), [9, 12, 16, 18]);

    let aligned = align_to_sentences(&fo, &s);
    assert_eq!(ids(&t, &aligned[0].pairs), [12, 9]);
    assert_eq!(ids(&t, &aligned[1].pairs), [16, 18]);
}

#[test]
fn end_to_end_annotation_with_override() {
    let t = table();
    let s = Summary::new(t.summary.as_str()).unwrap();
    let clients = ModelClients::from_mock(mock());
    let ex = annotate_example(
        &document(),
        &s,
        &clients,
        &SplitConfig::default(),
        &f1_config(),
        Some(&t.propositions),
    )
    .unwrap();
    assert_eq!(ids(&t, &ex.blueprint.pairs), [5, 12, 8, 9, 16, 18]);
    let total: usize = ex.sentence_blueprints.iter().map(|b| b.pairs.len()).sum();
    assert_eq!(total, 6);
}

#[test]
fn ablation_without_filters_keeps_roundtrip_survivors() {
    let t = table();
    let s = Summary::new(t.summary.as_str()).unwrap();
    let clients = ModelClients::from_mock(mock());
    let cfg = AnnotateConfig {
        enable_rheme: false,
        enable_coverage: false,
        ..f1_config()
    };
    let ex = annotate_example(&document(), &s, &clients, &SplitConfig::default(), &cfg, Some(&t.propositions))
        .unwrap();
    assert_eq!(ex.blueprint.len(), 16);
}

fn worked_example() -> AnnotatedExample {
    let t = table();
    let s = Summary::new(t.summary.as_str()).unwrap();
    let all = pairs(&t);
    let four: Vec<QAPair> = [9, 12, 16, 18].iter().map(|i| all[i - 1].clone()).collect();
    let blueprint: Blueprint = sort_blueprint(&four, &s, &AnnotateConfig::default());
    AnnotatedExample {
        document: document(),
        sentence_blueprints: align_to_sentences(&blueprint, &s),
        summary: s,
        blueprint,
        propositions: published_propositions(&t),
    }
}

#[test]
fn worked_example_targets() {
    let ex = worked_example();
    let c = FormatConfig::default();
    let e2e = serialize_e2e(&ex, &c).target_text;
    assert!(e2e.starts_with(
        "Plan: Ford; Who built the Shelby Mustang from 1969 to 1970?; 1965 to 1968; \
         During what years was the Shelby Mustang built by Shelby American?; "
    ));
    assert!(e2e.ends_with(&format!("Summary: {}", ex.summary.text())));
    let parsed = parse_e2e(&e2e, &c, ParseMode::Strict).unwrap();
    assert_eq!(parsed.blueprint.answers(), ["Ford", "1965 to 1968", "2005", "a new high-performance model"]);

    let (sum, qs) = serialize_multitask(&ex, &c);
    assert!(sum
        .target_text
        .starts_with("Plan: Ford; 1965 to 1968; 2005; a new high-performance model Summary: "));
    assert!(qs.target_text.starts_with("Plan: Ford; 1965 to 1968; 2005; a new high-performance model Questions: Who built the Shelby Mustang from 1969 to 1970?; "));
    assert!(qs.target_text.ends_with("; What was the Shelby Mustang revived as?"));

    let steps = serialize_iterative(&ex, &c);
    assert_eq!(steps.len(), 3);
    assert!(steps[0].target_text.starts_with("Context: Plan: Ford; Who built"));
    assert!(steps[1].target_text.starts_with(&format!("Context: {} Plan: 2005;", ex.summary.sentence_text(0))));
    assert!(steps[2].target_text.ends_with("Plan: [END_PLAN] Next Sentence: [END]"));
}
