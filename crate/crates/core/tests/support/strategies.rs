//! Proptest generators shared by the round-trip and control suites.

#![allow(dead_code)]

use blueprint_core::clients::{MockBackend, QaResponse};
use blueprint_core::eval::token_f1;
use blueprint_core::formats::{FormatConfig, PlanOrder};
use blueprint_core::{AnnotatedExample, Blueprint, Document, QAPair, SentenceBlueprint, Source, Summary};
use proptest::prelude::*;

/// Plain words, with the occasional marker look-alike or separator.
pub fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        8 => "[a-z0-9]{1,6}",
        1 => prop_oneof![
            Just("Plan:".to_string()),
            Just("Summary::".to_string()),
            Just("Questions:".to_string()),
            Just("Context:".to_string()),
            Just("Next Sentence:".to_string()),
            Just("a;b".to_string()),
            Just("é".to_string()),
        ],
    ]
}

pub fn field() -> impl Strategy<Value = String> {
    prop::collection::vec(word(), 1..5).prop_map(|w| w.join(" "))
}

pub fn sentence() -> impl Strategy<Value = String> {
    ("[A-Z][a-z]{0,5}", prop::collection::vec(word(), 0..5), "[a-z]{1,5}").prop_map(
        |(first, mid, last)| {
            let mut words = vec![first];
            words.extend(mid);
            words.push(format!("{last}z."));
            words.join(" ")
        },
    )
}

pub fn annotated_example() -> impl Strategy<Value = AnnotatedExample> {
    prop::collection::vec(sentence(), 1..4)
        .prop_flat_map(|sentences| {
            let n = sentences.len();
            let plans = prop::collection::vec(prop::collection::vec((field(), field()), 0..3), n..=n);
            (Just(sentences), plans)
        })
        .prop_map(|(sentences, plans)| {
            let summary = Summary::new(sentences.join(" ")).unwrap();
            assert_eq!(summary.len(), sentences.len());
            let sentence_blueprints: Vec<SentenceBlueprint> = plans
                .into_iter()
                .enumerate()
                .map(|(i, p)| SentenceBlueprint {
                    sentence_index: i,
                    pairs: p.into_iter().map(|(q, a)| QAPair::new(q, a)).collect(),
                })
                .collect();
            let blueprint: Blueprint = sentence_blueprints
                .iter()
                .flat_map(|sb| sb.pairs.iter().cloned())
                .collect();
            AnnotatedExample {
                document: Document::new(
                    "g",
                    Some("query".into()),
                    vec![Source {
                        id: "s".into(),
                        text: "source".into(),
                    }],
                )
                .unwrap(),
                summary,
                blueprint,
                sentence_blueprints,
                propositions: Vec::new(),
            }
        })
}

pub fn format_configs() -> impl Strategy<Value = FormatConfig> {
    prop_oneof![
        Just(FormatConfig::default()),
        Just(FormatConfig {
            plan_order: PlanOrder::QuestionAnswer,
            ..FormatConfig::default()
        }),
    ]
}

/// How the mock QA model treats one question.
#[derive(Debug, Clone)]
pub enum Behaviour {
    Own,
    Unanswerable,
    Other(String),
    NoQuestion,
}

fn behaviour() -> impl Strategy<Value = Behaviour> {
    prop_oneof![
        Just(Behaviour::Own),
        Just(Behaviour::Unanswerable),
        "[a-z]{1,4}( [a-z]{1,4}){0,2}".prop_map(Behaviour::Other),
        Just(Behaviour::NoQuestion),
    ]
}

/// Answers with the QA behaviour for their question.
pub fn drop_case() -> impl Strategy<Value = Vec<(String, Behaviour)>> {
    prop::collection::vec(("[a-z]{1,4}( [a-z]{1,4}){0,2}", behaviour()), 0..8)
}

pub struct DropFixture {
    pub blueprint: Blueprint,
    pub mock: MockBackend,
    /// Pairs that should survive at threshold 0.5.
    pub expected: Vec<QAPair>,
    pub unchecked: usize,
}

/// Build the blueprint and QA fixtures for one case; `context` is what
/// the transform will ask against.
pub fn drop_fixture(items: &[(String, Behaviour)], context: &str) -> DropFixture {
    let mut mock = MockBackend::new();
    let mut pairs = Vec::new();
    let mut expected = Vec::new();
    let mut unchecked = 0;
    for (i, (answer, b)) in items.iter().enumerate() {
        let question = match b {
            Behaviour::NoQuestion => String::new(),
            _ => format!("question {i}?"),
        };
        let pair = QAPair::new(question.clone(), answer.clone());
        let keep = match b {
            Behaviour::Own => {
                mock = mock.with_qa(&question, context, answer);
                true
            }
            Behaviour::Unanswerable => false,
            Behaviour::Other(x) => {
                mock = mock.with_qa_response(
                    &question,
                    context,
                    QaResponse {
                        answer: x.clone(),
                        score: 0.5,
                        no_answer: false,
                    },
                );
                token_f1(x, answer) >= 0.5
            }
            Behaviour::NoQuestion => {
                unchecked += 1;
                true
            }
        };
        if keep {
            expected.push(pair.clone());
        }
        pairs.push(pair);
    }
    DropFixture {
        blueprint: Blueprint::new(pairs),
        mock,
        expected,
        unchecked,
    }
}
