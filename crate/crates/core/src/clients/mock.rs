//! Lookup-table backend for offline runs and tests.
//!
//! Fixtures are loaded from a JSON document with one list per component;
//! each entry pairs a wire request with the response to return:
//!
//! ```json
//! {
//!   "qg":  [{"request": {"answer": "Ford", "context": "..."}, "response": {"question": "..."}}],
//!   "qa":  [{"request": {"question": "...", "context": "..."}, "response": {"answer": "...", "score": 0.9, "no_answer": false}}],
//!   "nli": [{"request": {"premise": "...", "hypothesis": "..."}, "response": {"entail_prob": 0.9}}],
//!   "candidates": [{"request": {"text": "..."}, "response": {"candidates": [...]}}]
//! }
//! ```
//!
//! A QA request may omit `context` and an NLI request may omit `premise`.
//! Such entries match any context (premise); a context-free QA entry only
//! answers when its answer occurs in the context, like an extractive reader.
//!
//! Defaults when no entry matches:
//! * QG: `What is <answer>?`
//! * QA: `no_answer = true`
//! * NLI: `1.0` when hypothesis equals premise, otherwise `0.0`
//! * candidates: the heuristic backend

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    encode_qg_input, ClientError, EntailmentScorer, NliResponse, QaRequest, QaResponse,
    QgRequest, QgResponse, QuestionAnswerer, QuestionGenerator, NliRequest,
};
use crate::candidates::{heuristic_backend, AnswerCandidate, CandidateBackend};
use crate::types::Summary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry<Req, Resp> {
    pub request: Req,
    pub response: Resp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaFixtureRequest {
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NliFixtureRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub premise: Option<String>,
    pub hypothesis: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateRequest {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateResponse {
    pub candidates: Vec<AnswerCandidate>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockFixtures {
    pub qg: Vec<FixtureEntry<QgRequest, QgResponse>>,
    pub qa: Vec<FixtureEntry<QaFixtureRequest, QaResponse>>,
    pub nli: Vec<FixtureEntry<NliFixtureRequest, NliResponse>>,
    pub candidates: Vec<FixtureEntry<CandidateRequest, CandidateResponse>>,
}

impl MockFixtures {
    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }

    pub fn load(path: &Path) -> Result<Self, ClientError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ClientError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| ClientError::Config(format!("{}: {e}", path.display())))
    }
}

/// Deterministic backend for all four roles. Later fixture entries with
/// the same key replace earlier ones.
#[derive(Debug, Clone, Default)]
pub struct MockBackend {
    qg: HashMap<String, String>,
    qa: HashMap<(String, String), QaResponse>,
    qa_any_context: HashMap<String, QaResponse>,
    nli: HashMap<(String, String), f64>,
    nli_any_premise: HashMap<String, f64>,
    candidates: HashMap<String, Vec<AnswerCandidate>>,
}

impl MockBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_fixtures(fixtures: MockFixtures) -> Self {
        let mut mock = Self::new();
        for e in fixtures.qg {
            mock = mock.with_qg(&e.request.answer, &e.request.context, &e.response.question);
        }
        for e in fixtures.qa {
            match e.request.context {
                Some(ctx) => {
                    mock.qa.insert((e.request.question, ctx), e.response);
                }
                None => {
                    mock.qa_any_context.insert(e.request.question, e.response);
                }
            }
        }
        for e in fixtures.nli {
            match e.request.premise {
                Some(p) => {
                    mock.nli.insert((p, e.request.hypothesis), e.response.entail_prob);
                }
                None => {
                    mock.nli_any_premise
                        .insert(e.request.hypothesis, e.response.entail_prob);
                }
            }
        }
        for e in fixtures.candidates {
            mock.candidates.insert(e.request.text, e.response.candidates);
        }
        mock
    }

    pub fn load(path: &Path) -> Result<Self, ClientError> {
        Ok(Self::from_fixtures(MockFixtures::load(path)?))
    }

    pub fn with_qg(mut self, answer: &str, context: &str, question: &str) -> Self {
        self.qg
            .insert(encode_qg_input(answer, context), question.to_string());
        self
    }

    pub fn with_qa(mut self, question: &str, context: &str, answer: &str) -> Self {
        self.qa.insert(
            (question.to_string(), context.to_string()),
            QaResponse {
                answer: answer.to_string(),
                score: 1.0,
                no_answer: false,
            },
        );
        self
    }

    pub fn with_qa_response(mut self, question: &str, context: &str, response: QaResponse) -> Self {
        self.qa
            .insert((question.to_string(), context.to_string()), response);
        self
    }

    /// Answer `question` in any context that contains `answer`.
    pub fn with_qa_any_context(mut self, question: &str, answer: &str) -> Self {
        self.qa_any_context.insert(
            question.to_string(),
            QaResponse {
                answer: answer.to_string(),
                score: 1.0,
                no_answer: false,
            },
        );
        self
    }

    pub fn with_nli(mut self, premise: &str, hypothesis: &str, prob: f64) -> Self {
        self.nli
            .insert((premise.to_string(), hypothesis.to_string()), prob);
        self
    }

    pub fn with_nli_any_premise(mut self, hypothesis: &str, prob: f64) -> Self {
        self.nli_any_premise.insert(hypothesis.to_string(), prob);
        self
    }

    pub fn with_candidates(mut self, text: &str, candidates: Vec<AnswerCandidate>) -> Self {
        self.candidates.insert(text.to_string(), candidates);
        self
    }
}

impl QuestionGenerator for MockBackend {
    fn generate(&self, request: &QgRequest) -> Result<QgResponse, ClientError> {
        let question = self
            .qg
            .get(&request.model_input())
            .cloned()
            .unwrap_or_else(|| format!("What is {}?", request.answer));
        Ok(QgResponse { question })
    }
}

impl QuestionAnswerer for MockBackend {
    fn answer(&self, request: &QaRequest) -> Result<QaResponse, ClientError> {
        let key = (request.question.clone(), request.context.clone());
        if let Some(r) = self.qa.get(&key) {
            return Ok(r.clone());
        }
        match self.qa_any_context.get(&request.question) {
            Some(r) if r.no_answer || request.context.contains(&r.answer) => Ok(r.clone()),
            _ => Ok(QaResponse::unanswerable()),
        }
    }
}

impl EntailmentScorer for MockBackend {
    fn entail(&self, request: &NliRequest) -> Result<NliResponse, ClientError> {
        let key = (request.premise.clone(), request.hypothesis.clone());
        let entail_prob = if let Some(&p) = self.nli.get(&key) {
            p
        } else if let Some(&p) = self.nli_any_premise.get(&request.hypothesis) {
            p
        } else if request.premise == request.hypothesis {
            1.0
        } else {
            0.0
        };
        Ok(NliResponse { entail_prob })
    }
}

impl CandidateBackend for MockBackend {
    fn extract(&self, summary: &Summary) -> Result<Vec<AnswerCandidate>, ClientError> {
        Ok(self
            .candidates
            .get(summary.text())
            .cloned()
            .unwrap_or_else(|| heuristic_backend(summary)))
    }
}
