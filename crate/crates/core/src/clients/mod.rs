//! Client contracts for the learned components: question generation (QG),
//! extractive question answering (QA) and textual entailment (NLI).
//!
//! Every component has a remote HTTP backend ([`remote`]) and a
//! deterministic lookup-table backend ([`mock`]). The request and response
//! structs below are also the JSON wire bodies.

pub mod mock;
pub mod remote;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::{CandidateBackend, HeuristicBackend};

pub use mock::{MockBackend, MockFixtures};
pub use remote::{ClientConfig, HttpClient, RemoteCandidates, RemoteNli, RemoteQa, RemoteQg};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("invalid client configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QgRequest {
    pub answer: String,
    pub context: String,
}

impl QgRequest {
    /// Flat model input: the answer, then the context, each behind a label.
    pub fn model_input(&self) -> String {
        encode_qg_input(&self.answer, &self.context)
    }
}

pub fn encode_qg_input(answer: &str, context: &str) -> String {
    format!("answer: {answer} context: {context}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QgResponse {
    pub question: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaRequest {
    pub question: String,
    pub context: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaResponse {
    pub answer: String,
    pub score: f64,
    pub no_answer: bool,
}

impl QaResponse {
    pub fn unanswerable() -> Self {
        Self {
            answer: String::new(),
            score: 0.0,
            no_answer: true,
        }
    }

    /// The prediction as scored: `no_answer` counts as an empty string.
    pub fn prediction(&self) -> &str {
        if self.no_answer {
            ""
        } else {
            &self.answer
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NliRequest {
    pub premise: String,
    pub hypothesis: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NliResponse {
    pub entail_prob: f64,
}

pub trait QuestionGenerator: Send + Sync {
    fn generate(&self, request: &QgRequest) -> Result<QgResponse, ClientError>;
}

pub trait QuestionAnswerer: Send + Sync {
    fn answer(&self, request: &QaRequest) -> Result<QaResponse, ClientError>;
}

pub trait EntailmentScorer: Send + Sync {
    fn entail(&self, request: &NliRequest) -> Result<NliResponse, ClientError>;
}

fn check_probability(name: &str, p: f64) -> Result<(), ClientError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(ClientError::MalformedResponse(format!("{name} {p} outside [0, 1]")))
    }
}

pub fn generate_question(
    answer: &str,
    context: &str,
    client: &dyn QuestionGenerator,
) -> Result<String, ClientError> {
    let response = client.generate(&QgRequest {
        answer: answer.to_string(),
        context: context.to_string(),
    })?;
    if response.question.trim().is_empty() {
        return Err(ClientError::MalformedResponse("empty question".into()));
    }
    Ok(response.question)
}

pub fn answer_question(
    question: &str,
    context: &str,
    client: &dyn QuestionAnswerer,
) -> Result<QaResponse, ClientError> {
    let mut response = client.answer(&QaRequest {
        question: question.to_string(),
        context: context.to_string(),
    })?;
    check_probability("score", response.score)?;
    if response.no_answer {
        response.answer.clear();
    }
    Ok(response)
}

pub fn entail_prob(
    premise: &str,
    hypothesis: &str,
    client: &dyn EntailmentScorer,
) -> Result<f64, ClientError> {
    let response = client.entail(&NliRequest {
        premise: premise.to_string(),
        hypothesis: hypothesis.to_string(),
    })?;
    check_probability("entail_prob", response.entail_prob)?;
    Ok(response.entail_prob)
}

/// Run `f` over `items` concurrently; outputs keep input order.
pub fn batch<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.par_iter().map(f).collect()
}

/// The full set of backends one pipeline run talks to.
#[derive(Clone)]
pub struct ModelClients {
    pub qg: Arc<dyn QuestionGenerator>,
    pub qa: Arc<dyn QuestionAnswerer>,
    pub nli: Arc<dyn EntailmentScorer>,
    pub candidates: Arc<dyn CandidateBackend>,
}

impl ModelClients {
    /// All four roles served by one mock.
    pub fn from_mock(mock: MockBackend) -> Self {
        let mock = Arc::new(mock);
        Self {
            qg: mock.clone(),
            qa: mock.clone(),
            nli: mock.clone(),
            candidates: mock,
        }
    }

    pub fn heuristic_candidates(mut self) -> Self {
        self.candidates = Arc::new(HeuristicBackend);
        self
    }
}

impl std::fmt::Debug for ModelClients {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelClients").finish_non_exhaustive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Bad;
    impl QuestionAnswerer for Bad {
        fn answer(&self, _: &QaRequest) -> Result<QaResponse, ClientError> {
            Ok(QaResponse {
                answer: "x".into(),
                score: 1.5,
                no_answer: false,
            })
        }
    }
    impl EntailmentScorer for Bad {
        fn entail(&self, _: &NliRequest) -> Result<NliResponse, ClientError> {
            Ok(NliResponse { entail_prob: -0.1 })
        }
    }
    impl QuestionGenerator for Bad {
        fn generate(&self, _: &QgRequest) -> Result<QgResponse, ClientError> {
            Ok(QgResponse {
                question: " ".into(),
            })
        }
    }

    #[test]
    fn out_of_range_probabilities_are_malformed() {
        assert!(matches!(
            answer_question("q", "c", &Bad),
            Err(ClientError::MalformedResponse(_))
        ));
        assert!(matches!(
            entail_prob("p", "h", &Bad),
            Err(ClientError::MalformedResponse(_))
        ));
        assert!(matches!(
            generate_question("a", "c", &Bad),
            Err(ClientError::MalformedResponse(_))
        ));
    }

    #[test]
    fn batch_preserves_order() {
        let items: Vec<u64> = (0..200).collect();
        let out = batch(&items, |&i| {
            std::thread::sleep(std::time::Duration::from_micros((200 - i) * 10));
            i * 2
        });
        assert_eq!(out, items.iter().map(|i| i * 2).collect::<Vec<_>>());
    }

    #[test]
    fn qg_input_layout() {
        assert_eq!(encode_qg_input("Ford", "built by Ford."), "answer: Ford context: built by Ford.");
    }
}
