//! HTTP backend: JSON POST per request, bounded in-flight requests and
//! retries with exponential backoff.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{
    ClientError, EntailmentScorer, NliRequest, NliResponse, QaRequest, QaResponse, QgRequest,
    QgResponse, QuestionAnswerer, QuestionGenerator,
};
use crate::candidates::{AnswerCandidate, CandidateBackend};
use crate::types::Summary;

pub const QG_URL_ENV: &str = "BLUEPRINT_QG_URL";
pub const QA_URL_ENV: &str = "BLUEPRINT_QA_URL";
pub const NLI_URL_ENV: &str = "BLUEPRINT_NLI_URL";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClientConfig {
    pub endpoint: String,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub max_in_flight: usize,
    pub backoff_base_secs: f64,
}

impl Default for ClientConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            timeout_secs: 30.0,
            max_retries: 3,
            max_in_flight: 8,
            backoff_base_secs: 0.5,
        }
    }
}

impl ClientConfig {
    pub fn with_endpoint(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        if self.endpoint.is_empty() {
            return Err(ClientError::Config("endpoint is empty".into()));
        }
        if self.max_in_flight < 1 {
            return Err(ClientError::Config("max_in_flight must be >= 1".into()));
        }
        if !(self.timeout_secs > 0.0) {
            return Err(ClientError::Config("timeout must be positive".into()));
        }
        if self.backoff_base_secs < 0.0 {
            return Err(ClientError::Config("backoff base must be >= 0".into()));
        }
        Ok(())
    }

    fn backoff(&self, attempt: u32) -> Duration {
        Duration::from_secs_f64(self.backoff_base_secs * 2f64.powi(attempt as i32))
    }
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut free = self.0.free.lock().unwrap_or_else(|e| e.into_inner());
        *free += 1;
        self.0.cv.notify_one();
    }
}

/// Shared JSON-over-HTTP client. Safe to use from many threads.
#[derive(Debug)]
pub struct HttpClient {
    config: ClientConfig,
    agent: ureq::Agent,
    gate: Gate,
}

enum Attempt<T> {
    Done(T),
    Retry(String),
    Fatal(ClientError),
}

impl HttpClient {
    pub fn new(config: ClientConfig) -> Result<Self, ClientError> {
        config.validate()?;
        let agent_config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .http_status_as_error(false)
            .build();
        Ok(Self {
            agent: ureq::Agent::new_with_config(agent_config),
            gate: Gate::new(config.max_in_flight),
            config,
        })
    }

    pub fn config(&self) -> &ClientConfig {
        &self.config
    }

    fn attempt<Req: Serialize, Resp: DeserializeOwned>(&self, body: &Req) -> Attempt<Resp> {
        let _permit = self.gate.acquire();
        let mut response = match self.agent.post(&self.config.endpoint).send_json(body) {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = response.status().as_u16();
        if status == 429 || status >= 500 {
            return Attempt::Retry(format!("HTTP {status}"));
        }
        if !(200..300).contains(&status) {
            let detail = response.body_mut().read_to_string().unwrap_or_default();
            return Attempt::Fatal(ClientError::Transport {
                attempts: 1,
                message: format!("HTTP {status}: {detail}"),
            });
        }
        match response.body_mut().read_json::<Resp>() {
            Ok(v) => Attempt::Done(v),
            Err(e) => Attempt::Fatal(ClientError::MalformedResponse(e.to_string())),
        }
    }

    /// POST `body` as JSON and decode the JSON response.
    pub fn post<Req: Serialize, Resp: DeserializeOwned>(&self, body: &Req) -> Result<Resp, ClientError> {
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(body) {
                Attempt::Done(v) => return Ok(v),
                Attempt::Fatal(ClientError::Transport { message, .. }) => {
                    return Err(ClientError::Transport { attempts, message })
                }
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(message) => {
                    if attempts > self.config.max_retries {
                        return Err(ClientError::Transport { attempts, message });
                    }
                    log::debug!(
                        "{} attempt {attempts} failed: {message}",
                        self.config.endpoint
                    );
                    std::thread::sleep(self.config.backoff(attempts - 1));
                }
            }
        }
    }
}

macro_rules! remote_role {
    ($name:ident) => {
        #[derive(Debug)]
        pub struct $name(pub HttpClient);

        impl $name {
            pub fn new(config: ClientConfig) -> Result<Self, ClientError> {
                Ok(Self(HttpClient::new(config)?))
            }
        }
    };
}

remote_role!(RemoteQg);
remote_role!(RemoteQa);
remote_role!(RemoteNli);
remote_role!(RemoteCandidates);

impl QuestionGenerator for RemoteQg {
    fn generate(&self, request: &QgRequest) -> Result<QgResponse, ClientError> {
        self.0.post(request)
    }
}

impl QuestionAnswerer for RemoteQa {
    fn answer(&self, request: &QaRequest) -> Result<QaResponse, ClientError> {
        let r: QaResponse = self.0.post(request)?;
        if r.no_answer && !r.answer.is_empty() {
            return Err(ClientError::MalformedResponse(
                "no_answer set with a non-empty answer".into(),
            ));
        }
        Ok(r)
    }
}

impl EntailmentScorer for RemoteNli {
    fn entail(&self, request: &NliRequest) -> Result<NliResponse, ClientError> {
        self.0.post(request)
    }
}

#[derive(Serialize)]
struct CandidateWireRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct CandidateWireResponse {
    candidates: Vec<AnswerCandidate>,
}

impl CandidateBackend for RemoteCandidates {
    fn extract(&self, summary: &Summary) -> Result<Vec<AnswerCandidate>, ClientError> {
        let r: CandidateWireResponse = self.0.post(&CandidateWireRequest {
            text: summary.text(),
        })?;
        Ok(r.candidates)
    }
}
