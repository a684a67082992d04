//! Run configuration: one TOML document with a section per module.

use std::path::Path;
use std::sync::Arc;

use blueprint_core::annotate::{AnnotateConfig, SortMode};
use blueprint_core::candidates::HeuristicBackend;
use blueprint_core::clients::{
    ClientConfig, ClientError, EntailmentScorer, MockBackend, ModelClients, NliRequest, NliResponse,
    QaRequest, QaResponse, QgRequest, QgResponse, QuestionAnswerer, QuestionGenerator, RemoteCandidates,
    RemoteNli, RemoteQa, RemoteQg,
};
use blueprint_core::clients::remote::{NLI_URL_ENV, QA_URL_ENV, QG_URL_ENV};
use blueprint_core::control::ControlConfig;
use blueprint_core::eval::EvalConfig;
use blueprint_core::formats::FormatConfig;
use blueprint_core::propsplit::SplitConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: String,
        source: toml::de::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Endpoints for the learned components. A role left out here falls back
/// to its environment variable; candidates fall back to the heuristic
/// extractor.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClientsConfig {
    pub qg: Option<ClientConfig>,
    pub qa: Option<ClientConfig>,
    pub nli: Option<ClientConfig>,
    pub candidates: Option<ClientConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub workers: usize,
    /// Seed for `sort_mode = { random = .. }`; `--seed` overrides it.
    pub seed: Option<u64>,
    pub split: SplitConfig,
    pub annotate: AnnotateConfig,
    pub format: FormatConfig,
    pub control: ControlConfig,
    pub eval: EvalConfig,
    pub clients: ClientsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            workers: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            seed: None,
            split: SplitConfig::default(),
            annotate: AnnotateConfig::default(),
            format: FormatConfig::default(),
            control: ControlConfig::default(),
            eval: EvalConfig::default(),
            clients: ClientsConfig::default(),
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> ConfigError {
    ConfigError::Invalid(e.to_string())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source,
        })
    }

    /// Apply command-line overrides.
    pub fn with_overrides(mut self, workers: Option<usize>, seed: Option<u64>) -> Self {
        if let Some(w) = workers {
            self.workers = w;
        }
        if seed.is_some() {
            self.seed = seed;
        }
        if let (Some(seed), SortMode::Random(s)) = (self.seed, &mut self.annotate.sort_mode) {
            *s = seed;
        }
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.workers < 1 {
            return Err(invalid("workers must be >= 1"));
        }
        self.split.validate().map_err(invalid)?;
        self.annotate.validate().map_err(invalid)?;
        self.format.validate().map_err(invalid)?;
        self.control.validate().map_err(invalid)?;
        self.eval.faithfulness.validate().map_err(invalid)?;
        let c = &self.clients;
        for cfg in [&c.qg, &c.qa, &c.nli, &c.candidates].into_iter().flatten() {
            cfg.validate().map_err(invalid)?;
        }
        Ok(())
    }

    /// Build the backends: the mock when fixtures are given, otherwise the
    /// HTTP clients. Roles with no endpoint answer every call with a
    /// config error.
    pub fn clients(&self, mock_fixtures: Option<&Path>) -> Result<ModelClients, ConfigError> {
        if let Some(path) = mock_fixtures {
            let mock = MockBackend::load(path).map_err(invalid)?;
            return Ok(ModelClients::from_mock(mock));
        }
        let c = &self.clients;
        let qg: Arc<dyn QuestionGenerator> = match resolve(&c.qg, QG_URL_ENV) {
            Some(cfg) => Arc::new(RemoteQg::new(cfg).map_err(invalid)?),
            None => Arc::new(Unconfigured("qg", QG_URL_ENV)),
        };
        let qa: Arc<dyn QuestionAnswerer> = match resolve(&c.qa, QA_URL_ENV) {
            Some(cfg) => Arc::new(RemoteQa::new(cfg).map_err(invalid)?),
            None => Arc::new(Unconfigured("qa", QA_URL_ENV)),
        };
        let nli: Arc<dyn EntailmentScorer> = match resolve(&c.nli, NLI_URL_ENV) {
            Some(cfg) => Arc::new(RemoteNli::new(cfg).map_err(invalid)?),
            None => Arc::new(Unconfigured("nli", NLI_URL_ENV)),
        };
        let clients = ModelClients {
            qg,
            qa,
            nli,
            candidates: Arc::new(HeuristicBackend),
        };
        Ok(match &c.candidates {
            Some(cfg) => ModelClients {
                candidates: Arc::new(RemoteCandidates::new(cfg.clone()).map_err(invalid)?),
                ..clients
            },
            None => clients,
        })
    }
}

fn resolve(configured: &Option<ClientConfig>, env: &str) -> Option<ClientConfig> {
    match configured {
        Some(cfg) => Some(cfg.clone()),
        None => std::env::var(env)
            .ok()
            .filter(|url| !url.trim().is_empty())
            .map(ClientConfig::with_endpoint),
    }
}

/// Stand-in for a role with no endpoint.
struct Unconfigured(&'static str, &'static str);

impl Unconfigured {
    fn error(&self) -> ClientError {
        ClientError::Config(format!(
            "no {} endpoint: set [clients.{}] in the config, {} or --mock-fixtures",
            self.0, self.0, self.1
        ))
    }
}

impl QuestionGenerator for Unconfigured {
    fn generate(&self, _: &QgRequest) -> Result<QgResponse, ClientError> {
        Err(self.error())
    }
}

impl QuestionAnswerer for Unconfigured {
    fn answer(&self, _: &QaRequest) -> Result<QaResponse, ClientError> {
        Err(self.error())
    }
}

impl EntailmentScorer for Unconfigured {
    fn entail(&self, _: &NliRequest) -> Result<NliResponse, ClientError> {
        Err(self.error())
    }
}
