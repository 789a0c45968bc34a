//! Run configuration: a TOML file mirroring every CLI flag, plus backend
//! construction.
//!
//! Sub-seeds for the scenario pool, the test-set draw and backend noise all
//! derive from the single master seed, so one `(seed, concurrency)` pair
//! fixes every output byte of an offline run.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::Backend;
use crate::backends::{CachingBackend, HttpBackend, NoisyOracleBackend, OracleBackend, TruthTable};
use crate::experiments::Strategy;
use crate::model::{FactorDomain, Outcome};

#[derive(Error, Debug)]
pub enum ConfigError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("unknown backend `{0}` (expected oracle, noisy, or http)")]
    UnknownBackend(String),
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error("unknown defaults choice `{0}` (expected 0, 1, or both)")]
    UnknownDefaults(String),
    #[error("http backend requires `http_model` to be set")]
    MissingModel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Oracle,
    Noisy,
    Http,
}

impl BackendKind {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        match s {
            "oracle" => Ok(BackendKind::Oracle),
            "noisy" => Ok(BackendKind::Noisy),
            "http" => Ok(BackendKind::Http),
            other => Err(ConfigError::UnknownBackend(other.to_string())),
        }
    }
}

/// Everything a run needs; every field has a flag twin.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub backend: BackendKind,
    pub noise_flip: f64,
    pub noise_omit: f64,
    pub noise_add: f64,
    pub seed: u64,
    pub testsets: usize,
    /// "0", "1" or "both"
    pub defaults: String,
    pub concurrency: usize,
    pub out: PathBuf,
    pub cache: Option<PathBuf>,
    pub strategies: Vec<String>,
    pub with_replacement: bool,
    pub factorized_baseline: bool,
    pub max_attempts: u32,
    pub parse_retries: u32,
    pub domain_file: Option<PathBuf>,
    pub http_endpoint: String,
    pub http_model: Option<String>,
    pub api_key_env: String,
    pub http_timeout_secs: u64,
    pub http_max_retries: u32,
    pub temperature: Option<f64>,
    pub request_log: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            backend: BackendKind::Oracle,
            noise_flip: 0.0,
            noise_omit: 0.0,
            noise_add: 0.0,
            seed: 42,
            testsets: 50,
            defaults: "both".to_string(),
            concurrency: 8,
            out: PathBuf::from("out"),
            cache: None,
            strategies: Strategy::ALL.iter().map(|s| s.key().to_string()).collect(),
            with_replacement: false,
            factorized_baseline: false,
            max_attempts: 10,
            parse_retries: 3,
            domain_file: None,
            http_endpoint: "https://api.openai.com/v1/chat/completions".to_string(),
            http_model: None,
            api_key_env: "LLM_API_KEY".to_string(),
            http_timeout_secs: 60,
            http_max_retries: 3,
            temperature: Some(0.0),
            request_log: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Ok(toml::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn pool_seed(&self) -> u64 {
        derive_seed(self.seed, 0x706f6f6c) // "pool"
    }

    pub fn testset_seed(&self) -> u64 {
        derive_seed(self.seed, 0x74657374) // "test"
    }

    pub fn backend_seed(&self) -> u64 {
        derive_seed(self.seed, 0x6e6f6973) // "nois"
    }

    pub fn defaults_list(&self) -> Result<Vec<Outcome>, ConfigError> {
        match self.defaults.as_str() {
            "0" => Ok(vec![Outcome::Zero]),
            "1" => Ok(vec![Outcome::One]),
            "both" => Ok(vec![Outcome::Zero, Outcome::One]),
            other => Err(ConfigError::UnknownDefaults(other.to_string())),
        }
    }

    pub fn strategy_list(&self) -> Result<Vec<Strategy>, ConfigError> {
        self.strategies
            .iter()
            .map(|s| Strategy::parse(s).ok_or_else(|| ConfigError::UnknownStrategy(s.clone())))
            .collect()
    }

    pub fn domain(&self) -> Result<FactorDomain, ConfigError> {
        match &self.domain_file {
            Some(path) => Ok(FactorDomain::load(path)?),
            None => Ok(crate::model::credit_domain()),
        }
    }

    /// Builds the configured backend over a shared truth table, wrapping it
    /// in the response cache when a cache directory is set.
    pub fn build_backend(
        &self,
        domain: &FactorDomain,
        table: &TruthTable,
    ) -> Result<Box<dyn Backend>, ConfigError> {
        let base: Box<dyn Backend> = match self.backend {
            BackendKind::Oracle => Box::new(
                OracleBackend::new(domain.clone(), table.clone()).with_gen_seed(self.pool_seed()),
            ),
            BackendKind::Noisy => Box::new(NoisyOracleBackend::new(
                OracleBackend::new(domain.clone(), table.clone()).with_gen_seed(self.pool_seed()),
                self.noise_flip,
                self.noise_omit,
                self.noise_add,
                self.backend_seed(),
            )),
            BackendKind::Http => {
                let model = self.http_model.clone().ok_or(ConfigError::MissingModel)?;
                let mut http = HttpBackend::new(&self.http_endpoint, model, &self.api_key_env)
                    .with_timeout(Duration::from_secs(self.http_timeout_secs))
                    .with_retry(crate::backends::RetryPolicy {
                        max_retries: self.http_max_retries,
                        ..Default::default()
                    })
                    .with_temperature(self.temperature);
                if let Some(log) = &self.request_log {
                    http = http.with_request_log(log)?;
                }
                Box::new(http)
            }
        };
        match &self.cache {
            Some(dir) => Ok(Box::new(CachingBackend::new(base, dir.clone())?)),
            None => Ok(base),
        }
    }
}

fn derive_seed(master: u64, salt: u64) -> u64 {
    let mut x = master ^ salt.wrapping_mul(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}
