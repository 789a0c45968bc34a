//! The pluggable text-completion contract every backend implements.
//!
//! Keeping the contract a pure prompt-in/text-out interface is what makes the
//! deterministic oracle, the seeded noisy oracle and live HTTP clients
//! interchangeable throughout the pipeline.

use std::sync::Arc;

use thiserror::Error;

#[derive(Error, Debug)]
pub enum BackendError {
    /// The oracle was asked about a scenario text it has no truth entry for.
    #[error("scenario text not present in the truth table: `{0}`")]
    UnknownScenario(String),
    #[error("prompt does not match any known template shape")]
    UnrecognizedPromptShape,
    #[error("malformed prompt: {0}")]
    MalformedPrompt(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("rate limited; gave up after {attempts} attempt(s)")]
    RateLimited { attempts: u32 },
    #[error("authentication failure: {0}")]
    AuthFailure(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

/// A single-turn completion backend.
pub trait Backend: Send + Sync {
    /// Completes one prompt. Deterministic backends must return identical
    /// text for identical prompts; live backends need not.
    fn complete(&self, prompt: &str) -> Result<String, BackendError>;

    /// Backend name plus model tag, used for cache keys and reports.
    fn identity(&self) -> String;

    /// Backends that cannot tolerate concurrent calls return true and the
    /// orchestrator serializes them.
    fn single_flight(&self) -> bool {
        false
    }
}

impl Backend for Box<dyn Backend> {
    fn complete(&self, prompt: &str) -> Result<String, BackendError> {
        (**self).complete(prompt)
    }

    fn identity(&self) -> String {
        (**self).identity()
    }

    fn single_flight(&self) -> bool {
        (**self).single_flight()
    }
}

impl Backend for Arc<dyn Backend> {
    fn complete(&self, prompt: &str) -> Result<String, BackendError> {
        (**self).complete(prompt)
    }

    fn identity(&self) -> String {
        (**self).identity()
    }

    fn single_flight(&self) -> bool {
        (**self).single_flight()
    }
}
