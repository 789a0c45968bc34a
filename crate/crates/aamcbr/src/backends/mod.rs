//! Concrete backend implementations.
//!
//! - [`OracleBackend`]: deterministic ground-truth stand-in for the language
//!   model, so the whole pipeline runs offline.
//! - [`NoisyOracleBackend`]: the oracle with seeded coverage flips and
//!   per-factor extraction omissions/additions.
//! - [`HttpBackend`]: live chat-completion client over a pluggable transport.
//! - [`CachingBackend`]: content-addressed response cache around any backend.

pub mod cache;
pub mod http;
pub mod noisy;
pub mod oracle;

pub use cache::CachingBackend;
pub use http::{HttpBackend, HttpResponse, RetryPolicy, Transport};
pub use noisy::NoisyOracleBackend;
pub use oracle::{OracleBackend, ScenarioCollision, TruthTable};
