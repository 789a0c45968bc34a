//! Abstract argumentation for case-based reasoning, with and without
//! language-model agents.
//!
//! The symbolic core decides a new case against a case base of factorized
//! precedents: the case base, a default outcome and the new case become an
//! argumentation framework, and the new case inherits the default outcome
//! exactly when the default argument survives in the grounded extension.
//! The agentic layer lifts the same semantics onto *non-factorized* case
//! bases: a per-case agent reads each previous case as plain text, decides
//! whether the new case's factors cover it, extracts the implied factors if
//! so, and refuses otherwise — so previous-case text never leaves its agent.
//!
//! A deterministic oracle backend, a seeded noisy oracle, a scenario
//! composer and a test-set generator make the entire experiment pipeline
//! reproducible offline; live HTTP backends slot into the same interface.
//!
//! # Quick start
//!
//! ```
//! use aamcbr::model::{Case, CaseBase, NewCase, Outcome};
//! use aamcbr::aacbr::aacbr_outcome;
//!
//! let turned_down = Case::new(["n4".into()], Outcome::Zero);
//! let approved = Case::new(["p2".into(), "n3".into(), "n4".into()], Outcome::One);
//! let case_base = CaseBase::new([turned_down, approved]).unwrap();
//!
//! let applicant = NewCase::new(["n4".into(), "p5".into()]);
//! let verdict = aacbr_outcome(&case_base, Outcome::Zero, &applicant);
//! assert_eq!(verdict.outcome, Outcome::Zero);
//! ```
//!
//! # Examples
//!
//! Each major capability has a runnable example:
//!
//! - `worked_example` — the two-precedent credit case under both defaults,
//!   with framework DOT output and dispute-tree explanations.
//! - `grounded_semantics` — the generic argumentation engine and its layer
//!   trace.
//! - `agentic_pipeline` — per-case agents factorizing text cases through the
//!   oracle backend.
//! - `generate_dataset` — scenario pool and test-set files.
//! - `noisy_experiment` — coverage accuracy and precision under seeded flip
//!   noise, against the coverage-probability law.
//! - `full_experiment` — the end-to-end offline prediction experiment with
//!   reports.
//! - `live_backend` — wiring an HTTP chat-completion backend with caching
//!   (skips itself without credentials).
//!
//! ```bash
//! cargo run --example worked_example
//! ```
//!
//! The `aamcbr` binary exposes the same pipeline as subcommands
//! (`gen-scenarios`, `gen-testsets`, `run-coverage`, `run-extraction`,
//! `run-predict`, `report`).

pub mod aacbr;
pub mod aaf;
pub mod agents;
pub mod backend;
pub mod backends;
pub mod config;
pub mod datagen;
pub mod experiments;
pub mod model;
pub mod prompts;

pub use aacbr::{aacbr_outcome, build_framework, dispute_tree, CbrVerdict};
pub use aaf::{AAFramework, Argument, GroundedExtension};
pub use agents::{run_aam_cbr, AamResult, AgentConfig};
pub use backend::{Backend, BackendError};
pub use model::{credit_domain, Case, CaseBase, Factor, FactorDomain, FactorId, NewCase, Outcome};
