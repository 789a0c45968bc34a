//! Wiring a live chat-completion backend with the response cache.
//!
//! Needs `LLM_API_KEY` (or the variable named in `--api-key-env` terms of
//! your own config) plus endpoint/model below; without a key the example
//! prints what it would do and exits. Live calls are never part of the test
//! suite.
//!
//! Run: `LLM_API_KEY=… cargo run --example live_backend`

use std::time::Duration;

use aamcbr::agents::{determine_coverage, AgentConfig};
use aamcbr::backend::Backend;
use aamcbr::backends::{CachingBackend, HttpBackend, RetryPolicy};
use aamcbr::model::credit_domain;

fn main() {
    let key_env = "LLM_API_KEY";
    let endpoint = std::env::var("LLM_ENDPOINT")
        .unwrap_or_else(|_| "https://api.openai.com/v1/chat/completions".to_string());
    let model = std::env::var("LLM_MODEL").unwrap_or_else(|_| "gpt-4o-mini".to_string());

    if std::env::var(key_env).is_err() {
        println!("{key_env} is not set; skipping the live call.");
        println!("would call {endpoint} with model {model}, caching under ./cache");
        return;
    }

    let http = HttpBackend::new(endpoint, model, key_env)
        .with_timeout(Duration::from_secs(45))
        .with_retry(RetryPolicy::default())
        .with_temperature(Some(0.0));
    let backend = CachingBackend::new(http, "cache").expect("cache dir is writable");

    let domain = credit_domain();
    let config = AgentConfig::default();
    let sentences = domain.all_sentences();
    let case_text = "Riley fills out a credit card application online. \
         The applicant opened a first borrowing account only months ago. \
         The application now awaits assessment.";

    println!("asking {} about one coverage question…", backend.identity());
    match determine_coverage(&backend, &config.prompts, &sentences, case_text, config.parse_retries) {
        Ok(verdict) => println!(
            "relevant={} (raw reply {:?}); a second run will hit the cache",
            verdict.relevant, verdict.raw_response
        ),
        Err(e) => println!("live call failed: {e}"),
    }
}
