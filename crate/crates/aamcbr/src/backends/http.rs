//! Live chat-completion backend.
//!
//! Speaks the common `POST /chat/completions` JSON shape. The API key is read
//! from an environment variable at call time and never stored, logged or
//! serialized. Transport is a trait so tests can inject canned status
//! sequences without any network.

use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use rand::Rng;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::backend::{Backend, BackendError};

/// Status code plus body of one HTTP exchange.
#[derive(Clone, Debug)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Minimal POST-JSON transport, pluggable for tests.
pub trait Transport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        api_key: &str,
        body: &Value,
        timeout: Duration,
    ) -> Result<HttpResponse, BackendError>;
}

struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    fn new() -> Self {
        ReqwestTransport {
            client: reqwest::blocking::Client::new(),
        }
    }
}

impl Transport for ReqwestTransport {
    fn post_json(
        &self,
        url: &str,
        api_key: &str,
        body: &Value,
        timeout: Duration,
    ) -> Result<HttpResponse, BackendError> {
        let response = self
            .client
            .post(url)
            .bearer_auth(api_key)
            .json(body)
            .timeout(timeout)
            .send()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let body = response
            .text()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(HttpResponse { status, body })
    }
}

/// Exponential backoff with jitter.
#[derive(Clone, Debug)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(8),
        }
    }
}

impl RetryPolicy {
    fn delay_for(&self, attempt: u32) -> Duration {
        let exp = self.base_delay.saturating_mul(1u32 << attempt.min(16));
        let capped = exp.min(self.max_delay);
        // up to 25% jitter so concurrent retries spread out
        let jitter = rand::thread_rng().gen_range(0.0..0.25);
        capped.mul_f64(1.0 + jitter)
    }
}

/// Chat-completion client for an OpenAI-style endpoint.
pub struct HttpBackend {
    endpoint: String,
    model: String,
    api_key_env: String,
    timeout: Duration,
    retry: RetryPolicy,
    temperature: Option<f64>,
    max_tokens: Option<u32>,
    transport: Box<dyn Transport>,
    request_log: Option<Mutex<File>>,
}

impl fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // the key value is never held, only the variable name
        f.debug_struct("HttpBackend")
            .field("endpoint", &self.endpoint)
            .field("model", &self.model)
            .field("api_key_env", &self.api_key_env)
            .field("timeout", &self.timeout)
            .field("retry", &self.retry)
            .finish_non_exhaustive()
    }
}

impl HttpBackend {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, api_key_env: impl Into<String>) -> Self {
        HttpBackend {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key_env: api_key_env.into(),
            timeout: Duration::from_secs(60),
            retry: RetryPolicy::default(),
            temperature: Some(0.0),
            max_tokens: None,
            transport: Box::new(ReqwestTransport::new()),
            request_log: None,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    /// Decoding temperature; defaults to the most deterministic setting.
    pub fn with_temperature(mut self, temperature: Option<f64>) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_max_tokens(mut self, max_tokens: Option<u32>) -> Self {
        self.max_tokens = max_tokens;
        self
    }

    pub fn with_transport(mut self, transport: Box<dyn Transport>) -> Self {
        self.transport = transport;
        self
    }

    /// Appends one JSON line per request to `path`.
    pub fn with_request_log(mut self, path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        self.request_log = Some(Mutex::new(file));
        Ok(self)
    }

    fn log_exchange(&self, prompt: &str, status: Option<u16>, latency: Duration, usage: Option<&Value>) {
        let Some(log) = &self.request_log else { return };
        let ts = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0);
        let entry = json!({
            "ts_ms": ts,
            "model": self.model,
            "status": status,
            "latency_ms": latency.as_millis(),
            "prompt_sha256": hex::encode(Sha256::digest(prompt.as_bytes())),
            "usage": usage,
        });
        if let Ok(mut file) = log.lock() {
            let _ = writeln!(file, "{entry}");
        }
    }

    fn parse_completion(body: &str) -> Result<(String, Option<Value>), BackendError> {
        let value: Value = serde_json::from_str(body)
            .map_err(|e| BackendError::Transport(format!("malformed response body: {e}")))?;
        let text = value["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| BackendError::Transport("response has no message content".to_string()))?
            .to_string();
        let usage = value.get("usage").cloned();
        Ok((text, usage))
    }
}

impl Backend for HttpBackend {
    fn complete(&self, prompt: &str) -> Result<String, BackendError> {
        let api_key = std::env::var(&self.api_key_env).map_err(|_| {
            BackendError::AuthFailure(format!("environment variable `{}` is not set", self.api_key_env))
        })?;

        let mut body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
        });
        if let Some(t) = self.temperature {
            body["temperature"] = json!(t);
        }
        if let Some(m) = self.max_tokens {
            body["max_tokens"] = json!(m);
        }

        let mut attempt = 0u32;
        loop {
            let start = Instant::now();
            let result = self.transport.post_json(&self.endpoint, &api_key, &body, self.timeout);
            let latency = start.elapsed();
            match result {
                Ok(response) if response.status == 200 => {
                    let (text, usage) = Self::parse_completion(&response.body)?;
                    self.log_exchange(prompt, Some(200), latency, usage.as_ref());
                    return Ok(text);
                }
                Ok(response) if response.status == 401 || response.status == 403 => {
                    self.log_exchange(prompt, Some(response.status), latency, None);
                    return Err(BackendError::AuthFailure(format!(
                        "endpoint returned status {}",
                        response.status
                    )));
                }
                Ok(response) if response.status == 429 || response.status >= 500 => {
                    self.log_exchange(prompt, Some(response.status), latency, None);
                    if attempt >= self.retry.max_retries {
                        return Err(if response.status == 429 {
                            BackendError::RateLimited { attempts: attempt + 1 }
                        } else {
                            BackendError::Transport(format!("status {} after retries", response.status))
                        });
                    }
                }
                Ok(response) => {
                    self.log_exchange(prompt, Some(response.status), latency, None);
                    return Err(BackendError::Transport(format!(
                        "unexpected status {}: {}",
                        response.status,
                        response.body.chars().take(200).collect::<String>()
                    )));
                }
                Err(e) => {
                    self.log_exchange(prompt, None, latency, None);
                    if attempt >= self.retry.max_retries {
                        return Err(e);
                    }
                }
            }
            std::thread::sleep(self.retry.delay_for(attempt));
            attempt += 1;
        }
    }

    fn identity(&self) -> String {
        format!("http:{}:{}", self.endpoint, self.model)
    }
}
