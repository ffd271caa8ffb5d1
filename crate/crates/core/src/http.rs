//! Blocking JSON-over-HTTP helpers shared by the remote gateways.

use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Bounded retries with exponential backoff. Only [`Error::Retryable`]
/// failures are retried.
#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 4,
            base_delay: Duration::from_millis(250),
            max_delay: Duration::from_secs(8),
        }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        Self {
            max_attempts: 1,
            ..Self::default()
        }
    }

    pub fn delay_for(&self, attempt: u32) -> Duration {
        let factor = 2u32.saturating_pow(attempt.saturating_sub(1));
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }

    pub fn run<T>(&self, mut op: impl FnMut() -> Result<T>) -> Result<T> {
        let attempts = self.max_attempts.max(1);
        let mut attempt = 1;
        loop {
            match op() {
                Err(e) if e.is_retryable() && attempt < attempts => {
                    let wait = self.delay_for(attempt);
                    tracing::warn!(attempt, ?wait, error = %e, "retrying request");
                    thread::sleep(wait);
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

/// Endpoint settings for a remote provider.
#[derive(Debug, Clone)]
pub struct Endpoint {
    pub url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
}

impl Endpoint {
    pub fn new(url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            model: model.into(),
            api_key: None,
            timeout: Duration::from_secs(60),
        }
    }

    pub fn with_api_key(mut self, key: impl Into<String>) -> Self {
        self.api_key = Some(key.into());
        self
    }
}

pub(crate) struct JsonClient {
    agent: ureq::Agent,
    endpoint: Endpoint,
}

impl JsonClient {
    pub(crate) fn new(endpoint: Endpoint) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(endpoint.timeout))
            .build()
            .into();
        Self { agent, endpoint }
    }

    pub(crate) fn endpoint(&self) -> &Endpoint {
        &self.endpoint
    }

    pub(crate) fn post<B: Serialize, R: DeserializeOwned>(&self, body: &B) -> Result<R> {
        let mut req = self.agent.post(&self.endpoint.url);
        if let Some(key) = &self.endpoint.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(classify)?;
        resp.body_mut()
            .read_json::<R>()
            .map_err(|e| Error::Rejected(format!("malformed response body: {e}")))
    }
}

fn classify(err: ureq::Error) -> Error {
    match err {
        ureq::Error::StatusCode(code @ (401 | 403)) => Error::Auth(format!("HTTP {code}")),
        ureq::Error::StatusCode(code) if (400..500).contains(&code) => {
            Error::Rejected(format!("HTTP {code}"))
        }
        ureq::Error::StatusCode(code) => Error::Retryable(format!("HTTP {code}")),
        other => Error::Retryable(other.to_string()),
    }
}
