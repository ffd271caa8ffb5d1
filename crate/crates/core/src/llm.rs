//! Chat-completion providers.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::http::{Endpoint, JsonClient, RetryPolicy};

pub const DEFAULT_TEMPERATURE: f64 = 0.8;
pub const DEFAULT_MAX_TOKENS: u32 = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl CompletionRequest {
    pub fn new(prompt: impl Into<String>) -> Self {
        Self {
            prompt: prompt.into(),
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }

    pub fn temperature(mut self, t: f64) -> Self {
        self.temperature = t;
        self
    }

    pub fn max_tokens(mut self, n: u32) -> Self {
        self.max_tokens = n;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.prompt.trim().is_empty() {
            return Err(Error::Config("prompt must be non-empty".into()));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(Error::Config("temperature must be >= 0".into()));
        }
        if self.max_tokens == 0 {
            return Err(Error::Config("max_tokens must be positive".into()));
        }
        Ok(())
    }
}

pub trait LlmProvider: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, request: &CompletionRequest) -> Result<String>;
}

impl<T: LlmProvider + ?Sized> LlmProvider for std::sync::Arc<T> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn complete(&self, request: &CompletionRequest) -> Result<String> {
        (**self).complete(request)
    }
}

impl<T: LlmProvider + ?Sized> LlmProvider for &T {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn complete(&self, request: &CompletionRequest) -> Result<String> {
        (**self).complete(request)
    }
}

/// How a script entry recognizes a prompt.
#[derive(Debug, Clone)]
pub enum Matcher {
    Any,
    /// Every listed substring must occur in the prompt.
    ContainsAll(Vec<String>),
    Regex(Regex),
}

impl Matcher {
    pub fn matches(&self, prompt: &str) -> bool {
        match self {
            Matcher::Any => true,
            Matcher::ContainsAll(parts) => parts.iter().all(|p| prompt.contains(p.as_str())),
            Matcher::Regex(re) => re.is_match(prompt),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Reply {
    Text(String),
    /// Simulated retryable provider failure.
    Fail(String),
}

#[derive(Debug, Clone)]
pub struct ScriptEntry {
    pub matcher: Matcher,
    pub reply: Reply,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum WhenSpec {
    One(String),
    Many(Vec<String>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EntrySpec {
    when: Option<WhenSpec>,
    regex: Option<String>,
    reply: Option<String>,
    error: Option<String>,
}

/// Deterministic test double. Prompts are resolved against the script in
/// order and the first matching entry answers; no match is a configuration
/// error.
#[derive(Debug, Default)]
pub struct ScriptedProvider {
    entries: Vec<ScriptEntry>,
    calls: AtomicUsize,
}

impl ScriptedProvider {
    pub fn new(entries: Vec<ScriptEntry>) -> Self {
        Self {
            entries,
            calls: AtomicUsize::new(0),
        }
    }

    /// Single wildcard entry answering every prompt with `reply`.
    pub fn always(reply: impl Into<String>) -> Self {
        Self::new(vec![ScriptEntry {
            matcher: Matcher::Any,
            reply: Reply::Text(reply.into()),
        }])
    }

    pub fn push(&mut self, matcher: Matcher, reply: Reply) {
        self.entries.push(ScriptEntry { matcher, reply });
    }

    pub fn when(mut self, parts: &[&str], reply: impl Into<String>) -> Self {
        self.push(
            Matcher::ContainsAll(parts.iter().map(|s| s.to_string()).collect()),
            Reply::Text(reply.into()),
        );
        self
    }

    pub fn fail_when(mut self, parts: &[&str], message: impl Into<String>) -> Self {
        self.push(
            Matcher::ContainsAll(parts.iter().map(|s| s.to_string()).collect()),
            Reply::Fail(message.into()),
        );
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// Parses a JSON array of `{when | regex, reply | error}` objects.
    /// `when` is a substring, a list of substrings, or `"*"`.
    pub fn from_json(source: &str) -> Result<Self> {
        let specs: Vec<EntrySpec> = serde_json::from_str(source)?;
        let mut entries = Vec::with_capacity(specs.len());
        for (i, spec) in specs.into_iter().enumerate() {
            let matcher = match (spec.when, spec.regex) {
                (Some(_), Some(_)) => {
                    return Err(Error::Config(format!(
                        "script entry {i}: use either `when` or `regex`"
                    )))
                }
                (None, None) => Matcher::Any,
                (Some(WhenSpec::One(s)), None) if s == "*" => Matcher::Any,
                (Some(WhenSpec::One(s)), None) => Matcher::ContainsAll(vec![s]),
                (Some(WhenSpec::Many(v)), None) => Matcher::ContainsAll(v),
                (None, Some(re)) => Matcher::Regex(Regex::new(&re).map_err(|e| {
                    Error::Config(format!("script entry {i}: bad regex: {e}"))
                })?),
            };
            let reply = match (spec.reply, spec.error) {
                (Some(r), None) => Reply::Text(r),
                (None, Some(e)) => Reply::Fail(e),
                _ => {
                    return Err(Error::Config(format!(
                        "script entry {i}: exactly one of `reply` or `error` is required"
                    )))
                }
            };
            entries.push(ScriptEntry { matcher, reply });
        }
        Ok(Self::new(entries))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl LlmProvider for ScriptedProvider {
    fn name(&self) -> &str {
        "scripted"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String> {
        request.validate()?;
        self.calls.fetch_add(1, Ordering::SeqCst);
        let entry = self
            .entries
            .iter()
            .find(|e| e.matcher.matches(&request.prompt))
            .ok_or_else(|| {
                let head: String = request.prompt.chars().take(80).collect();
                Error::Config(format!("no script entry matches prompt starting {head:?}"))
            })?;
        match &entry.reply {
            Reply::Text(t) => Ok(t.clone()),
            Reply::Fail(msg) => Err(Error::Retryable(msg.clone())),
        }
    }
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReply,
}

#[derive(Deserialize)]
struct ChatReply {
    content: Option<String>,
}

/// Chat endpoint speaking `{model, messages, temperature, max_tokens}` →
/// `{choices: [{message: {content}}]}`.
pub struct RemoteChat {
    client: JsonClient,
    retry: RetryPolicy,
}

impl RemoteChat {
    pub fn new(endpoint: Endpoint) -> Self {
        Self {
            client: JsonClient::new(endpoint),
            retry: RetryPolicy::default(),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }
}

impl LlmProvider for RemoteChat {
    fn name(&self) -> &str {
        &self.client.endpoint().model
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String> {
        request.validate()?;
        let body = ChatRequest {
            model: &self.client.endpoint().model,
            messages: [ChatMessage {
                role: "user",
                content: &request.prompt,
            }],
            temperature: request.temperature,
            max_tokens: request.max_tokens,
        };
        let resp: ChatResponse = self.retry.run(|| self.client.post(&body))?;
        resp.choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .filter(|c| !c.trim().is_empty())
            .ok_or_else(|| Error::Rejected("empty completion".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wildcard_answers_everything() {
        let p = ScriptedProvider::always("OK");
        assert_eq!(p.complete(&CompletionRequest::new("anything")).unwrap(), "OK");
        assert_eq!(p.complete(&CompletionRequest::new("else")).unwrap(), "OK");
    }

    #[test]
    fn no_match_is_config_error() {
        let p = ScriptedProvider::default().when(&["needle"], "x");
        assert!(matches!(
            p.complete(&CompletionRequest::new("haystack")),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn first_matching_entry_wins() {
        let p = ScriptedProvider::default()
            .when(&["a", "b"], "both")
            .when(&["a"], "only a");
        assert_eq!(p.complete(&CompletionRequest::new("a b")).unwrap(), "both");
        assert_eq!(p.complete(&CompletionRequest::new("a")).unwrap(), "only a");
    }

    #[test]
    fn json_script() {
        let p = ScriptedProvider::from_json(
            r#"[{"when": ["concepts", "pain"], "reply": "pain"},
                {"regex": "^Q\\d+", "reply": "numbered"},
                {"when": "boom", "error": "outage"},
                {"when": "*", "reply": "fallback"}]"#,
        )
        .unwrap();
        let ask = |s: &str| p.complete(&CompletionRequest::new(s));
        assert_eq!(ask("concepts for pain").unwrap(), "pain");
        assert_eq!(ask("Q12 what").unwrap(), "numbered");
        assert!(ask("boom").unwrap_err().is_retryable());
        assert_eq!(ask("other").unwrap(), "fallback");
        assert!(ScriptedProvider::from_json(r#"[{"when":"x"}]"#).is_err());
    }

    #[test]
    fn scripted_runs_repeat_exactly() {
        let p = ScriptedProvider::default().when(&["x"], "reply text");
        let a: Vec<_> = (0..5)
            .map(|_| p.complete(&CompletionRequest::new("x")).unwrap())
            .collect();
        assert!(a.iter().all(|r| r == "reply text"));
        assert_eq!(p.calls(), 5);
    }

    #[test]
    fn invalid_requests_rejected() {
        let p = ScriptedProvider::always("OK");
        assert!(p.complete(&CompletionRequest::new("  ")).is_err());
        assert!(p
            .complete(&CompletionRequest::new("x").temperature(-1.0))
            .is_err());
        assert!(p.complete(&CompletionRequest::new("x").max_tokens(0)).is_err());
    }
}
