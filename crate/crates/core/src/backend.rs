//! Text-generation backends.
//!
//! [`Backend`] is the abstraction every generator works against: one
//! prompt in, one completion text out. [`HttpBackend`] speaks the standard
//! JSON chat-completions protocol against a base URL from the environment;
//! the deterministic mock lives in [`crate::mock`]. The client surfaces
//! auth, rate-limit, and timeout conditions distinctly and never retries —
//! callers own retry policy. A token bucket inside the client protects
//! every caller from exceeding a configured request rate.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Environment variable naming the chat-completions base URL.
pub const API_BASE_ENV: &str = "NETWEAVE_API_BASE";
/// Environment variable holding the bearer token, if the endpoint needs one.
pub const API_KEY_ENV: &str = "NETWEAVE_API_KEY";

const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);
const DEFAULT_MAX_TOKENS: u32 = 4096;

/// One completion request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendRequest {
    pub model: String,
    pub prompt: String,
    pub temperature: f64,
    /// Forwarded to the wire protocol when the endpoint supports seeded
    /// sampling. Determinism is never assumed from remote backends; all
    /// reproducibility guarantees attach to the mock.
    pub seed_hint: Option<u64>,
}

impl BackendRequest {
    pub fn new(model: impl Into<String>, prompt: impl Into<String>, temperature: f64) -> Self {
        let request = BackendRequest {
            model: model.into(),
            prompt: prompt.into(),
            temperature,
            seed_hint: None,
        };
        assert!(!request.prompt.is_empty(), "prompt must be non-empty");
        request
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("authentication rejected (401): {0}")]
    Auth(String),
    #[error("rate limited (429){}", retry_after.map(|d| format!(", retry after {}s", d.as_secs())).unwrap_or_default())]
    RateLimited { retry_after: Option<Duration> },
    #[error("request timed out: {0}")]
    Timeout(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("http status {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed response: missing `{0}`")]
    Protocol(String),
    #[error("backend misconfigured: {0}")]
    Config(String),
}

impl BackendError {
    /// Whether a retry with the same request can plausibly succeed.
    pub fn is_transient(&self) -> bool {
        matches!(
            self,
            BackendError::RateLimited { .. }
                | BackendError::Timeout(_)
                | BackendError::Transport(_)
                | BackendError::Http { status: 500..=599, .. }
        )
    }
}

/// A text-generation service: prompt in, first completion text out.
pub trait Backend: Send + Sync {
    fn complete(&self, request: &BackendRequest) -> Result<String, BackendError>;

    /// Short identifier for transcripts.
    fn name(&self) -> &'static str;
}

/// Simple token bucket: `per_minute` requests sustained, bursting up to
/// the same amount.
struct TokenBucket {
    capacity: f64,
    tokens: f64,
    refill_per_sec: f64,
    last: Instant,
}

impl TokenBucket {
    fn new(per_minute: u32) -> TokenBucket {
        TokenBucket {
            capacity: per_minute as f64,
            tokens: per_minute as f64,
            refill_per_sec: per_minute as f64 / 60.0,
            last: Instant::now(),
        }
    }

    /// Take one token, returning how long to wait first (zero if a token
    /// is available now).
    fn take(&mut self) -> Duration {
        let now = Instant::now();
        self.tokens = (self.tokens + self.refill_per_sec * now.duration_since(self.last).as_secs_f64())
            .min(self.capacity);
        self.last = now;
        if self.tokens >= 1.0 {
            self.tokens -= 1.0;
            Duration::ZERO
        } else {
            let deficit = 1.0 - self.tokens;
            self.tokens -= 1.0;
            Duration::from_secs_f64(deficit / self.refill_per_sec)
        }
    }
}

/// Chat-completions client over HTTP. Shareable across threads; the rate
/// limiter is the only synchronized element.
pub struct HttpBackend {
    base_url: String,
    api_key: Option<String>,
    model_max_tokens: u32,
    client: reqwest::blocking::Client,
    limiter: Option<Mutex<TokenBucket>>,
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: [WireMessage<'a>; 1],
    temperature: f64,
    max_tokens: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

impl HttpBackend {
    pub fn new(base_url: impl Into<String>, api_key: Option<String>) -> HttpBackend {
        HttpBackend {
            base_url: base_url.into(),
            api_key,
            model_max_tokens: DEFAULT_MAX_TOKENS,
            client: reqwest::blocking::Client::builder()
                .timeout(DEFAULT_TIMEOUT)
                .build()
                .expect("default client builds"),
            limiter: None,
        }
    }

    /// Configure from `NETWEAVE_API_BASE` / `NETWEAVE_API_KEY`.
    pub fn from_env() -> Result<HttpBackend, BackendError> {
        let base = std::env::var(API_BASE_ENV)
            .map_err(|_| BackendError::Config(format!("{API_BASE_ENV} is not set")))?;
        let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Ok(HttpBackend::new(base, key))
    }

    pub fn with_rate_limit(mut self, per_minute: u32) -> HttpBackend {
        self.limiter = Some(Mutex::new(TokenBucket::new(per_minute.max(1))));
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> HttpBackend {
        self.client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .expect("client builds");
        self
    }

    pub fn with_max_tokens(mut self, max_tokens: u32) -> HttpBackend {
        self.model_max_tokens = max_tokens;
        self
    }

    fn throttle(&self) {
        if let Some(limiter) = &self.limiter {
            let wait = limiter.lock().expect("limiter lock").take();
            if !wait.is_zero() {
                std::thread::sleep(wait);
            }
        }
    }
}

impl Backend for HttpBackend {
    fn complete(&self, request: &BackendRequest) -> Result<String, BackendError> {
        self.throttle();
        let url = format!("{}/chat/completions", self.base_url.trim_end_matches('/'));
        let body = WireRequest {
            model: &request.model,
            messages: [WireMessage {
                role: "user",
                content: &request.prompt,
            }],
            temperature: request.temperature,
            max_tokens: self.model_max_tokens,
            seed: request.seed_hint,
        };
        let mut builder = self.client.post(&url).json(&body);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().map_err(|e| {
            if e.is_timeout() {
                BackendError::Timeout(e.to_string())
            } else {
                BackendError::Transport(e.to_string())
            }
        })?;

        let status = response.status();
        if status.as_u16() == 401 {
            let body = response.text().unwrap_or_default();
            return Err(BackendError::Auth(body));
        }
        if status.as_u16() == 429 {
            let retry_after = response
                .headers()
                .get("retry-after")
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.parse::<u64>().ok())
                .map(Duration::from_secs);
            return Err(BackendError::RateLimited { retry_after });
        }
        if !status.is_success() {
            let body = response.text().unwrap_or_default();
            return Err(BackendError::Http {
                status: status.as_u16(),
                body,
            });
        }

        let payload: serde_json::Value = response
            .json()
            .map_err(|e| BackendError::Protocol(format!("valid JSON body ({e})")))?;
        let choice = payload
            .get("choices")
            .and_then(|c| c.get(0))
            .ok_or_else(|| BackendError::Protocol("choices[0]".to_string()))?;
        let content = choice
            .get("message")
            .and_then(|m| m.get("content"))
            .and_then(|c| c.as_str())
            .ok_or_else(|| BackendError::Protocol("choices[0].message.content".to_string()))?;
        if choice.get("finish_reason").and_then(|f| f.as_str()) == Some("length") {
            eprintln!(
                "warning: completion truncated at max_tokens={} for model {}",
                self.model_max_tokens, request.model
            );
        }
        Ok(content.to_string())
    }

    fn name(&self) -> &'static str {
        "remote"
    }
}
