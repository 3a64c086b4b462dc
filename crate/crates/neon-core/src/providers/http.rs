//! HTTP-backed completion client (chat-completions wire shape) with retry,
//! token-bucket rate limiting, and a pluggable transport for tests.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{CompletionParams, LlmClient, ProviderError, RetryPolicy};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HttpLlmConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub credential_env: String,
    pub timeout_ms: u64,
    pub retry: RetryPolicy,
    pub rate_limit: Option<RateLimit>,
}

impl Default for HttpLlmConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".to_string(),
            model: "gpt-4o".to_string(),
            credential_env: "NEON_LLM_API_KEY".to_string(),
            timeout_ms: 60_000,
            retry: RetryPolicy::default(),
            rate_limit: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RateLimit {
    pub capacity: f64,
    pub refill_per_sec: f64,
}

/// Minimal transport surface so tests can inject failures and canned bodies.
pub trait Transport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        bearer: &str,
        body: &serde_json::Value,
        timeout: Duration,
    ) -> Result<(u16, String), ProviderError>;
}

pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new() -> Self {
        Self {
            client: reqwest::blocking::Client::new(),
        }
    }
}

impl Default for ReqwestTransport {
    fn default() -> Self {
        Self::new()
    }
}

impl Transport for ReqwestTransport {
    fn post_json(
        &self,
        url: &str,
        bearer: &str,
        body: &serde_json::Value,
        timeout: Duration,
    ) -> Result<(u16, String), ProviderError> {
        let response = self
            .client
            .post(url)
            .bearer_auth(bearer)
            .json(body)
            .timeout(timeout)
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    ProviderError::Timeout
                } else {
                    ProviderError::Transport(e.to_string())
                }
            })?;
        let status = response.status().as_u16();
        let text = response
            .text()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok((status, text))
    }
}

struct TokenBucket {
    tokens: f64,
    capacity: f64,
    refill_per_sec: f64,
    last: Instant,
}

impl TokenBucket {
    fn new(limit: RateLimit) -> Self {
        Self {
            tokens: limit.capacity,
            capacity: limit.capacity,
            refill_per_sec: limit.refill_per_sec,
            last: Instant::now(),
        }
    }

    /// Blocks until a token is available, then takes it.
    fn acquire(&mut self) {
        loop {
            let now = Instant::now();
            let elapsed = now.duration_since(self.last).as_secs_f64();
            self.last = now;
            self.tokens = (self.tokens + elapsed * self.refill_per_sec).min(self.capacity);
            if self.tokens >= 1.0 {
                self.tokens -= 1.0;
                return;
            }
            let deficit = (1.0 - self.tokens) / self.refill_per_sec.max(1e-9);
            std::thread::sleep(Duration::from_secs_f64(deficit.min(1.0)));
        }
    }
}

pub struct HttpLlm<T: Transport = ReqwestTransport> {
    config: HttpLlmConfig,
    transport: T,
    bucket: Option<Mutex<TokenBucket>>,
    total_retries: AtomicU64,
}

impl HttpLlm<ReqwestTransport> {
    pub fn new(config: HttpLlmConfig) -> Self {
        Self::with_transport(config, ReqwestTransport::new())
    }
}

impl<T: Transport> HttpLlm<T> {
    pub fn with_transport(config: HttpLlmConfig, transport: T) -> Self {
        let bucket = config.rate_limit.map(|l| Mutex::new(TokenBucket::new(l)));
        Self {
            config,
            transport,
            bucket,
            total_retries: AtomicU64::new(0),
        }
    }

    /// Retries spent across all calls so far.
    pub fn total_retries(&self) -> u64 {
        self.total_retries.load(Ordering::Relaxed)
    }

    fn request_once(
        &self,
        bearer: &str,
        prompt: &str,
        params: &CompletionParams,
    ) -> Result<String, ProviderError> {
        if let Some(bucket) = &self.bucket {
            bucket.lock().expect("rate limiter lock").acquire();
        }
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        });
        let timeout = Duration::from_millis(self.config.timeout_ms);
        let (status, text) = self
            .transport
            .post_json(&self.config.endpoint, bearer, &body, timeout)?;
        match status {
            200 => parse_completion_body(&text),
            401 | 403 => Err(ProviderError::Auth(self.config.credential_env.clone())),
            429 => Err(ProviderError::RateLimited),
            s => Err(ProviderError::Http(s)),
        }
    }
}

fn parse_completion_body(text: &str) -> Result<String, ProviderError> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| ProviderError::MalformedResponse(e.to_string()))?;
    value["choices"][0]["message"]["content"]
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| {
            ProviderError::MalformedResponse("missing choices[0].message.content".to_string())
        })
}

impl<T: Transport> LlmClient for HttpLlm<T> {
    fn complete(&self, prompt: &str, params: &CompletionParams) -> Result<String, ProviderError> {
        // Credential check happens before any network traffic.
        let bearer = std::env::var(&self.config.credential_env)
            .map_err(|_| ProviderError::Auth(self.config.credential_env.clone()))?;
        let (value, retries) = super::with_retry(&self.config.retry, || {
            self.request_once(&bearer, prompt, params)
        })?;
        self.total_retries
            .fetch_add(u64::from(retries), Ordering::Relaxed);
        Ok(value)
    }

    fn model_id(&self) -> &str {
        &self.config.model
    }
}
