//! External model dependencies behind two interfaces: text completion
//! ([`LlmClient`]) and text embedding ([`Embedder`]). Deterministic
//! in-process implementations live in [`mock`]; the HTTP-backed client in
//! [`http`]; record/replay of completions in [`cassette`].

pub mod cassette;
pub mod http;
pub mod mock;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompletionParams {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for CompletionParams {
    fn default() -> Self {
        Self {
            temperature: 0.0,
            max_tokens: 1024,
        }
    }
}

/// A text-completion model. Implementations must be shareable across
/// concurrent callers.
pub trait LlmClient: Send + Sync {
    fn complete(&self, prompt: &str, params: &CompletionParams) -> Result<String, ProviderError>;

    /// Stable identifier recorded on responses (e.g. the model name).
    fn model_id(&self) -> &str;
}

impl<T: LlmClient + ?Sized> LlmClient for Box<T> {
    fn complete(&self, prompt: &str, params: &CompletionParams) -> Result<String, ProviderError> {
        (**self).complete(prompt, params)
    }

    fn model_id(&self) -> &str {
        (**self).model_id()
    }
}

/// A text-embedding model with a fixed output dimension. Embeddings are
/// produced in f64; the datastore narrows them to f32 for storage, and
/// queries go through the same narrowing so scores stay reproducible.
pub trait Embedder: Send + Sync {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError>;

    fn dimension(&self) -> usize;
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum ProviderError {
    #[error("missing credential: environment variable {0} is not set")]
    Auth(String),
    #[error("rate limited by provider")]
    RateLimited,
    #[error("request timed out")]
    Timeout,
    #[error("malformed provider response: {0}")]
    MalformedResponse(String),
    #[error("provider returned HTTP status {0}")]
    Http(u16),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("no recorded response for prompt hash {0:016x}")]
    CassetteMiss(u64),
    #[error("embedding failed: {0}")]
    Embed(String),
}

impl ProviderError {
    /// Whether a retry could plausibly succeed.
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            ProviderError::RateLimited
                | ProviderError::Timeout
                | ProviderError::Transport(_)
                | ProviderError::Http(_)
        )
    }
}

/// Retry with exponential backoff: `attempts` tries total, sleeping
/// `base_delay_ms * 2^i` between them. A zero base delay disables sleeping.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay_ms: 100,
        }
    }
}

impl RetryPolicy {
    pub fn no_delay(attempts: u32) -> Self {
        Self {
            attempts,
            base_delay_ms: 0,
        }
    }
}

/// Runs `op` under `policy`. Returns the value plus the number of retries
/// spent, or the last error once attempts are exhausted or the error is not
/// retryable.
pub fn with_retry<T>(
    policy: &RetryPolicy,
    mut op: impl FnMut() -> Result<T, ProviderError>,
) -> Result<(T, u32), ProviderError> {
    let attempts = policy.attempts.max(1);
    let mut last = None;
    for attempt in 0..attempts {
        match op() {
            Ok(v) => return Ok((v, attempt)),
            Err(e) => {
                let retryable = e.is_retryable();
                last = Some(e);
                if !retryable || attempt + 1 == attempts {
                    break;
                }
                if policy.base_delay_ms > 0 {
                    let delay = policy.base_delay_ms.saturating_mul(1 << attempt.min(16));
                    std::thread::sleep(std::time::Duration::from_millis(delay));
                }
            }
        }
    }
    Err(last.expect("at least one attempt"))
}

/// FNV-1a over UTF-8 bytes. Stable across platforms and releases; used to
/// key scripted responses and cassette entries.
pub fn fnv1a64(text: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in text.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
