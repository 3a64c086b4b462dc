//! Pipeline configuration: one TOML file with per-stage sections. Unknown
//! keys are rejected so that typos cannot silently fall back to defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::providers::http::HttpLlmConfig;
use crate::qa::RetrievalStrategy;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub chunking: ChunkingConfig,
    #[serde(default)]
    pub dedup: DedupConfig,
    #[serde(default)]
    pub extraction: ExtractionConfig,
    #[serde(default)]
    pub retrieval: RetrievalConfig,
    #[serde(default)]
    pub providers: ProvidersConfig,
    #[serde(default)]
    pub eval: EvalConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChunkingConfig {
    /// Sentences per chunk.
    pub m: usize,
    /// Offset between consecutive chunk starts; at most `m`.
    pub stride: usize,
}

impl Default for ChunkingConfig {
    fn default() -> Self {
        Self { m: 5, stride: 3 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DedupConfig {
    /// Trigram-Jaccard similarity at or above which a chunk is a duplicate.
    pub threshold: f64,
    /// Only compare chunks dated within this many days; absent = global.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_days: Option<i64>,
}

impl Default for DedupConfig {
    fn default() -> Self {
        Self {
            threshold: 0.8,
            window_days: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractionConfig {
    /// `m1` (per-subject) or `m2` (per-pair).
    pub variant: String,
    /// Chunks per prompt for the pair variant.
    pub k_batch: usize,
    /// Pairs kept per subject when mining co-occurrences.
    pub top_p: usize,
    /// Provider attempts per prompt.
    pub retries: u32,
    /// Worker threads for provider calls.
    pub parallelism: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            variant: "m2".into(),
            k_batch: 4,
            top_p: 20,
            retries: 3,
            parallelism: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetrievalConfig {
    pub strategy: RetrievalStrategy,
    /// Retrieval depth; absent = the store's default (10 for interaction
    /// stores, 5 for chunk stores).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Back-off day range for temporal retrieval.
    pub r: u32,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            strategy: RetrievalStrategy::Temporal,
            k: None,
            r: 3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProvidersConfig {
    /// `mock` (deterministic, offline) or `http`.
    pub llm: String,
    /// `mock` is the only built-in embedder.
    pub embedder: String,
    pub embedding_dimension: usize,
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub http: Option<HttpLlmConfig>,
    /// Record completions to, or replay them from, a cassette file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cassette: Option<CassetteConfig>,
}

impl Default for ProvidersConfig {
    fn default() -> Self {
        Self {
            llm: "mock".into(),
            embedder: "mock".into(),
            embedding_dimension: 64,
            temperature: 0.0,
            max_tokens: 1024,
            http: None,
            cassette: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CassetteConfig {
    /// `record` or `replay`.
    pub mode: String,
    pub path: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// `zero` or `few`.
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub examples_path: Option<String>,
    /// Clamp out-of-range ratings into 0-2 instead of excluding them.
    #[serde(default)]
    pub clamp_out_of_range: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            mode: "zero".into(),
            examples_path: None,
            clamp_out_of_range: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let config: PipelineConfig = toml::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError::Invalid(msg));
        if self.chunking.m < 1 {
            return fail("chunking.m must be at least 1".into());
        }
        if self.chunking.stride < 1 || self.chunking.stride > self.chunking.m {
            return fail(format!(
                "chunking.stride must lie in 1..={} (got {})",
                self.chunking.m, self.chunking.stride
            ));
        }
        if !(0.0..=1.0).contains(&self.dedup.threshold) {
            return fail(format!(
                "dedup.threshold must lie in [0, 1] (got {})",
                self.dedup.threshold
            ));
        }
        if !matches!(self.extraction.variant.as_str(), "m1" | "m2") {
            return fail(format!(
                "extraction.variant must be m1 or m2 (got {:?})",
                self.extraction.variant
            ));
        }
        if self.extraction.k_batch < 1 {
            return fail("extraction.k_batch must be at least 1".into());
        }
        if self.extraction.top_p < 1 {
            return fail("extraction.top_p must be at least 1".into());
        }
        if self.extraction.retries < 1 {
            return fail("extraction.retries must be at least 1".into());
        }
        if self.extraction.parallelism < 1 {
            return fail("extraction.parallelism must be at least 1".into());
        }
        if let Some(k) = self.retrieval.k {
            if k < 1 {
                return fail("retrieval.k must be at least 1".into());
            }
        }
        if !matches!(self.providers.llm.as_str(), "mock" | "http") {
            return fail(format!(
                "providers.llm must be mock or http (got {:?})",
                self.providers.llm
            ));
        }
        if self.providers.embedder != "mock" {
            return fail(format!(
                "providers.embedder must be mock (got {:?})",
                self.providers.embedder
            ));
        }
        if self.providers.embedding_dimension < 1 {
            return fail("providers.embedding_dimension must be at least 1".into());
        }
        if !self.providers.temperature.is_finite() || !(0.0..=2.0).contains(&self.providers.temperature)
        {
            return fail(format!(
                "providers.temperature must lie in [0, 2] (got {})",
                self.providers.temperature
            ));
        }
        if self.providers.llm == "http" && self.providers.http.is_none() {
            return fail("providers.llm = \"http\" requires a [providers.http] section".into());
        }
        if let Some(c) = &self.providers.cassette {
            if !matches!(c.mode.as_str(), "record" | "replay") {
                return fail(format!(
                    "providers.cassette.mode must be record or replay (got {:?})",
                    c.mode
                ));
            }
        }
        if !matches!(self.eval.mode.as_str(), "zero" | "few") {
            return fail(format!(
                "eval.mode must be zero or few (got {:?})",
                self.eval.mode
            ));
        }
        Ok(())
    }
}
