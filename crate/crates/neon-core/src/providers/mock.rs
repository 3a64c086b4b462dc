//! Deterministic in-process providers for offline runs and tests.

use std::collections::BTreeMap;

use super::{fnv1a64, CompletionParams, Embedder, LlmClient, ProviderError};
use crate::corpus::markup::strip_tags;

/// Hashed bag-of-words embedder: each lowercased token is hashed into one of
/// `dimension` buckets, counts accumulate, and the vector is L2-normalized.
/// Empty text embeds to the zero vector. Pure function of its input.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dimension: usize,
}

impl HashEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension >= 1);
        Self { dimension }
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self::new(64)
    }
}

impl Embedder for HashEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        let mut v = vec![0.0f64; self.dimension];
        for token in text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
        {
            let bucket = (fnv1a64(&token.to_lowercase()) % self.dimension as u64) as usize;
            v[bucket] += 1.0;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in &mut v {
                *x /= norm;
            }
        }
        Ok(v)
    }

    fn dimension(&self) -> usize {
        self.dimension
    }
}

/// Completion lookup keyed by FNV hash of the exact prompt, with an optional
/// fallback for unknown prompts.
#[derive(Debug, Default, Clone)]
pub struct ScriptedLlm {
    responses: BTreeMap<u64, String>,
    fallback: Option<String>,
}

impl ScriptedLlm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_fallback(fallback: impl Into<String>) -> Self {
        Self {
            responses: BTreeMap::new(),
            fallback: Some(fallback.into()),
        }
    }

    pub fn insert(&mut self, prompt: &str, response: impl Into<String>) {
        self.responses.insert(fnv1a64(prompt), response.into());
    }
}

impl LlmClient for ScriptedLlm {
    fn complete(&self, prompt: &str, _params: &CompletionParams) -> Result<String, ProviderError> {
        let hash = fnv1a64(prompt);
        if let Some(r) = self.responses.get(&hash) {
            return Ok(r.clone());
        }
        self.fallback
            .clone()
            .ok_or(ProviderError::CassetteMiss(hash))
    }

    fn model_id(&self) -> &str {
        "scripted-mock"
    }
}

/// Rule-based stand-in for a live model. Recognizes the pipeline's prompt
/// shapes and answers each one deterministically:
///
/// - subject-extraction prompts: copies chunk sentences that contain the
///   subject's name, as `(date, sentence)` lines, or `NONE`;
/// - pair-extraction prompts: copies sentences containing both names,
///   prefixed with their chunk's date, or an empty list;
/// - grounded-answer prompts: restates the supporting passages;
/// - judge prompts: a rating derived from the prompt hash, in range.
#[derive(Debug, Default, Clone)]
pub struct RuleMockLlm;

fn line_value<'a>(prompt: &'a str, key: &str) -> Option<&'a str> {
    prompt
        .lines()
        .find_map(|l| l.strip_prefix(key))
        .map(str::trim)
}

/// Chunk blocks: a `{header_prefix}{date}:` line followed by sentence lines
/// until a blank line.
fn chunk_blocks<'a>(prompt: &'a str, header_prefix: &str) -> Vec<(&'a str, Vec<String>)> {
    let mut blocks = Vec::new();
    let mut current: Option<(&str, Vec<String>)> = None;
    for line in prompt.lines() {
        if let Some(rest) = line.strip_prefix(header_prefix) {
            if let Some(done) = current.take() {
                blocks.push(done);
            }
            current = Some((rest.trim_end_matches(':').trim(), Vec::new()));
        } else if let Some((_, sentences)) = current.as_mut() {
            if line.trim().is_empty() {
                blocks.push(current.take().unwrap());
            } else {
                sentences.push(strip_tags(line.trim()));
            }
        }
    }
    if let Some(done) = current.take() {
        blocks.push(done);
    }
    blocks
}

fn contains_ci(haystack: &str, needle: &str) -> bool {
    haystack.to_lowercase().contains(&needle.to_lowercase())
}

impl RuleMockLlm {
    fn extract_pair(&self, prompt: &str) -> String {
        let subject = line_value(prompt, "Subject:").unwrap_or_default();
        let object = line_value(prompt, "Object:").unwrap_or_default();
        let mut lines = Vec::new();
        for (date, sentences) in chunk_blocks(prompt, "Chunk dated ") {
            for s in sentences {
                if contains_ci(&s, subject) && contains_ci(&s, object) {
                    lines.push(format!("({date}, {s})"));
                }
            }
        }
        lines.join("\n")
    }

    fn extract_subject(&self, prompt: &str) -> String {
        let subject = line_value(prompt, "Subject:").unwrap_or_default();
        let mut lines = Vec::new();
        for (date, sentences) in chunk_blocks(prompt, "News chunk dated ") {
            for s in sentences {
                if contains_ci(&s, subject) {
                    lines.push(format!("({date}, {s})"));
                }
            }
        }
        if lines.is_empty() {
            "NONE".to_string()
        } else {
            lines.join("\n")
        }
    }

    fn answer_from_passages(&self, prompt: &str) -> String {
        let mut passages = Vec::new();
        let mut in_block = false;
        for line in prompt.lines() {
            if line.starts_with("Supporting passages:") {
                in_block = true;
                continue;
            }
            if in_block {
                if line.trim().is_empty() {
                    break;
                }
                let text = line
                    .trim()
                    .trim_start_matches(|c: char| c.is_ascii_digit())
                    .trim_start_matches('.')
                    .trim();
                passages.push(text.to_string());
            }
        }
        format!("According to the dated reports: {}", passages.join(" "))
    }

    fn judge(&self, prompt: &str) -> String {
        let rating = fnv1a64(prompt) % 3;
        format!("{{\"rating\": {rating}, \"reason\": \"deterministic mock rating\"}}")
    }
}

impl LlmClient for RuleMockLlm {
    fn complete(&self, prompt: &str, _params: &CompletionParams) -> Result<String, ProviderError> {
        if prompt.contains("## Output format") {
            Ok(self.judge(prompt))
        } else if prompt.contains("\nObject: ") || prompt.starts_with("Object: ") {
            Ok(self.extract_pair(prompt))
        } else if prompt.contains("News chunk dated ") {
            Ok(self.extract_subject(prompt))
        } else if prompt.contains("Supporting passages:") {
            Ok(self.answer_from_passages(prompt))
        } else if prompt.contains("no supporting passages") {
            Ok("No information is available for the requested date.".to_string())
        } else {
            Ok("NONE".to_string())
        }
    }

    fn model_id(&self) -> &str {
        "rule-mock"
    }
}
