//! Temporal question answering: query reformulation, retrieval, and
//! grounded answer generation.

use serde::{Deserialize, Serialize};

use crate::datastore::{Datastore, ScoredEntry, StoreError};
use crate::date::DateStamp;
use crate::providers::{CompletionParams, Embedder, LlmClient, ProviderError};

/// One dictionary row mapping a surface form to a canonical entity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkerEntry {
    pub surface: String,
    pub entity_id: String,
    pub name: String,
}

/// Surface-form dictionary used for named-entity canonicalization during
/// reformulation. Matching is case-insensitive, longest-match-first, and
/// respects word boundaries.
#[derive(Debug, Default, Clone)]
pub struct Linker {
    entries: Vec<LinkerEntry>,
}

impl Linker {
    pub fn new(mut entries: Vec<LinkerEntry>) -> Self {
        entries.retain(|e| !e.surface.trim().is_empty());
        for e in &mut entries {
            e.surface = e.surface.to_lowercase();
        }
        // Longest surfaces first so the longest match wins at each position.
        entries.sort_by(|a, b| b.surface.len().cmp(&a.surface.len()).then(a.surface.cmp(&b.surface)));
        Self { entries }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    fn match_at<'a>(&'a self, lower: &str, pos: usize) -> Option<&'a LinkerEntry> {
        let rest = &lower[pos..];
        self.entries.iter().find(|e| {
            if !rest.starts_with(&e.surface) {
                return false;
            }
            let end = pos + e.surface.len();
            let before_ok = pos == 0
                || !lower[..pos]
                    .chars()
                    .next_back()
                    .is_some_and(|c| c.is_alphanumeric());
            let after_ok = end == lower.len()
                || !lower[end..].chars().next().is_some_and(|c| c.is_alphanumeric());
            before_ok && after_ok
        })
    }
}

/// A reformulated temporal query: `q' = "(Date: <Month D, YYYY>) " + q` with
/// surface forms replaced by canonical entity names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalQuery {
    pub raw: String,
    pub date: DateStamp,
    pub reformulated: String,
    pub linked_entities: Vec<String>,
}

/// Rewrites a telegraphic query: canonicalizes entity surface forms via the
/// linker and prefixes the natural-language query date. An existing
/// `(Date: ...)` prefix is replaced, never doubled.
pub fn reformulate(q: &str, t_q: DateStamp, linker: &Linker) -> TemporalQuery {
    let body = match q.strip_prefix("(Date: ") {
        Some(rest) => rest.split_once(") ").map(|(_, tail)| tail).unwrap_or(q),
        None => q,
    };

    let lower = body.to_lowercase();
    let mut out = String::with_capacity(body.len());
    let mut linked = Vec::new();
    let mut pos = 0;
    while pos < body.len() {
        // Positions iterate over char boundaries of the lowercased text;
        // to_lowercase preserves ASCII offsets but not arbitrary Unicode
        // lengths, so fall back to per-char copying when lengths diverge.
        if lower.len() == body.len() {
            if let Some(entry) = linker.match_at(&lower, pos) {
                out.push_str(&entry.name);
                if !linked.contains(&entry.entity_id) {
                    linked.push(entry.entity_id.clone());
                }
                pos += entry.surface.len();
                continue;
            }
        }
        let ch = body[pos..].chars().next().expect("pos on char boundary");
        out.push(ch);
        pos += ch.len_utf8();
    }

    TemporalQuery {
        raw: q.to_string(),
        date: t_q,
        reformulated: format!("(Date: {}) {}", t_q.pretty(), out),
        linked_entities: linked,
    }
}

/// A generated answer with the exact support that was placed in the prompt.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QaResponse {
    pub text: String,
    pub support: Vec<ScoredEntry>,
    pub query: TemporalQuery,
    pub model_info: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RetrievalStrategy {
    #[default]
    Temporal,
    Generic,
    Hybrid,
}

impl RetrievalStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            RetrievalStrategy::Temporal => "temporal",
            RetrievalStrategy::Generic => "generic",
            RetrievalStrategy::Hybrid => "hybrid",
        }
    }
}

/// How to retrieve support for a query.
#[derive(Debug, Clone, Copy)]
pub struct RetrievalSpec {
    pub strategy: RetrievalStrategy,
    /// Retrieval depth.
    pub k: usize,
    /// Temporal back-off range in days.
    pub r: u32,
}

#[derive(Debug, thiserror::Error)]
pub enum QaError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

/// Renders the numbered, date-prefixed passage list exactly as it appears
/// in the answer prompt (and in faithfulness judging).
pub fn render_passages(support: &[ScoredEntry]) -> String {
    support
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{}. ({}) {}", i + 1, s.entry.date.compact(), s.entry.text))
        .collect::<Vec<_>>()
        .join("\n")
}

/// The grounded-answer prompt. Frozen by a golden test.
pub fn render_answer_prompt(tq: &TemporalQuery, support: &[ScoredEntry]) -> String {
    if support.is_empty() {
        return format!(
            "There are no supporting passages for the user's query below. State that \
             the information is unavailable for the requested date; do not guess and \
             do not use outside knowledge.\n\nQuery: {}\n\nAnswer:\n",
            tq.reformulated
        );
    }
    format!(
        "Answer the user's query using only the numbered supporting passages below. \
         Each passage is a dated report; the date appears in parentheses before the \
         text. Give a temporally precise answer for the query date and state the date \
         or dates of the events you use. Do not add information that is not in the \
         passages.\n\nQuery: {}\n\nSupporting passages:\n{}\n\nAnswer:\n",
        tq.reformulated,
        render_passages(support)
    )
}

/// Retrieves support for the query per the chosen strategy and generates a
/// grounded answer. With zero support the abstention prompt variant is used.
pub fn answer(
    tq: &TemporalQuery,
    store: &Datastore,
    embedder: &dyn Embedder,
    spec: RetrievalSpec,
    llm: &dyn LlmClient,
    params: &CompletionParams,
) -> Result<QaResponse, QaError> {
    let RetrievalSpec { strategy, k, r } = spec;
    let support = match strategy {
        // Temporal retrieval matches on the raw query; the date constraint
        // is carried by the index, not the text.
        RetrievalStrategy::Temporal => store.retrieve_temporal(embedder, &tq.raw, tq.date, k, r)?,
        RetrievalStrategy::Generic => store.retrieve_generic(embedder, &tq.reformulated, k)?,
        RetrievalStrategy::Hybrid => {
            store.retrieve_hybrid(embedder, &tq.raw, &tq.reformulated, tq.date, k, r)?
        }
    };
    let prompt = render_answer_prompt(tq, &support);
    let text = llm.complete(&prompt, params)?;
    Ok(QaResponse {
        text,
        support,
        query: tq.clone(),
        model_info: llm.model_id().to_string(),
    })
}
