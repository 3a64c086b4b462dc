//! Entity-interaction graph construction.
//!
//! Two extraction variants build the graph: the subject variant prompts once
//! per (subject, chunk); the pair variant mines co-occurring entity pairs by
//! TF-IDF, batches their co-mentioning chunks by time, and prompts once per
//! (pair, batch).

pub mod parse;
pub mod prompts;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Chunk;
use crate::date::DateStamp;
use crate::providers::{with_retry, CompletionParams, LlmClient, RetryPolicy};

pub use parse::{parse_extractions, ParseContext, ParseOutcome};
pub use prompts::{build_prompt_m1, build_prompt_m2};

/// Which pipeline produced an interaction. `Chunk` marks datastore entries
/// built directly from news chunks (the chunk-retrieval baseline) rather
/// than extracted interactions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    M1,
    M2,
    Chunk,
}

/// An entity id together with its display name, as used in prompts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRef {
    pub id: String,
    pub name: String,
}

/// Where an interaction was reported.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InteractionSource {
    pub article_id: String,
    pub source: String,
}

/// One timestamped, lexicalized entity interaction: a graph edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub date: DateStamp,
    pub subject: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<String>,
    pub text: String,
    pub variant: Variant,
    pub provenance: Vec<InteractionSource>,
}

/// The assembled graph: interactions plus the subject set and covered
/// timeframe.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NeonGraph {
    pub interactions: Vec<Interaction>,
    pub subjects: BTreeSet<String>,
    pub timeframe: Option<(DateStamp, DateStamp)>,
}

impl NeonGraph {
    pub fn new(subjects: BTreeSet<String>, interactions: Vec<Interaction>) -> Self {
        let timeframe = interactions
            .iter()
            .map(|i| i.date)
            .fold(None, |acc: Option<(DateStamp, DateStamp)>, d| match acc {
                None => Some((d, d)),
                Some((lo, hi)) => Some((lo.min(d), hi.max(d))),
            });
        Self {
            interactions,
            subjects,
            timeframe,
        }
    }

    pub fn len(&self) -> usize {
        self.interactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interactions.is_empty()
    }
}

/// A candidate (subject, object) pair scored by co-occurrence TF-IDF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityPair {
    pub subject: String,
    pub object: String,
    pub score: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("empty corpus: no chunks to mine pairs from")]
    EmptyCorpus,
    #[error("subject {subject} does not occur in the chunk")]
    SubjectNotInChunk { subject: String },
    #[error("pair ({subject}, {object}) does not occur in every chunk of the batch")]
    PairNotInChunk { subject: String, object: String },
}

/// Counters for one extraction run, written as the metrics sidecar.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionMetrics {
    pub prompts: u64,
    pub parsed: u64,
    pub rejected: u64,
    pub provider_failures: u64,
}

impl ExtractionMetrics {
    fn absorb(&mut self, other: ExtractionMetrics) {
        self.prompts += other.prompts;
        self.parsed += other.parsed;
        self.rejected += other.rejected;
        self.provider_failures += other.provider_failures;
    }
}

/// Per-subject top-`top_p` co-occurring objects ranked by
/// `tf(s, o) * ln(N / (1 + df(o)))`, where `tf` counts chunks containing
/// both entities, `df(o)` counts chunks containing the object, and `N` is
/// the corpus size. Ties break by lexicographic object id; subjects are
/// processed in ascending id order.
pub fn select_target_pairs(
    chunks: &[Chunk],
    subjects: &BTreeSet<String>,
    top_p: usize,
) -> Result<Vec<EntityPair>, GraphError> {
    let n = chunks.len();
    if n == 0 {
        return Err(GraphError::EmptyCorpus);
    }
    assert!(top_p >= 1, "top_p must be at least 1");

    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for chunk in chunks {
        for entity in &chunk.entities {
            *df.entry(entity).or_default() += 1;
        }
    }

    let mut pairs = Vec::new();
    for subject in subjects {
        let mut tf: BTreeMap<&str, usize> = BTreeMap::new();
        for chunk in chunks {
            if !chunk.entities.contains(subject) {
                continue;
            }
            for entity in &chunk.entities {
                if entity != subject {
                    *tf.entry(entity).or_default() += 1;
                }
            }
        }
        let mut scored: Vec<EntityPair> = tf
            .into_iter()
            .map(|(object, tf)| {
                let idf = (n as f64 / (1 + df[object]) as f64).ln();
                EntityPair {
                    subject: subject.clone(),
                    object: object.to_string(),
                    score: tf as f64 * idf,
                }
            })
            .collect();
        scored.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .expect("tf-idf scores are finite")
                .then_with(|| a.object.cmp(&b.object))
        });
        scored.truncate(top_p);
        pairs.extend(scored);
    }
    Ok(pairs)
}

/// Sorts chunks ascending by `(date, article_id)` and splits them into
/// consecutive groups of `k`; the final batch holds the remainder.
pub fn batch_chunks(mut chunks: Vec<Chunk>, k: usize) -> Vec<Vec<Chunk>> {
    assert!(k >= 1, "batch size must be at least 1");
    chunks.sort_by(|a, b| {
        (a.date, a.article_id().to_string()).cmp(&(b.date, b.article_id().to_string()))
    });
    let mut batches = Vec::new();
    while !chunks.is_empty() {
        let rest = chunks.split_off(k.min(chunks.len()));
        batches.push(std::mem::replace(&mut chunks, rest));
    }
    batches
}

#[derive(Debug, Clone)]
pub struct ExtractOptions {
    pub retry: RetryPolicy,
    pub params: CompletionParams,
    /// Worker threads for provider calls; 1 means sequential.
    pub parallelism: usize,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            retry: RetryPolicy::default(),
            params: CompletionParams::default(),
            parallelism: 1,
        }
    }
}

fn chunk_provenance(chunks: &[&Chunk]) -> Vec<(String, String, DateStamp)> {
    chunks
        .iter()
        .flat_map(|c| {
            c.provenance
                .iter()
                .map(|p| (p.article_id.clone(), p.source.clone(), p.date))
        })
        .collect()
}

fn run_tasks<T: Send + Sync, R: Send>(
    tasks: Vec<T>,
    parallelism: usize,
    f: impl Fn(&T) -> R + Send + Sync,
) -> Vec<R> {
    if parallelism <= 1 {
        tasks.iter().map(f).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .expect("worker pool");
        pool.install(|| tasks.par_iter().map(f).collect())
    }
}

/// Subject-variant extraction: one prompt per (subject, chunk) with the
/// subject mentioned in the chunk; every produced interaction carries the
/// chunk's date. Provider failures are counted and skipped, never fatal.
pub fn extract_m1(
    subjects: &[EntityRef],
    chunks: &[Chunk],
    llm: &dyn LlmClient,
    opts: &ExtractOptions,
) -> (NeonGraph, ExtractionMetrics) {
    let mut tasks: Vec<(&EntityRef, &Chunk)> = Vec::new();
    for subject in subjects {
        for chunk in chunks {
            if chunk.entities.contains(&subject.id) {
                tasks.push((subject, chunk));
            }
        }
    }

    let results = run_tasks(tasks, opts.parallelism, |task| {
        let (subject, chunk) = (task.0, task.1);
        let prompt = build_prompt_m1(subject, chunk).expect("subject checked against chunk");
        let mut metrics = ExtractionMetrics {
            prompts: 1,
            ..Default::default()
        };
        match with_retry(&opts.retry, || llm.complete(&prompt, &opts.params)) {
            Ok((output, _)) => {
                let dates = [chunk.date];
                let provenance = chunk_provenance(&[chunk]);
                let ctx = ParseContext {
                    variant: Variant::M1,
                    subject,
                    object: None,
                    dates: &dates,
                    provenance: &provenance,
                };
                let outcome = parse_extractions(&output, &ctx);
                metrics.parsed += outcome.interactions.len() as u64;
                metrics.rejected += outcome.rejected;
                (outcome.interactions, metrics)
            }
            Err(_) => {
                metrics.provider_failures += 1;
                (Vec::new(), metrics)
            }
        }
    });

    let mut interactions = Vec::new();
    let mut metrics = ExtractionMetrics::default();
    for (found, m) in results {
        interactions.extend(found);
        metrics.absorb(m);
    }
    let subject_ids = subjects.iter().map(|s| s.id.clone()).collect();
    (NeonGraph::new(subject_ids, interactions), metrics)
}

/// Pair-variant extraction: for each (subject, object) pair, the chunks
/// mentioning both are batched by time and prompted per batch. Line dates
/// are validated against the batch; undated lines expand over the batch's
/// unique timestamps.
pub fn extract_m2(
    pairs: &[(EntityRef, EntityRef)],
    chunks: &[Chunk],
    llm: &dyn LlmClient,
    k: usize,
    opts: &ExtractOptions,
) -> (NeonGraph, ExtractionMetrics) {
    assert!(k >= 1, "batch size must be at least 1");
    let mut tasks: Vec<(&EntityRef, &EntityRef, Vec<Chunk>)> = Vec::new();
    for (subject, object) in pairs {
        let relevant: Vec<Chunk> = chunks
            .iter()
            .filter(|c| c.entities.contains(&subject.id) && c.entities.contains(&object.id))
            .cloned()
            .collect();
        for batch in batch_chunks(relevant, k) {
            tasks.push((subject, object, batch));
        }
    }

    let results = run_tasks(tasks, opts.parallelism, |task| {
        let (subject, object, batch) = (task.0, task.1, &task.2);
        let prompt = build_prompt_m2(subject, object, batch).expect("batch built from pair");
        let mut metrics = ExtractionMetrics {
            prompts: 1,
            ..Default::default()
        };
        match with_retry(&opts.retry, || llm.complete(&prompt, &opts.params)) {
            Ok((output, _)) => {
                let dates: Vec<DateStamp> = batch
                    .iter()
                    .map(|c| c.date)
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect();
                let refs: Vec<&Chunk> = batch.iter().collect();
                let provenance = chunk_provenance(&refs);
                let ctx = ParseContext {
                    variant: Variant::M2,
                    subject,
                    object: Some(object),
                    dates: &dates,
                    provenance: &provenance,
                };
                let outcome = parse_extractions(&output, &ctx);
                metrics.parsed += outcome.interactions.len() as u64;
                metrics.rejected += outcome.rejected;
                (outcome.interactions, metrics)
            }
            Err(_) => {
                metrics.provider_failures += 1;
                (Vec::new(), metrics)
            }
        }
    });

    let mut interactions = Vec::new();
    let mut metrics = ExtractionMetrics::default();
    for (found, m) in results {
        interactions.extend(found);
        metrics.absorb(m);
    }
    let subject_ids = pairs.iter().map(|(s, _)| s.id.clone()).collect();
    (NeonGraph::new(subject_ids, interactions), metrics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Provenance;

    fn chunk(id: &str, date: &str, entities: &[&str]) -> Chunk {
        let date = DateStamp::parse(date).unwrap();
        Chunk {
            sentences: vec![format!("Sentence in {id}.")],
            mentions: Vec::new(),
            entities: entities.iter().map(|e| e.to_string()).collect(),
            date,
            provenance: vec![Provenance {
                article_id: id.into(),
                source: "example.com".into(),
                date,
            }],
        }
    }

    #[test]
    fn pair_mining_requires_chunks() {
        let subjects: BTreeSet<String> = ["Q1".to_string()].into();
        assert!(matches!(
            select_target_pairs(&[], &subjects, 5),
            Err(GraphError::EmptyCorpus)
        ));
    }

    #[test]
    fn subject_without_cooccurrence_yields_no_pairs() {
        let chunks = vec![chunk("a1", "20230901", &["Q1"]), chunk("a2", "20230901", &["Q2", "Q3"])];
        let subjects: BTreeSet<String> = ["Q1".to_string()].into();
        let pairs = select_target_pairs(&chunks, &subjects, 5).unwrap();
        assert!(pairs.is_empty());
    }

    #[test]
    fn single_chunk_negative_score_is_still_returned() {
        let chunks = vec![chunk("a1", "20230901", &["Q1", "Q2"])];
        let subjects: BTreeSet<String> = ["Q1".to_string()].into();
        let pairs = select_target_pairs(&chunks, &subjects, 5).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].object, "Q2");
        let expected = 1.0 * (1.0f64 / 2.0).ln();
        assert!((pairs[0].score - expected).abs() < 1e-12);
        assert!(pairs[0].score < 0.0);
    }

    #[test]
    fn batches_split_with_remainder() {
        let chunks: Vec<Chunk> = (0..7)
            .map(|i| chunk(&format!("a{i}"), &format!("2023090{}", 7 - i), &["Q1"]))
            .collect();
        let batches = batch_chunks(chunks, 3);
        let sizes: Vec<usize> = batches.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![3, 3, 1]);
        let mut last = None;
        for b in &batches {
            for c in b {
                if let Some(prev) = last {
                    assert!(c.date >= prev);
                }
                last = Some(c.date);
            }
        }
    }

    #[test]
    fn batch_of_exact_size_is_single() {
        let chunks: Vec<Chunk> = (0..4)
            .map(|i| chunk(&format!("a{i}"), "20230901", &["Q1"]))
            .collect();
        assert_eq!(batch_chunks(chunks, 4).len(), 1);
    }

    #[test]
    fn graph_timeframe_spans_interactions() {
        let i = |date: &str| Interaction {
            date: DateStamp::parse(date).unwrap(),
            subject: "Q1".into(),
            object: None,
            text: "Nova Reyes did something".into(),
            variant: Variant::M1,
            provenance: Vec::new(),
        };
        let g = NeonGraph::new(["Q1".to_string()].into(), vec![i("20230905"), i("20230901")]);
        let (lo, hi) = g.timeframe.unwrap();
        assert_eq!(lo.compact(), "20230901");
        assert_eq!(hi.compact(), "20230905");
        assert!(NeonGraph::new(BTreeSet::new(), vec![]).timeframe.is_none());
    }
}
