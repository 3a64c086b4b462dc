//! Stage implementations. Each stage reads and writes JSON-lines files (or
//! a datastore directory) and prints a one-line summary to stderr.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::Context;
use neon_core::config::{ConfigError, PipelineConfig};
use neon_core::corpus::{self, Chunk, RawArticle};
use neon_core::datastore::{Datastore, ScoredEntry, StoreSource, Tier};
use neon_core::date::DateStamp;
use neon_core::eval::{
    aggregate, judge_items, length_stats, Attribute, FlaggedPolicy, JudgeExamples, JudgeItem,
    PromptMode,
};
use neon_core::graph::{
    extract_m1, extract_m2, select_target_pairs, EntityRef, ExtractOptions, Interaction, Variant,
};
use neon_core::jsonl::{read_jsonl, write_jsonl};
use neon_core::providers::cassette::{CassetteRecorder, CassetteReplay};
use neon_core::providers::http::HttpLlm;
use neon_core::providers::mock::{HashEmbedder, RuleMockLlm};
use neon_core::providers::{CompletionParams, Embedder, LlmClient, RetryPolicy};
use neon_core::qa::{self, Linker, LinkerEntry, RetrievalSpec, RetrievalStrategy};
use neon_core::querylog::{self, DailySeries};
use serde::{Deserialize, Serialize};

/// Error with a machine-readable kind for the CLI error report.
#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct StageError {
    kind: &'static str,
    message: String,
}

impl StageError {
    pub fn kind(&self) -> &'static str {
        self.kind
    }

    pub fn config(err: ConfigError) -> Self {
        Self {
            kind: "ConfigError",
            message: err.to_string(),
        }
    }

    fn missing_input(what: impl std::fmt::Display) -> Self {
        Self {
            kind: "MissingInput",
            message: what.to_string(),
        }
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self {
            kind: "ConfigError",
            message: message.into(),
        }
    }
}

fn require_exists(path: &Path) -> Result<(), StageError> {
    if path.exists() {
        Ok(())
    } else {
        Err(StageError::missing_input(format!(
            "input not found: {}",
            path.display()
        )))
    }
}

// ---------------------------------------------------------------------------
// Providers.
// ---------------------------------------------------------------------------

fn build_embedder(config: &PipelineConfig) -> HashEmbedder {
    HashEmbedder::new(config.providers.embedding_dimension)
}

fn build_llm(config: &PipelineConfig, mock: bool) -> anyhow::Result<Box<dyn LlmClient>> {
    let base: Box<dyn LlmClient> = if mock || config.providers.llm == "mock" {
        Box::new(RuleMockLlm)
    } else {
        let http = config
            .providers
            .http
            .clone()
            .ok_or_else(|| StageError::invalid("providers.llm = \"http\" needs [providers.http]"))?;
        Box::new(HttpLlm::new(http))
    };
    let llm: Box<dyn LlmClient> = match (&config.providers.cassette, mock) {
        (Some(c), false) => match c.mode.as_str() {
            "record" => Box::new(
                CassetteRecorder::create(base, &c.path)
                    .with_context(|| format!("opening cassette {}", c.path))?,
            ),
            _ => Box::new(CassetteReplay::load(&c.path).with_context(|| {
                format!("loading cassette {}", c.path)
            })?),
        },
        _ => base,
    };
    Ok(llm)
}

fn completion_params(config: &PipelineConfig) -> CompletionParams {
    CompletionParams {
        temperature: config.providers.temperature,
        max_tokens: config.providers.max_tokens,
    }
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

pub fn ingest(config: &PipelineConfig, input: &Path, output: &Path) -> anyhow::Result<()> {
    require_exists(input)?;
    let raw: Vec<RawArticle> = read_jsonl(input)?;
    let mut chunks = Vec::new();
    let mut article_count = 0usize;
    for (i, record) in raw.iter().enumerate() {
        let article = corpus::parse_article(record)
            .with_context(|| format!("{}:{} (article {})", input.display(), i + 1, record.id))?;
        chunks.extend(corpus::chunk_article(
            &article,
            config.chunking.m,
            config.chunking.stride,
        ));
        article_count += 1;
    }
    let before = chunks.len();
    let chunks = corpus::dedup_chunks_within(
        chunks,
        config.dedup.threshold,
        config.dedup.window_days,
    );
    write_jsonl(output, &chunks)?;
    eprintln!(
        "ingest: {article_count} articles -> {} chunks ({} dropped as near-duplicates)",
        chunks.len(),
        before - chunks.len()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

pub fn extract(
    config: &PipelineConfig,
    mock: bool,
    chunks_path: &Path,
    subjects_path: &Path,
    output: &Path,
    variant_flag: Option<&str>,
    metrics_path: Option<&Path>,
) -> anyhow::Result<()> {
    require_exists(chunks_path)?;
    require_exists(subjects_path)?;
    let chunks: Vec<Chunk> = read_jsonl(chunks_path)?;
    let mut subjects: Vec<EntityRef> = read_jsonl(subjects_path)?;
    subjects.sort_by(|a, b| a.id.cmp(&b.id));
    if subjects.is_empty() {
        return Err(StageError::missing_input("subjects file is empty").into());
    }

    let variant = variant_flag.unwrap_or(&config.extraction.variant);
    let llm = build_llm(config, mock)?;
    let opts = ExtractOptions {
        retry: RetryPolicy {
            attempts: config.extraction.retries,
            base_delay_ms: 100,
        },
        params: completion_params(config),
        parallelism: config.extraction.parallelism,
    };

    let (graph, metrics) = match variant {
        "m1" => extract_m1(&subjects, &chunks, &llm, &opts),
        "m2" => {
            let subject_ids: BTreeSet<String> =
                subjects.iter().map(|s| s.id.clone()).collect();
            let mined = select_target_pairs(&chunks, &subject_ids, config.extraction.top_p)
                .map_err(|e| StageError::missing_input(e.to_string()))?;
            let names = corpus::display_names(&chunks);
            let resolve = |id: &str| -> EntityRef {
                let name = subjects
                    .iter()
                    .find(|s| s.id == id)
                    .map(|s| s.name.clone())
                    .or_else(|| names.get(id).cloned())
                    .unwrap_or_else(|| id.to_string());
                EntityRef {
                    id: id.to_string(),
                    name,
                }
            };
            let pairs: Vec<(EntityRef, EntityRef)> = mined
                .iter()
                .map(|p| (resolve(&p.subject), resolve(&p.object)))
                .collect();
            extract_m2(&pairs, &chunks, &llm, config.extraction.k_batch, &opts)
        }
        other => {
            return Err(StageError::invalid(format!(
                "extraction.variant must be m1 or m2 (got {other:?})"
            ))
            .into())
        }
    };

    write_jsonl(output, &graph.interactions)?;
    let metrics_file: PathBuf = metrics_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| output.with_extension("metrics.json"));
    std::fs::write(
        &metrics_file,
        format!("{}\n", serde_json::to_string_pretty(&metrics)?),
    )?;
    eprintln!(
        "extract({variant}): {} prompts -> {} interactions ({} rejected lines, {} provider failures)",
        metrics.prompts,
        graph.len(),
        metrics.rejected,
        metrics.provider_failures
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// index
// ---------------------------------------------------------------------------

pub fn index(
    config: &PipelineConfig,
    _mock: bool,
    input: &Path,
    source: &str,
    store_dir: &Path,
) -> anyhow::Result<()> {
    require_exists(input)?;
    let embedder = build_embedder(config);
    let (items, source) = match source {
        "interactions" => {
            let items: Vec<Interaction> = read_jsonl(input)?;
            (items, StoreSource::Interactions)
        }
        "chunks" => {
            let chunks: Vec<Chunk> = read_jsonl(input)?;
            // The chunk-retrieval baseline reuses the same store with chunk
            // texts as entries.
            let items = chunks
                .iter()
                .map(|c| Interaction {
                    date: c.date,
                    subject: String::new(),
                    object: None,
                    text: c.text(),
                    variant: Variant::Chunk,
                    provenance: c
                        .provenance
                        .iter()
                        .map(|p| neon_core::graph::InteractionSource {
                            article_id: p.article_id.clone(),
                            source: p.source.clone(),
                        })
                        .collect(),
                })
                .collect();
            (items, StoreSource::Chunks)
        }
        other => {
            return Err(StageError::invalid(format!(
                "--source must be interactions or chunks (got {other:?})"
            ))
            .into())
        }
    };
    let total = items.len();
    let (store, stats) = Datastore::index(items, &embedder, source);
    store.save(store_dir)?;
    eprintln!(
        "index: {total} entries -> {} indexed, {} failed (dimension {})",
        stats.indexed,
        stats.failed,
        store.dimension()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// query
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
struct QueryRow {
    query: String,
    date: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SupportRow {
    pub id: u64,
    pub date: DateStamp,
    pub text: String,
    pub score: f64,
    pub tier: Tier,
}

/// One answered query as written to the answers file.
#[derive(Debug, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub method: String,
    pub strategy: String,
    pub query: String,
    pub date: DateStamp,
    pub reformulated: String,
    pub answer: String,
    pub model: String,
    pub support: Vec<SupportRow>,
}

fn support_rows(support: &[ScoredEntry]) -> Vec<SupportRow> {
    support
        .iter()
        .map(|s| SupportRow {
            id: s.entry.id,
            date: s.entry.date,
            text: s.entry.text.clone(),
            score: s.score,
            tier: s.tier,
        })
        .collect()
}

pub struct QueryOverrides {
    pub strategy: Option<String>,
    pub k: Option<usize>,
    pub r: Option<u32>,
    pub date: Option<String>,
    pub linker: Option<PathBuf>,
    pub method_label: String,
}

fn parse_strategy(s: &str) -> Result<RetrievalStrategy, StageError> {
    match s {
        "temporal" => Ok(RetrievalStrategy::Temporal),
        "generic" => Ok(RetrievalStrategy::Generic),
        "hybrid" => Ok(RetrievalStrategy::Hybrid),
        other => Err(StageError::invalid(format!(
            "strategy must be temporal, generic, or hybrid (got {other:?})"
        ))),
    }
}

pub fn query(
    config: &PipelineConfig,
    mock: bool,
    store_dir: &Path,
    queries_path: &Path,
    output: &Path,
    overrides: QueryOverrides,
) -> anyhow::Result<()> {
    require_exists(store_dir)?;
    require_exists(queries_path)?;
    let store = Datastore::load(store_dir)?;
    let embedder = build_embedder(config);
    if embedder.dimension() != store.dimension() {
        return Err(StageError::invalid(format!(
            "store dimension {} does not match configured embedder dimension {}",
            store.dimension(),
            embedder.dimension()
        ))
        .into());
    }
    let llm = build_llm(config, mock)?;
    let params = completion_params(config);

    let strategy = match &overrides.strategy {
        Some(s) => parse_strategy(s)?,
        None => config.retrieval.strategy,
    };
    let k = overrides
        .k
        .or(config.retrieval.k)
        .unwrap_or_else(|| store.source().default_k());
    let r = overrides.r.unwrap_or(config.retrieval.r);

    let linker = match &overrides.linker {
        Some(path) => {
            require_exists(path)?;
            let entries: Vec<LinkerEntry> = read_jsonl(path)?;
            Linker::new(entries)
        }
        None => Linker::empty(),
    };

    let rows: Vec<QueryRow> = read_jsonl(queries_path)?;
    let mut records = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let date_str = overrides.date.as_deref().unwrap_or(&row.date);
        let date = DateStamp::parse(date_str)
            .with_context(|| format!("{}:{}", queries_path.display(), i + 1))?;
        let tq = qa::reformulate(&row.query, date, &linker);
        let spec = RetrievalSpec { strategy, k, r };
        let response = qa::answer(&tq, &store, &embedder, spec, &llm, &params)?;
        records.push(AnswerRecord {
            method: overrides.method_label.clone(),
            strategy: strategy.as_str().to_string(),
            query: row.query.clone(),
            date,
            reformulated: tq.reformulated.clone(),
            answer: response.text,
            model: response.model_info,
            support: support_rows(&response.support),
        });
    }
    write_jsonl(output, &records)?;
    eprintln!(
        "query: {} queries answered (strategy {}, k {k}, r {r})",
        records.len(),
        strategy.as_str()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

fn parse_attributes(flag: &str) -> Result<Vec<Attribute>, StageError> {
    match flag {
        "all" => Ok(Attribute::ALL.to_vec()),
        "h" | "helpfulness" => Ok(vec![Attribute::Helpfulness]),
        "r" | "relevance" => Ok(vec![Attribute::Relevance]),
        "f" | "faithfulness" => Ok(vec![Attribute::Faithfulness]),
        other => Err(StageError::invalid(format!(
            "--attribute must be all, h, r, or f (got {other:?})"
        ))),
    }
}

pub fn eval(
    config: &PipelineConfig,
    mock: bool,
    answers_path: &Path,
    output_dir: &Path,
    attribute_flag: &str,
    mode_flag: Option<&str>,
    examples_flag: Option<&Path>,
) -> anyhow::Result<()> {
    require_exists(answers_path)?;
    let answers: Vec<AnswerRecord> = read_jsonl(answers_path)?;
    let attributes = parse_attributes(attribute_flag)?;
    let mode = match mode_flag.unwrap_or(config.eval.mode.as_str()) {
        "zero" => PromptMode::Zero,
        "few" => PromptMode::Few,
        other => {
            return Err(
                StageError::invalid(format!("eval mode must be zero or few (got {other:?})"))
                    .into(),
            )
        }
    };
    let examples = match examples_flag
        .map(Path::to_path_buf)
        .or_else(|| config.eval.examples_path.clone().map(PathBuf::from))
    {
        Some(path) => {
            require_exists(&path)?;
            let text = std::fs::read_to_string(&path)?;
            serde_json::from_str::<JudgeExamples>(&text)
                .with_context(|| format!("parsing {}", path.display()))?
        }
        None => JudgeExamples::default(),
    };

    let items: Vec<JudgeItem> = answers
        .iter()
        .map(|a| JudgeItem {
            method: a.method.clone(),
            strategy: a.strategy.clone(),
            question: a.reformulated.clone(),
            response: a.answer.clone(),
            passages: a
                .support
                .iter()
                .enumerate()
                .map(|(i, s)| format!("{}. ({}) {}", i + 1, s.date, s.text))
                .collect::<Vec<_>>()
                .join("\n"),
        })
        .collect();

    let llm = build_llm(config, mock)?;
    let rows = judge_items(
        &items,
        &attributes,
        &llm,
        &completion_params(config),
        mode,
        &examples,
    );

    let policy = if config.eval.clamp_out_of_range {
        FlaggedPolicy::Clamp
    } else {
        FlaggedPolicy::Exclude
    };
    let report = aggregate(&rows, policy);
    let lengths = length_stats(&rows);

    std::fs::create_dir_all(output_dir)?;
    write_jsonl(output_dir.join("ratings.jsonl"), &rows)?;
    std::fs::write(
        output_dir.join("report.json"),
        format!("{}\n", serde_json::to_string_pretty(&report)?),
    )?;
    std::fs::write(output_dir.join("report.txt"), report.to_table())?;
    std::fs::write(
        output_dir.join("lengths.json"),
        format!("{}\n", serde_json::to_string_pretty(&lengths)?),
    )?;
    let judged = rows.iter().filter(|r| r.parse_error.is_none()).count();
    eprintln!(
        "eval: {} items x {} attributes -> {judged} ratings ({} flagged, {} parse failures)",
        answers.len(),
        attributes.len(),
        rows.iter().filter(|r| r.flagged).count(),
        rows.len() - judged
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// spikes
// ---------------------------------------------------------------------------

pub fn spikes(input: &Path, output: &Path, min_users: u64, window: usize) -> anyhow::Result<()> {
    require_exists(input)?;
    let rows = match input.extension().and_then(|e| e.to_str()) {
        Some("csv") => querylog::read_volume_csv(input)?,
        _ => querylog::read_volume_jsonl(input)?,
    };
    let total = rows.len();
    let rows: Vec<_> = rows
        .into_iter()
        .filter(|r| r.distinct_users >= min_users)
        .collect();

    let mut by_entity: BTreeMap<String, Vec<(DateStamp, u64)>> = BTreeMap::new();
    for row in &rows {
        by_entity
            .entry(row.entity.clone())
            .or_default()
            .push((row.date, row.count));
    }

    let mut result: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut skipped = 0usize;
    for (entity, points) in by_entity {
        let series = DailySeries::from_sparse(entity.clone(), points)
            .expect("grouped entities have at least one row");
        match querylog::detect_spikes(&series, window) {
            Ok(dates) => {
                result.insert(entity, dates.iter().map(DateStamp::compact).collect());
            }
            Err(querylog::QuerylogError::SeriesTooShort { .. }) => skipped += 1,
            Err(e) => return Err(e.into()),
        }
    }
    std::fs::write(
        output,
        format!("{}\n", serde_json::to_string_pretty(&result)?),
    )?;
    eprintln!(
        "spikes: {} rows kept of {total} (min_users {min_users}); {} entities analyzed, {skipped} series too short",
        rows.len(),
        result.len()
    );
    Ok(())
}
