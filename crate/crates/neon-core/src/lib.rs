//! Core library for building and querying an entity-interaction graph from
//! timestamped news streams.
//!
//! The pipeline: annotated articles are segmented, chunked, and deduplicated
//! ([`corpus`]); entity interactions are extracted per subject or per
//! co-occurring entity pair ([`graph`]); interactions are dense-indexed into
//! a temporal datastore ([`datastore`]); temporal queries are reformulated
//! and answered by retrieval-augmented generation ([`qa`]); and answers are
//! scored attribute-by-attribute with an LLM judge ([`eval`]). Query-log
//! curation utilities live in [`querylog`]; model dependencies are abstracted
//! in [`providers`] with deterministic mocks for fully offline runs.

pub mod config;
pub mod corpus;
pub mod datastore;
pub mod date;
pub mod eval;
pub mod graph;
pub mod jsonl;
pub mod providers;
pub mod qa;
pub mod querylog;

pub use config::PipelineConfig;
pub use corpus::{Article, Chunk, EntityMention, Provenance, RawArticle};
pub use datastore::{Datastore, ScoredEntry, StoreEntry, StoreSource, Tier};
pub use date::DateStamp;
pub use graph::{EntityPair, EntityRef, Interaction, NeonGraph, Variant};
pub use providers::{CompletionParams, Embedder, LlmClient};
pub use qa::{QaResponse, RetrievalStrategy, TemporalQuery};
