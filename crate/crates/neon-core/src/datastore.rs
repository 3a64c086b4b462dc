//! The temporal datastore: timestamped, dense-indexed interaction entries
//! with two retrieval strategies.
//!
//! Temporal retrieval ranks exact query-date matches first (by similarity),
//! then backs off to entries within ±r days to fill the top-k; generic
//! retrieval is a global similarity top-k over the whole store. Stores at
//! this scale (hundreds of thousands of entries) are served by an exhaustive
//! scan; there is no approximate index.
//!
//! On-disk layout of a saved store directory:
//!
//! - `manifest.json` — `{version, dimension, count, source}`
//! - `entries.jsonl` — one entry per line, vectors excluded
//! - `vectors.f32`   — raw little-endian f32, entry `id` at byte offset
//!   `id * dimension * 4`

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::date::DateStamp;
use crate::graph::Interaction;
use crate::providers::Embedder;

pub type Vector = Vec<f32>;

const FORMAT_VERSION: u32 = 1;

/// How the indexed texts were produced. Chunk stores default to a smaller
/// retrieval depth because their passages run several sentences long.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StoreSource {
    Interactions,
    Chunks,
}

impl StoreSource {
    /// Retrieval depth used when no explicit k is configured.
    pub fn default_k(self) -> usize {
        match self {
            StoreSource::Interactions => 10,
            StoreSource::Chunks => 5,
        }
    }
}

/// One indexed entry: `(t_d, d)` plus its dense vector and source payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreEntry {
    pub id: u64,
    pub date: DateStamp,
    pub text: String,
    #[serde(skip)]
    pub vector: Vector,
    pub payload: Interaction,
}

/// Which rule admitted an entry into a result list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    ExactDate,
    Backoff,
    Generic,
}

/// A retrieved entry with its cosine similarity to the query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredEntry {
    pub entry: StoreEntry,
    pub score: f64,
    pub tier: Tier,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("vector dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("store format mismatch: {0}")]
    VersionMismatch(String),
    #[error("query embedding failed: {0}")]
    Embed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Cosine similarity with f64 accumulation. Defined as 0 when either vector
/// has zero norm.
pub fn cosine(a: &[f32], b: &[f32]) -> Result<f64, StoreError> {
    if a.len() != b.len() {
        return Err(StoreError::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (f64::from(*x), f64::from(*y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok(dot / (na.sqrt() * nb.sqrt()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexStats {
    pub indexed: u64,
    /// Entries skipped because embedding failed or had the wrong dimension.
    pub failed: u64,
}

/// Immutable after [`Datastore::index`]; rebuilds produce a new store.
#[derive(Debug, Clone)]
pub struct Datastore {
    dimension: usize,
    source: StoreSource,
    entries: Vec<StoreEntry>,
    by_date: BTreeMap<DateStamp, Vec<u64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    version: u32,
    dimension: usize,
    count: usize,
    source: StoreSource,
}

impl Datastore {
    /// Embeds every interaction text and builds the date index. Entries
    /// whose embedding fails are skipped and counted.
    pub fn index(
        interactions: Vec<Interaction>,
        embedder: &dyn Embedder,
        source: StoreSource,
    ) -> (Self, IndexStats) {
        let dimension = embedder.dimension();
        let mut entries = Vec::with_capacity(interactions.len());
        let mut by_date: BTreeMap<DateStamp, Vec<u64>> = BTreeMap::new();
        let mut stats = IndexStats::default();
        for interaction in interactions {
            let vector: Vector = match embedder.embed(&interaction.text) {
                Ok(v) if v.len() == dimension => v.into_iter().map(|x| x as f32).collect(),
                _ => {
                    stats.failed += 1;
                    continue;
                }
            };
            let id = entries.len() as u64;
            by_date.entry(interaction.date).or_default().push(id);
            entries.push(StoreEntry {
                id,
                date: interaction.date,
                text: interaction.text.clone(),
                vector,
                payload: interaction,
            });
            stats.indexed += 1;
        }
        (
            Self {
                dimension,
                source,
                entries,
                by_date,
            },
            stats,
        )
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn source(&self) -> StoreSource {
        self.source
    }

    pub fn entries(&self) -> &[StoreEntry] {
        &self.entries
    }

    fn embed_query(&self, embedder: &dyn Embedder, text: &str) -> Result<Vector, StoreError> {
        let v = embedder
            .embed(text)
            .map_err(|e| StoreError::Embed(e.to_string()))?;
        if v.len() != self.dimension {
            return Err(StoreError::DimensionMismatch {
                expected: self.dimension,
                got: v.len(),
            });
        }
        // Narrow exactly as at index time so query/entry scores line up.
        Ok(v.into_iter().map(|x| x as f32).collect())
    }

    fn score_ids(&self, ids: &[u64], query: &Vector, tier: Tier) -> Vec<ScoredEntry> {
        let mut scored: Vec<ScoredEntry> = ids
            .iter()
            .map(|&id| {
                let entry = &self.entries[id as usize];
                let score = cosine(query, &entry.vector).expect("store vectors share dimension");
                ScoredEntry {
                    entry: entry.clone(),
                    score,
                    tier,
                }
            })
            .collect();
        scored.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .expect("cosine is finite")
                .then_with(|| a.entry.id.cmp(&b.entry.id))
        });
        scored
    }

    /// Two-tier temporal retrieval: entries dated exactly `t_q` ranked by
    /// similarity, then entries within ±`r` days to fill up to `k`. Exact
    /// matches always precede backoff entries regardless of score. May
    /// return fewer than `k` entries, including none.
    pub fn retrieve_temporal(
        &self,
        embedder: &dyn Embedder,
        query_text: &str,
        t_q: DateStamp,
        k: usize,
        r: u32,
    ) -> Result<Vec<ScoredEntry>, StoreError> {
        assert!(k >= 1, "k must be at least 1");
        let query = self.embed_query(embedder, query_text)?;

        let exact: Vec<u64> = self.by_date.get(&t_q).cloned().unwrap_or_default();
        let mut results = self.score_ids(&exact, &query, Tier::ExactDate);
        results.truncate(k);
        if results.len() < k && r > 0 {
            let lo = t_q.plus_days(-i64::from(r));
            let hi = t_q.plus_days(i64::from(r));
            let nearby: Vec<u64> = self
                .by_date
                .range(lo..=hi)
                .filter(|(d, _)| **d != t_q)
                .flat_map(|(_, ids)| ids.iter().copied())
                .collect();
            let backoff = self.score_ids(&nearby, &query, Tier::Backoff);
            results.extend(backoff.into_iter().take(k - results.len()));
        }
        Ok(results)
    }

    /// Global similarity top-k, ties broken by ascending id.
    pub fn retrieve_generic(
        &self,
        embedder: &dyn Embedder,
        query_text: &str,
        k: usize,
    ) -> Result<Vec<ScoredEntry>, StoreError> {
        assert!(k >= 1, "k must be at least 1");
        let query = self.embed_query(embedder, query_text)?;
        let all: Vec<u64> = (0..self.entries.len() as u64).collect();
        let mut results = self.score_ids(&all, &query, Tier::Generic);
        results.truncate(k);
        Ok(results)
    }

    /// Optional third strategy: temporal results first, then generic results
    /// (excluding entries already taken) to fill up to `k`.
    pub fn retrieve_hybrid(
        &self,
        embedder: &dyn Embedder,
        temporal_query: &str,
        generic_query: &str,
        t_q: DateStamp,
        k: usize,
        r: u32,
    ) -> Result<Vec<ScoredEntry>, StoreError> {
        let mut results = self.retrieve_temporal(embedder, temporal_query, t_q, k, r)?;
        if results.len() < k {
            let taken: Vec<u64> = results.iter().map(|s| s.entry.id).collect();
            let fill = self
                .retrieve_generic(embedder, generic_query, k)?
                .into_iter()
                .filter(|s| !taken.contains(&s.entry.id))
                .take(k - results.len());
            results.extend(fill);
        }
        Ok(results)
    }

    /// Writes `manifest.json`, `entries.jsonl`, and `vectors.f32` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), StoreError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let manifest = Manifest {
            version: FORMAT_VERSION,
            dimension: self.dimension,
            count: self.entries.len(),
            source: self.source,
        };
        fs::write(
            dir.join("manifest.json"),
            format!("{}\n", serde_json::to_string_pretty(&manifest)?),
        )?;

        let mut entries = BufWriter::new(fs::File::create(dir.join("entries.jsonl"))?);
        for entry in &self.entries {
            serde_json::to_writer(&mut entries, entry)?;
            entries.write_all(b"\n")?;
        }
        entries.flush()?;

        let mut vectors = BufWriter::new(fs::File::create(dir.join("vectors.f32"))?);
        for entry in &self.entries {
            for x in &entry.vector {
                vectors.write_all(&x.to_le_bytes())?;
            }
        }
        vectors.flush()?;
        Ok(())
    }

    /// Loads a store saved by [`Datastore::save`]. The manifest's version,
    /// dimension, and count are cross-checked against the data files.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref();
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        if manifest.version != FORMAT_VERSION {
            return Err(StoreError::VersionMismatch(format!(
                "unsupported format version {} (expected {FORMAT_VERSION})",
                manifest.version
            )));
        }

        let vector_bytes = fs::metadata(dir.join("vectors.f32"))?.len() as usize;
        if vector_bytes != manifest.count * manifest.dimension * 4 {
            return Err(StoreError::VersionMismatch(format!(
                "vector file holds {vector_bytes} bytes but manifest declares {} entries of dimension {}",
                manifest.count, manifest.dimension
            )));
        }

        let mut entries = Vec::with_capacity(manifest.count);
        let reader = BufReader::new(fs::File::open(dir.join("entries.jsonl"))?);
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            entries.push(serde_json::from_str::<StoreEntry>(&line)?);
        }
        if entries.len() != manifest.count {
            return Err(StoreError::VersionMismatch(format!(
                "entry file holds {} entries but manifest declares {}",
                entries.len(),
                manifest.count
            )));
        }

        let mut vectors = BufReader::new(fs::File::open(dir.join("vectors.f32"))?);
        let mut buf = vec![0u8; manifest.dimension * 4];
        let mut by_date: BTreeMap<DateStamp, Vec<u64>> = BTreeMap::new();
        for (i, entry) in entries.iter_mut().enumerate() {
            if entry.id != i as u64 {
                return Err(StoreError::VersionMismatch(format!(
                    "entry ids are not sequential at position {i}"
                )));
            }
            vectors.read_exact(&mut buf)?;
            entry.vector = buf
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            by_date.entry(entry.date).or_default().push(entry.id);
        }

        Ok(Self {
            dimension: manifest.dimension,
            source: manifest.source,
            entries,
            by_date,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Variant;
    use crate::providers::mock::HashEmbedder;

    fn interaction(date: &str, text: &str) -> Interaction {
        Interaction {
            date: DateStamp::parse(date).unwrap(),
            subject: "Q1".into(),
            object: None,
            text: text.into(),
            variant: Variant::M1,
            provenance: Vec::new(),
        }
    }

    #[test]
    fn cosine_basics() {
        let v = vec![1.0f32, 2.0, 3.0];
        assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        let a = vec![1.0f32, 0.0];
        let b = vec![0.0f32, 1.0];
        assert_eq!(cosine(&a, &b).unwrap(), 0.0);
        let z = vec![0.0f32, 0.0];
        assert_eq!(cosine(&a, &z).unwrap(), 0.0);
        assert!(matches!(
            cosine(&a, &v),
            Err(StoreError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn index_assigns_sequential_ids_per_date() {
        let embedder = HashEmbedder::default();
        let items = vec![
            interaction("20230901", "Nova Reyes sang at the festival"),
            interaction("20230902", "Nova Reyes left the city"),
            interaction("20230901", "Nova Reyes met Jade Moss"),
        ];
        let (store, stats) = Datastore::index(items, &embedder, StoreSource::Interactions);
        assert_eq!(stats.indexed, 3);
        assert_eq!(stats.failed, 0);
        assert_eq!(store.len(), 3);
        for (i, e) in store.entries().iter().enumerate() {
            assert_eq!(e.id, i as u64);
            assert_eq!(e.date, e.payload.date);
        }
        assert_eq!(store.by_date[&DateStamp::parse("20230901").unwrap()], vec![0, 2]);
    }

    #[test]
    fn empty_store_retrieves_nothing() {
        let embedder = HashEmbedder::default();
        let (store, _) = Datastore::index(vec![], &embedder, StoreSource::Interactions);
        let t = DateStamp::parse("20230901").unwrap();
        assert!(store
            .retrieve_temporal(&embedder, "anything", t, 5, 3)
            .unwrap()
            .is_empty());
        assert!(store.retrieve_generic(&embedder, "anything", 5).unwrap().is_empty());
    }

    #[test]
    fn exact_matches_precede_backoff() {
        let embedder = HashEmbedder::default();
        let items = vec![
            interaction("20230901", "completely unrelated topic words"),
            interaction("20230902", "nova reyes festival song premiere"),
        ];
        let (store, _) = Datastore::index(items, &embedder, StoreSource::Interactions);
        let t = DateStamp::parse("20230901").unwrap();
        let got = store
            .retrieve_temporal(&embedder, "nova reyes festival song premiere", t, 2, 3)
            .unwrap();
        // The exact-date entry ranks first even though the backoff entry is
        // far more similar to the query.
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].tier, Tier::ExactDate);
        assert_eq!(got[1].tier, Tier::Backoff);
        assert!(got[1].score > got[0].score);
    }

    #[test]
    fn r_zero_restricts_to_exact_date() {
        let embedder = HashEmbedder::default();
        let items = vec![
            interaction("20230901", "one two three"),
            interaction("20230902", "one two three"),
        ];
        let (store, _) = Datastore::index(items, &embedder, StoreSource::Interactions);
        let t = DateStamp::parse("20230901").unwrap();
        let got = store.retrieve_temporal(&embedder, "one two three", t, 5, 0).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].entry.date, t);
    }

    #[test]
    fn generic_returns_all_when_k_exceeds_store() {
        let embedder = HashEmbedder::default();
        let items = vec![
            interaction("20230901", "alpha beta"),
            interaction("20230902", "gamma delta"),
        ];
        let (store, _) = Datastore::index(items, &embedder, StoreSource::Interactions);
        let got = store.retrieve_generic(&embedder, "alpha beta", 10).unwrap();
        assert_eq!(got.len(), 2);
        assert!(got[0].score >= got[1].score);
    }

    #[test]
    fn save_load_round_trip_is_identical() {
        let embedder = HashEmbedder::default();
        let items = vec![
            interaction("20230901", "nova reyes sang"),
            interaction("20230902", "jade moss signed a deal"),
        ];
        let (store, _) = Datastore::index(items, &embedder, StoreSource::Interactions);
        let dir = tempfile::tempdir().unwrap();
        store.save(dir.path()).unwrap();
        let loaded = Datastore::load(dir.path()).unwrap();
        assert_eq!(loaded.len(), store.len());
        assert_eq!(loaded.dimension(), store.dimension());
        for (a, b) in store.entries().iter().zip(loaded.entries()) {
            assert_eq!(a.text, b.text);
            assert_eq!(a.vector, b.vector);
        }
    }

    #[test]
    fn load_rejects_inconsistent_manifest() {
        let embedder = HashEmbedder::default();
        let items = vec![interaction("20230901", "nova reyes sang")];
        let (store, _) = Datastore::index(items, &embedder, StoreSource::Interactions);
        let dir = tempfile::tempdir().unwrap();
        store.save(dir.path()).unwrap();
        // Corrupt the manifest's dimension.
        let path = dir.path().join("manifest.json");
        let text = std::fs::read_to_string(&path).unwrap().replace("64", "32");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(
            Datastore::load(dir.path()),
            Err(StoreError::VersionMismatch(_))
        ));
    }

    #[test]
    fn empty_store_round_trips() {
        let embedder = HashEmbedder::default();
        let (store, _) = Datastore::index(vec![], &embedder, StoreSource::Chunks);
        let dir = tempfile::tempdir().unwrap();
        store.save(dir.path()).unwrap();
        let loaded = Datastore::load(dir.path()).unwrap();
        assert!(loaded.is_empty());
        assert_eq!(loaded.source(), StoreSource::Chunks);
    }
}
