//! Annotated-article parsing, sentence segmentation, overlapping chunking,
//! and near-duplicate chunk removal.

pub mod markup;
pub mod segment;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::date::{BadDate, DateStamp};

/// One input record: a timestamped news document whose body carries
/// `<e id="...">...</e>` entity markup.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawArticle {
    pub id: String,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    pub date: String,
    pub body: String,
}

/// An entity mention, located within one sentence of its article or chunk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub entity_id: String,
    pub surface: String,
    pub sentence_index: usize,
    /// Byte offset of the surface within the (plain) sentence.
    pub start: usize,
    pub end: usize,
}

/// A parsed article: validated date, plain sentences, and located mentions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    pub date: DateStamp,
    /// Original body, markup included.
    pub body: String,
    /// Markup-stripped sentences, in order.
    pub sentences: Vec<String>,
    pub mentions: Vec<EntityMention>,
}

/// Attribution for a chunk: which article, from which source, on which day.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub article_id: String,
    pub source: String,
    pub date: DateStamp,
}

/// A window of consecutive sentences: the unit of extraction and retrieval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    /// Plain sentences (markup stripped).
    pub sentences: Vec<String>,
    /// Mentions with `sentence_index` relative to this chunk.
    pub mentions: Vec<EntityMention>,
    /// Union of mention entity ids over the chunk's sentences.
    pub entities: BTreeSet<String>,
    pub date: DateStamp,
    pub provenance: Vec<Provenance>,
}

impl Chunk {
    /// The chunk's text, sentences joined by single spaces.
    pub fn text(&self) -> String {
        self.sentences.join(" ")
    }

    /// Id of the article this chunk was cut from.
    pub fn article_id(&self) -> &str {
        &self.provenance[0].article_id
    }

    /// Sentences with every mention re-wrapped in bare `<e>...</e>` tags.
    pub fn marked_sentences(&self) -> Vec<String> {
        let mut out = self.sentences.clone();
        let mut by_sentence: Vec<Vec<&EntityMention>> = vec![Vec::new(); self.sentences.len()];
        for m in &self.mentions {
            by_sentence[m.sentence_index].push(m);
        }
        for (idx, mut ms) in by_sentence.into_iter().enumerate() {
            ms.sort_by_key(|m| std::cmp::Reverse(m.start));
            for m in ms {
                out[idx].insert_str(m.end, "</e>");
                out[idx].insert_str(m.start, "<e>");
            }
        }
        out
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error(transparent)]
    MalformedMarkup(#[from] markup::MarkupError),
    #[error(transparent)]
    BadDate(#[from] BadDate),
}

/// Parses one raw record: validates the date, strips markup, segments
/// sentences, and assigns each mention to its sentence.
pub fn parse_article(raw: &RawArticle) -> Result<Article, CorpusError> {
    let date = DateStamp::parse(&raw.date)?;
    let (plain, raw_mentions) = markup::strip_markup(&raw.body)?;
    let spans: Vec<_> = raw_mentions.iter().map(|m| m.start..m.end).collect();
    let ranges = segment::split_sentences(&plain, &spans);
    let sentences: Vec<String> = ranges.iter().map(|r| plain[r.clone()].to_string()).collect();

    let mut mentions = Vec::with_capacity(raw_mentions.len());
    for m in raw_mentions {
        let idx = ranges
            .iter()
            .position(|r| m.start >= r.start && m.start < r.end)
            .ok_or_else(|| markup::MarkupError {
                at: m.start,
                reason: "mention lies outside every sentence".into(),
            })?;
        let r = &ranges[idx];
        if m.end > r.end {
            return Err(markup::MarkupError {
                at: m.start,
                reason: "mention spans a sentence boundary".into(),
            }
            .into());
        }
        mentions.push(EntityMention {
            entity_id: m.entity_id,
            surface: m.surface,
            sentence_index: idx,
            start: m.start - r.start,
            end: m.end - r.start,
        });
    }

    Ok(Article {
        id: raw.id.clone(),
        source: raw.source.clone(),
        url: raw.url.clone(),
        date,
        body: raw.body.clone(),
        sentences,
        mentions,
    })
}

/// Cuts an article into overlapping windows of up to `m` sentences starting
/// at offsets 0, `stride`, 2·`stride`, ... The walk stops with the first
/// window that reaches the final sentence, so every sentence is covered and
/// no window starts past useful content.
pub fn chunk_article(article: &Article, m: usize, stride: usize) -> Vec<Chunk> {
    assert!(m >= 1, "chunk size must be at least 1");
    assert!(
        (1..=m).contains(&stride),
        "stride must be between 1 and the chunk size"
    );
    let n = article.sentences.len();
    let mut chunks = Vec::new();
    let mut offset = 0;
    while offset < n {
        let end = (offset + m).min(n);
        let sentences = article.sentences[offset..end].to_vec();
        let mut mentions = Vec::new();
        let mut entities = BTreeSet::new();
        for mention in &article.mentions {
            if (offset..end).contains(&mention.sentence_index) {
                entities.insert(mention.entity_id.clone());
                let mut m = mention.clone();
                m.sentence_index -= offset;
                mentions.push(m);
            }
        }
        chunks.push(Chunk {
            sentences,
            mentions,
            entities,
            date: article.date,
            provenance: vec![Provenance {
                article_id: article.id.clone(),
                source: article.source.clone(),
                date: article.date,
            }],
        });
        if offset + m >= n {
            break;
        }
        offset += stride;
    }
    chunks
}

fn word_trigrams(text: &str) -> BTreeSet<String> {
    let tokens: Vec<&str> = text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .collect();
    let lowered: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
    match lowered.len() {
        0 => BTreeSet::new(),
        1 | 2 => std::iter::once(lowered.join(" ")).collect(),
        _ => lowered.windows(3).map(|w| w.join(" ")).collect(),
    }
}

/// Jaccard similarity of the word-trigram sets of two texts (lowercased,
/// punctuation stripped). Texts shorter than three words contribute their
/// whole token sequence as a single gram so that short texts still compare
/// by content. Two empty texts score 1.0; one empty text scores 0.0.
pub fn trigram_jaccard(a: &str, b: &str) -> f64 {
    let ta = word_trigrams(a);
    let tb = word_trigrams(b);
    match (ta.is_empty(), tb.is_empty()) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        (false, false) => {
            let inter = ta.intersection(&tb).count();
            let union = ta.union(&tb).count();
            inter as f64 / union as f64
        }
    }
}

/// Greedy near-duplicate removal over ascending `(date, article_id)` order.
///
/// A chunk whose similarity with some already-retained chunk reaches
/// `threshold` is dropped and its provenance entries are appended to the
/// first such retained chunk, which keeps its own (earliest) date. An
/// optional day window limits comparison to chunks dated within
/// `window_days` of each other; `None` compares globally.
pub fn dedup_chunks_within(
    chunks: Vec<Chunk>,
    threshold: f64,
    window_days: Option<i64>,
) -> Vec<Chunk> {
    assert!(
        (0.0..=1.0).contains(&threshold),
        "threshold must lie in [0, 1]"
    );
    let mut order: Vec<usize> = (0..chunks.len()).collect();
    let mut chunks: Vec<Option<Chunk>> = chunks.into_iter().map(Some).collect();
    order.sort_by(|&a, &b| {
        let ca = chunks[a].as_ref().unwrap();
        let cb = chunks[b].as_ref().unwrap();
        (ca.date, ca.article_id()).cmp(&(cb.date, cb.article_id()))
    });

    let mut retained: Vec<Chunk> = Vec::new();
    let mut texts: Vec<String> = Vec::new();
    for i in order {
        let chunk = chunks[i].take().unwrap();
        let text = chunk.text();
        let duplicate_of = retained.iter().enumerate().position(|(j, r)| {
            if let Some(w) = window_days {
                if chunk.date.days_between(&r.date) > w {
                    return false;
                }
            }
            trigram_jaccard(&text, &texts[j]) >= threshold
        });
        match duplicate_of {
            Some(j) => retained[j].provenance.extend(chunk.provenance),
            None => {
                texts.push(text);
                retained.push(chunk);
            }
        }
    }
    retained
}

/// [`dedup_chunks_within`] comparing across the whole corpus.
pub fn dedup_chunks(chunks: Vec<Chunk>, threshold: f64) -> Vec<Chunk> {
    dedup_chunks_within(chunks, threshold, None)
}

/// Picks a display name per entity id: the most frequent surface form over
/// all mentions, ties broken by the lexicographically smallest surface.
pub fn display_names(chunks: &[Chunk]) -> std::collections::BTreeMap<String, String> {
    use std::collections::BTreeMap;
    let mut counts: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
    for c in chunks {
        for m in &c.mentions {
            *counts
                .entry(&m.entity_id)
                .or_default()
                .entry(&m.surface)
                .or_default() += 1;
        }
    }
    counts
        .into_iter()
        .map(|(id, surfaces)| {
            let best = surfaces
                .into_iter()
                .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(a.0)))
                .map(|(s, _)| s.to_string())
                .unwrap_or_else(|| id.to_string());
            (id.to_string(), best)
        })
        .collect()
}
