//! Seeded synthetic data generators shared by the benchmarks.

use std::collections::BTreeSet;

use neon_core::corpus::{Chunk, Provenance};
use neon_core::date::DateStamp;
use neon_core::graph::{Interaction, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: &[&str] = &[
    "festival", "award", "tour", "deal", "single", "studio", "stage", "record", "interview",
    "concert", "label", "producer", "premiere", "charity", "announcement", "contract", "harbor",
    "city", "council", "museum",
];

fn sentence(rng: &mut ChaCha8Rng, len: usize) -> String {
    let body: Vec<&str> = (0..len).map(|_| WORDS[rng.gen_range(0..WORDS.len())]).collect();
    format!("Nova Reyes {}.", body.join(" "))
}

/// Chunks with a planted duplicate fraction and entity co-occurrences.
pub fn synthetic_chunks(n: usize, seed: u64) -> Vec<Chunk> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut texts: Vec<String> = Vec::new();
    (0..n)
        .map(|i| {
            let text = if i % 4 == 3 && !texts.is_empty() {
                // Near-duplicate of an earlier chunk: tail word swapped.
                let base = &texts[rng.gen_range(0..texts.len())];
                format!("{} extra", base.trim_end_matches('.'))
            } else {
                let len = rng.gen_range(8..16);
                let t = sentence(&mut rng, len);
                texts.push(t.clone());
                t
            };
            let date = DateStamp::from_ymd(2023, 9, (i % 28) as u32 + 1).unwrap();
            let mut entities: BTreeSet<String> = ["S1".to_string()].into();
            entities.insert(format!("O{}", i % 9));
            if i % 3 == 0 {
                entities.insert(format!("O{}", (i / 3) % 9));
            }
            Chunk {
                sentences: vec![text],
                mentions: Vec::new(),
                entities,
                date,
                provenance: vec![Provenance {
                    article_id: format!("a{i:05}"),
                    source: format!("src{}.example.com", i % 11),
                    date,
                }],
            }
        })
        .collect()
}

/// Interactions spread over `days` calendar days.
pub fn synthetic_interactions(n: usize, days: i64, seed: u64) -> Vec<Interaction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = DateStamp::from_ymd(2023, 6, 1).unwrap();
    (0..n)
        .map(|_| {
            let len = rng.gen_range(4..10);
            Interaction {
                date: base.plus_days(rng.gen_range(0..days)),
                subject: "Q1".into(),
                object: None,
                text: sentence(&mut rng, len),
                variant: Variant::M2,
                provenance: Vec::new(),
            }
        })
        .collect()
}
