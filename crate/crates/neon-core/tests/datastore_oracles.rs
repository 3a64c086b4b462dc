//! Retrieval differential tests against brute-force oracles, plus
//! persistence round trips.

use neon_core::datastore::{cosine, Datastore, StoreSource, Tier};
use neon_core::date::DateStamp;
use neon_core::graph::{Interaction, Variant};
use neon_core::providers::mock::HashEmbedder;
use neon_core::providers::Embedder;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn d(s: &str) -> DateStamp {
    DateStamp::parse(s).unwrap()
}

fn interaction(date: DateStamp, text: String) -> Interaction {
    Interaction {
        date,
        subject: "Q1".into(),
        object: None,
        text,
        variant: Variant::M1,
        provenance: Vec::new(),
    }
}

const WORDS: &[&str] = &[
    "festival", "award", "tour", "deal", "single", "studio", "stage", "record", "interview",
    "concert", "label", "producer", "premiere", "charity", "announcement", "contract",
];

fn synthetic_store(
    n: usize,
    seed: u64,
    base: DateStamp,
    day_span: i64,
) -> (Datastore, HashEmbedder) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let embedder = HashEmbedder::default();
    let items: Vec<Interaction> = (0..n)
        .map(|_| {
            let len = rng.gen_range(3..9);
            let text: Vec<&str> = (0..len).map(|_| WORDS[rng.gen_range(0..WORDS.len())]).collect();
            let date = base.plus_days(rng.gen_range(0..day_span));
            interaction(date, format!("Nova Reyes {}", text.join(" ")))
        })
        .collect();
    let (store, stats) = Datastore::index(items, &embedder, StoreSource::Interactions);
    assert_eq!(stats.failed, 0);
    (store, embedder)
}

/// Straight-line reimplementation of the two-tier rule over all entries.
fn oracle_temporal(
    store: &Datastore,
    embedder: &dyn Embedder,
    query: &str,
    t_q: DateStamp,
    k: usize,
    r: u32,
) -> Vec<(u64, f64, Tier)> {
    let q: Vec<f32> = embedder
        .embed(query)
        .unwrap()
        .into_iter()
        .map(|x| x as f32)
        .collect();
    let score = |id: u64| {
        let e = &store.entries()[id as usize];
        let mut dot = 0.0f64;
        let mut na = 0.0f64;
        let mut nb = 0.0f64;
        for (a, b) in q.iter().zip(&e.vector) {
            dot += f64::from(*a) * f64::from(*b);
            na += f64::from(*a) * f64::from(*a);
            nb += f64::from(*b) * f64::from(*b);
        }
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na.sqrt() * nb.sqrt())
        }
    };
    let mut exact: Vec<(u64, f64)> = store
        .entries()
        .iter()
        .filter(|e| e.date == t_q)
        .map(|e| (e.id, score(e.id)))
        .collect();
    exact.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut out: Vec<(u64, f64, Tier)> = exact
        .into_iter()
        .take(k)
        .map(|(id, s)| (id, s, Tier::ExactDate))
        .collect();
    if out.len() < k {
        let mut nearby: Vec<(u64, f64)> = store
            .entries()
            .iter()
            .filter(|e| e.date != t_q && e.date.days_between(&t_q) <= i64::from(r))
            .map(|e| (e.id, score(e.id)))
            .collect();
        nearby.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        out.extend(
            nearby
                .into_iter()
                .take(k - out.len())
                .map(|(id, s)| (id, s, Tier::Backoff)),
        );
    }
    out
}

fn oracle_generic(
    store: &Datastore,
    embedder: &dyn Embedder,
    query: &str,
    k: usize,
) -> Vec<(u64, f64)> {
    let q: Vec<f32> = embedder
        .embed(query)
        .unwrap()
        .into_iter()
        .map(|x| x as f32)
        .collect();
    let mut scored: Vec<(u64, f64)> = store
        .entries()
        .iter()
        .map(|e| (e.id, cosine(&q, &e.vector).unwrap()))
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

#[test]
fn thirty_entry_two_tier_fixture_matches_oracle() {
    let base = d("20230901");
    let (store, embedder) = synthetic_store(30, 3, base, 9);
    let t_q = base.plus_days(4);
    let got = store
        .retrieve_temporal(&embedder, "nova reyes award tour", t_q, 10, 3)
        .unwrap();
    let want = oracle_temporal(&store, &embedder, "nova reyes award tour", t_q, 10, 3);
    assert_eq!(got.len(), want.len());
    for (g, (id, score, tier)) in got.iter().zip(&want) {
        assert_eq!(g.entry.id, *id);
        assert_eq!(g.score.to_bits(), score.to_bits());
        assert_eq!(g.tier, *tier);
    }
}

#[test]
fn hundred_entry_generic_matches_full_scan_oracle() {
    let (store, embedder) = synthetic_store(100, 5, d("20230801"), 30);
    for k in [1, 7, 25, 100, 150] {
        let got = store
            .retrieve_generic(&embedder, "festival premiere single", k)
            .unwrap();
        let want = oracle_generic(&store, &embedder, "festival premiere single", k);
        assert_eq!(got.len(), want.len());
        for (g, (id, score)) in got.iter().zip(&want) {
            assert_eq!(g.entry.id, *id);
            assert_eq!(g.score.to_bits(), score.to_bits());
            assert_eq!(g.tier, Tier::Generic);
        }
    }
}

#[test]
fn random_cases_match_oracles() {
    let base = d("20230810");
    let (store, embedder) = synthetic_store(200, 9, base, 20);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..40 {
        let k = rng.gen_range(1..=20);
        let r = rng.gen_range(0..=5);
        let t_q = base.plus_days(rng.gen_range(-2..24));
        let qlen = rng.gen_range(1..6);
        let query: Vec<&str> = (0..qlen).map(|_| WORDS[rng.gen_range(0..WORDS.len())]).collect();
        let query = query.join(" ");

        let got = store.retrieve_temporal(&embedder, &query, t_q, k, r).unwrap();
        let want = oracle_temporal(&store, &embedder, &query, t_q, k, r);
        let got_ids: Vec<(u64, u64, Tier)> = got
            .iter()
            .map(|s| (s.entry.id, s.score.to_bits(), s.tier))
            .collect();
        let want_ids: Vec<(u64, u64, Tier)> = want
            .iter()
            .map(|(id, s, t)| (*id, s.to_bits(), *t))
            .collect();
        assert_eq!(got_ids, want_ids);

        for s in &got {
            assert!(s.entry.date.days_between(&t_q) <= i64::from(r));
        }

        let got = store.retrieve_generic(&embedder, &query, k).unwrap();
        let want = oracle_generic(&store, &embedder, &query, k);
        assert_eq!(got.len(), want.len());
        for (g, (id, score)) in got.iter().zip(&want) {
            assert_eq!((g.entry.id, g.score.to_bits()), (*id, score.to_bits()));
        }
    }
}

#[test]
fn hybrid_fills_after_temporal() {
    let (store, embedder) = synthetic_store(40, 21, d("20230901"), 20);
    // A date with little coverage: hybrid must pad with generic entries.
    let t_q = d("20230901");
    let k = 15;
    let temporal = store
        .retrieve_temporal(&embedder, "award tour", t_q, k, 1)
        .unwrap();
    let hybrid = store
        .retrieve_hybrid(&embedder, "award tour", "award tour", t_q, k, 1)
        .unwrap();
    assert!(hybrid.len() >= temporal.len());
    assert_eq!(&hybrid[..temporal.len()], &temporal[..]);
    let mut seen = std::collections::BTreeSet::new();
    for s in &hybrid {
        assert!(seen.insert(s.entry.id), "duplicate id in hybrid results");
    }
    for s in &hybrid[temporal.len()..] {
        assert_eq!(s.tier, Tier::Generic);
    }
}

#[test]
fn save_load_preserves_retrieval_bit_exactly() {
    let (store, embedder) = synthetic_store(500, 29, d("20230801"), 25);
    let dir = tempfile::tempdir().unwrap();
    store.save(dir.path()).unwrap();
    let loaded = Datastore::load(dir.path()).unwrap();
    assert_eq!(loaded.len(), store.len());

    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..20 {
        let k = rng.gen_range(1..=15);
        let r = rng.gen_range(0..=4);
        let t_q = d("20230801").plus_days(rng.gen_range(0..25));
        let query = format!(
            "{} {}",
            WORDS[rng.gen_range(0..WORDS.len())],
            WORDS[rng.gen_range(0..WORDS.len())]
        );
        let a = store.retrieve_temporal(&embedder, &query, t_q, k, r).unwrap();
        let b = loaded.retrieve_temporal(&embedder, &query, t_q, k, r).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.entry.id, y.entry.id);
            assert_eq!(x.score.to_bits(), y.score.to_bits());
            assert_eq!(x.tier, y.tier);
        }
        let a = store.retrieve_generic(&embedder, &query, k).unwrap();
        let b = loaded.retrieve_generic(&embedder, &query, k).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.entry.id, y.entry.id);
            assert_eq!(x.score.to_bits(), y.score.to_bits());
        }
    }
}

#[test]
fn cosine_matches_scalar_loop_oracle_on_random_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..10 {
        let a: Vec<f32> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f32> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let got = cosine(&a, &b).unwrap();
        let mut dot = 0.0f64;
        let mut na = 0.0f64;
        let mut nb = 0.0f64;
        for i in 0..10 {
            dot += f64::from(a[i]) * f64::from(b[i]);
            na += f64::from(a[i]).powi(2);
            nb += f64::from(b[i]).powi(2);
        }
        let want = dot / (na.sqrt() * nb.sqrt());
        assert!((got - want).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn temporal_never_exceeds_day_range(seed in 0u64..500, k in 1usize..12, r in 0u32..5, offset in -3i64..12) {
        let base = d("20230901");
        let (store, embedder) = synthetic_store(40, seed, base, 10);
        let t_q = base.plus_days(offset);
        let got = store.retrieve_temporal(&embedder, "tour award", t_q, k, r).unwrap();
        for s in &got {
            prop_assert!(s.entry.date.days_between(&t_q) <= i64::from(r));
            if s.tier == Tier::ExactDate {
                prop_assert_eq!(s.entry.date, t_q);
            }
        }
        // Scores are non-increasing within each tier.
        for pair in got.windows(2) {
            if pair[0].tier == pair[1].tier {
                prop_assert!(pair[0].score >= pair[1].score);
            }
        }
    }

    #[test]
    fn r_zero_returns_only_exact_dates(seed in 0u64..200, k in 1usize..12) {
        let base = d("20230901");
        let (store, embedder) = synthetic_store(30, seed, base, 6);
        let t_q = base.plus_days(2);
        let got = store.retrieve_temporal(&embedder, "deal studio", t_q, k, 0).unwrap();
        for s in &got {
            prop_assert_eq!(s.entry.date, t_q);
            prop_assert_eq!(s.tier, Tier::ExactDate);
        }
    }

    #[test]
    fn generic_topk_is_prefix_of_topk_plus_one(seed in 0u64..200, k in 1usize..15) {
        let (store, embedder) = synthetic_store(30, seed, d("20230901"), 6);
        let small = store.retrieve_generic(&embedder, "award premiere", k).unwrap();
        let large = store.retrieve_generic(&embedder, "award premiere", k + 1).unwrap();
        prop_assert!(small.len() <= large.len());
        for (a, b) in small.iter().zip(&large) {
            prop_assert_eq!(a.entry.id, b.entry.id);
            prop_assert_eq!(a.score.to_bits(), b.score.to_bits());
        }
    }
}
