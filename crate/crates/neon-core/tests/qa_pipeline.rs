//! QA plumbing with scripted providers, plus embedder ordering checks.

use neon_core::datastore::{Datastore, StoreSource};
use neon_core::date::DateStamp;
use neon_core::graph::{Interaction, Variant};
use neon_core::providers::mock::{HashEmbedder, RuleMockLlm, ScriptedLlm};
use neon_core::providers::{CompletionParams, Embedder};
use neon_core::qa::{answer, reformulate, render_answer_prompt, Linker, RetrievalSpec, RetrievalStrategy};

fn d(s: &str) -> DateStamp {
    DateStamp::parse(s).unwrap()
}

fn interaction(date: &str, text: &str) -> Interaction {
    Interaction {
        date: d(date),
        subject: "Q1".into(),
        object: None,
        text: text.into(),
        variant: Variant::M1,
        provenance: Vec::new(),
    }
}

#[test]
fn empty_store_takes_the_abstention_path() {
    let embedder = HashEmbedder::default();
    let (store, _) = Datastore::index(vec![], &embedder, StoreSource::Interactions);
    let tq = reformulate("nova reyes award", d("20230905"), &Linker::empty());

    let prompt = render_answer_prompt(&tq, &[]);
    let mut llm = ScriptedLlm::new();
    llm.insert(&prompt, "No information is available for the requested date.");

    let response = answer(
        &tq,
        &store,
        &embedder,
        RetrievalSpec {
            strategy: RetrievalStrategy::Temporal,
            k: 10,
            r: 3,
        },
        &llm,
        &CompletionParams::default(),
    )
    .unwrap();
    assert!(response.support.is_empty());
    assert_eq!(
        response.text,
        "No information is available for the requested date."
    );
    assert_eq!(response.model_info, "scripted-mock");
}

#[test]
fn response_carries_every_support_text() {
    let embedder = HashEmbedder::default();
    let items = vec![
        interaction("20230905", "Nova Reyes won the harbor award"),
        interaction("20230905", "Nova Reyes thanked the festival crowd"),
        interaction("20230904", "Nova Reyes arrived in Harbor City"),
    ];
    let (store, _) = Datastore::index(items, &embedder, StoreSource::Interactions);
    let tq = reformulate("nova reyes award", d("20230905"), &Linker::empty());

    let response = answer(
        &tq,
        &store,
        &embedder,
        RetrievalSpec {
            strategy: RetrievalStrategy::Temporal,
            k: 10,
            r: 3,
        },
        &RuleMockLlm,
        &CompletionParams::default(),
    )
    .unwrap();
    assert_eq!(response.support.len(), 3);
    for s in &response.support {
        assert!(
            response.text.contains(&s.entry.text),
            "support text missing from answer: {}",
            s.entry.text
        );
    }
}

#[test]
fn temporal_support_stays_within_r_days() {
    let embedder = HashEmbedder::default();
    let items: Vec<Interaction> = (0..14)
        .map(|i| {
            interaction(
                &format!("202309{:02}", i + 1),
                &format!("Nova Reyes event number {i}"),
            )
        })
        .collect();
    let (store, _) = Datastore::index(items, &embedder, StoreSource::Interactions);
    let tq = reformulate("nova reyes event", d("20230907"), &Linker::empty());
    let response = answer(
        &tq,
        &store,
        &embedder,
        RetrievalSpec {
            strategy: RetrievalStrategy::Temporal,
            k: 5,
            r: 2,
        },
        &RuleMockLlm,
        &CompletionParams::default(),
    )
    .unwrap();
    assert!(!response.support.is_empty());
    for s in &response.support {
        assert!(s.entry.date.days_between(&tq.date) <= 2);
    }
}

#[test]
fn interaction_store_renders_more_but_shorter_passages_than_chunk_store() {
    let embedder = HashEmbedder::default();
    let one_liners: Vec<Interaction> = (0..12)
        .map(|i| interaction("20230905", &format!("Nova Reyes single sentence fact {i}")))
        .collect();
    let chunk_texts: Vec<Interaction> = (0..6)
        .map(|i| {
            let mut x = interaction(
                "20230905",
                &format!(
                    "Nova Reyes did many things in report {i}. The report ran long. \
                     It covered five full sentences. Witnesses agreed. The story closed."
                ),
            );
            x.variant = Variant::Chunk;
            x
        })
        .collect();
    let (neon_store, _) = Datastore::index(one_liners, &embedder, StoreSource::Interactions);
    let (chunk_store, _) = Datastore::index(chunk_texts, &embedder, StoreSource::Chunks);

    let tq = reformulate("nova reyes report", d("20230905"), &Linker::empty());

    let k_neon = neon_store.source().default_k();
    let k_chunks = chunk_store.source().default_k();
    assert_eq!((k_neon, k_chunks), (10, 5));

    let support_neon = neon_store
        .retrieve_temporal(&embedder, &tq.raw, tq.date, k_neon, 3)
        .unwrap();
    let support_chunks = chunk_store
        .retrieve_temporal(&embedder, &tq.raw, tq.date, k_chunks, 3)
        .unwrap();
    assert_eq!(support_neon.len(), 10);
    assert_eq!(support_chunks.len(), 5);

    let prompt_neon = render_answer_prompt(&tq, &support_neon);
    let prompt_chunks = render_answer_prompt(&tq, &support_chunks);
    assert_eq!(prompt_neon.matches("\n10. (").count(), 1);
    assert!(!prompt_chunks.contains("\n6. ("));
    // Chunk passages are multi-sentence; graph passages are one sentence.
    assert!(support_chunks[0].entry.text.matches(". ").count() >= 3);
    assert_eq!(support_neon[0].entry.text.matches('.').count(), 0);
}

// ---------------------------------------------------------------------------
// Embedder ordering oracle: 30 text pairs.
// ---------------------------------------------------------------------------

#[test]
fn shared_token_pairs_score_at_least_disjoint_pairs() {
    let embedder = HashEmbedder::default();
    let cos = |a: &str, b: &str| {
        let va: Vec<f32> = embedder.embed(a).unwrap().iter().map(|&x| x as f32).collect();
        let vb: Vec<f32> = embedder.embed(b).unwrap().iter().map(|&x| x as f32).collect();
        neon_core::datastore::cosine(&va, &vb).unwrap()
    };

    // 15 pairs with token overlap, 15 with none (distinct vocabularies).
    let sharing: Vec<(String, String)> = (0..15)
        .map(|i| {
            (
                format!("festival award ceremony night{i}"),
                format!("festival award speech evening{i}"),
            )
        })
        .collect();
    let disjoint: Vec<(String, String)> = (0..15)
        .map(|i| {
            (
                format!("alpha{i} beta{i} gamma{i}"),
                format!("delta{i} epsilon{i} zeta{i}"),
            )
        })
        .collect();

    let min_sharing = sharing
        .iter()
        .map(|(a, b)| cos(a, b))
        .fold(f64::INFINITY, f64::min);
    let max_disjoint = disjoint
        .iter()
        .map(|(a, b)| cos(a, b))
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(
        min_sharing >= max_disjoint,
        "sharing pairs must score at least disjoint pairs: {min_sharing} < {max_disjoint}"
    );
    assert!(min_sharing > 0.0);
}
