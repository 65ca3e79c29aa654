mod common;

use std::collections::HashSet;

use common::{exhaustive_rank, random_document, seeded};
use figura_core::ontology::{self, turtle, MappingConfig};
use figura_core::rag::embed::HashedBow;
use figura_core::rag::llm::stubs::{EchoLlm, RecordingLlm};
use figura_core::rag::{
    auto_merge, chunk_basic, postprocess_answer, serialize_ontology, ChunkTree, DocumentTemplates, RagConfig,
    RagIndex, TokenOverlap, VectorIndex, GERMAN_ONLY,
};
use proptest::prelude::*;
use rand::Rng;

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn sample_document() -> String {
    let store = ontology::load(ontology::SAMPLE_ONTOLOGY, &MappingConfig::default_mapping())
        .unwrap()
        .store;
    serialize_ontology(&store, &DocumentTemplates::default())
}

#[test]
fn epiphora_document_golden() {
    let store = turtle::parse(&fixture("epiphora_reified.ttl")).unwrap();
    let doc = serialize_ontology(&store, &DocumentTemplates::default());
    assert_eq!(doc, fixture("epiphora_document.txt"));
}

#[test]
fn reconstruction_on_long_random_text() {
    let text = random_document(&mut seeded(3), 5000);
    let chunks = chunk_basic(&text, 2048).unwrap();
    assert_eq!(chunks.len(), 3);
    let joined = chunks.iter().map(|c| c.text.as_str()).collect::<Vec<_>>().join(" ");
    assert_eq!(
        joined.split_whitespace().collect::<Vec<_>>(),
        text.split_whitespace().collect::<Vec<_>>()
    );
}

#[test]
fn retrieval_matches_exhaustive_ranking() {
    let mut rng = seeded(11);
    let entries: Vec<(u64, Vec<f32>)> = (0..500)
        .map(|i| (i * 7 % 1000, (0..16).map(|_| rng.random_range(-1.0f32..1.0)).collect()))
        .collect();
    let mut idx = VectorIndex::new(16);
    for (id, v) in &entries {
        idx.insert(*id, v.clone()).unwrap();
    }
    for _ in 0..20 {
        let q: Vec<f32> = (0..16).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        assert_eq!(idx.search(&q, 12), exhaustive_rank(&entries, &q, 12));
    }
}

#[test]
fn index_file_round_trip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sample.idx");
    let e = HashedBow::new(64);
    let built = RagIndex::build(&sample_document(), &RagConfig::auto_merging(&[512, 256, 128], 6, 3), &e).unwrap();
    built.save(&path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    let loaded = RagIndex::load(&path).unwrap();
    assert_eq!(loaded.index.to_bytes(), bytes);
    assert_eq!(loaded.index.len(), built.tree.leaves().len());
}

#[test]
fn chat_requests_carry_directive_and_temperature() {
    let e = HashedBow::default();
    let doc = sample_document();
    let llm = RecordingLlm::new(EchoLlm);
    for cfg in RagConfig::evaluation_grid() {
        let idx = RagIndex::build(&doc, &cfg, &e).unwrap();
        let a = idx.answer("Was ist eine Anapher?", &e, &TokenOverlap, &llm).unwrap();
        assert!(a.contexts.texts.len() <= cfg.rerank_k);
    }
    let reqs = llm.requests();
    assert_eq!(reqs.len(), 6);
    for r in reqs {
        assert_eq!(r.temperature, 0.1);
        assert!(r.messages.iter().any(|m| m.content.contains(GERMAN_ONLY)));
    }
}

#[test]
fn echo_answer_quotes_retrieved_definition() {
    let e = HashedBow::default();
    let idx = RagIndex::build(&sample_document(), &RagConfig::basic(64, 12, 6), &e).unwrap();
    let a = idx
        .answer("Definition von Epipher: Wiederholung desselben Wortes am Ende", &e, &TokenOverlap, &EchoLlm)
        .unwrap();
    assert!(a.text.contains("Definition von Epipher"));
}

fn leaf_ids(tree: &ChunkTree) -> Vec<u64> {
    tree.leaves().iter().map(|c| c.id).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn basic_chunks_reconstruct(seed in any::<u64>(), n in 0usize..3000, size in 1usize..700) {
        let text = random_document(&mut seeded(seed), n);
        let chunks = chunk_basic(&text, size).unwrap();
        let joined = chunks.iter().map(|c| c.text.as_str()).collect::<Vec<_>>().join(" ");
        prop_assert_eq!(joined.split_whitespace().collect::<Vec<_>>(), text.split_whitespace().collect::<Vec<_>>());
        prop_assert!(chunks.iter().all(|c| c.token_count() <= size && c.token_count() > 0));
    }

    #[test]
    fn hierarchy_children_partition_parents(seed in any::<u64>(), n in 0usize..2000) {
        let text = random_document(&mut seeded(seed), n);
        let tree = ChunkTree::build(&text, &[300, 70, 16]).unwrap();
        for level in &tree.levels[..tree.depth() - 1] {
            for p in level {
                let mut at = p.span.0;
                for c in tree.children(p.id) {
                    let c = tree.get(*c).unwrap();
                    prop_assert_eq!(c.span.0, at);
                    at = c.span.1;
                }
                prop_assert_eq!(at, p.span.1);
            }
        }
        let ids: HashSet<u64> = tree.levels.iter().flatten().map(|c| c.id).collect();
        prop_assert_eq!(ids.len(), tree.len());
    }

    #[test]
    fn retrieval_equals_oracle(
        vectors in prop::collection::vec(prop::collection::vec(-4i8..4, 4), 0..200),
        q in prop::collection::vec(-4i8..4, 4),
        k in 1usize..20,
    ) {
        // Small integer grids produce many exact ties.
        let entries: Vec<(u64, Vec<f32>)> = vectors
            .into_iter()
            .enumerate()
            .map(|(i, v)| ((i as u64 * 37) % 211, v.into_iter().map(f32::from).collect()))
            .collect::<std::collections::BTreeMap<_, _>>()
            .into_iter()
            .collect();
        let mut idx = VectorIndex::new(4);
        for (id, v) in &entries {
            idx.insert(*id, v.clone()).unwrap();
        }
        let q: Vec<f32> = q.into_iter().map(f32::from).collect();
        prop_assert_eq!(idx.search(&q, k), exhaustive_rank(&entries, &q, k));
    }

    #[test]
    fn merge_never_keeps_parent_and_descendant(
        n in 1usize..400,
        picks in prop::collection::vec(any::<prop::sample::Index>(), 1..24),
        threshold in 0.05f64..=1.0,
    ) {
        let text = (0..n).map(|i| format!("t{i}")).collect::<Vec<_>>().join(" ");
        let tree = ChunkTree::build(&text, &[64, 16, 4]).unwrap();
        let leaves = leaf_ids(&tree);
        let retrieved: Vec<u64> = picks.iter().map(|i| leaves[i.index(leaves.len())]).collect();
        let out = auto_merge(&retrieved, &tree, threshold);
        for a in &out {
            for b in &out {
                prop_assert!(!tree.is_ancestor(*a, *b));
            }
        }
        // Every retrieved leaf is covered by exactly one output chunk.
        for leaf in &retrieved {
            let covering = out.iter().filter(|o| *o == leaf || tree.is_ancestor(**o, *leaf)).count();
            prop_assert_eq!(covering, 1);
        }
    }

    #[test]
    fn postprocess_idempotent(s in "[a-zäß \"'„“”‚‘’«»]{0,40}") {
        let once = postprocess_answer(&s);
        prop_assert_eq!(postprocess_answer(&once), once.clone());
        let stripped: String = s.chars().filter(|c| !"\"'„“”‚‘’«»".contains(*c)).collect();
        let once_stripped: String = once.chars().filter(|c| !"\"'„“”‚‘’«»".contains(*c)).collect();
        prop_assert_eq!(stripped, once_stripped);
    }

    #[test]
    fn postprocess_keeps_balanced_pairs(parts in prop::collection::vec(("[a-zäöü]{1,8}", prop::option::of(0usize..6)), 0..8)) {
        const PAIRS: [(char, char); 6] = [('"', '"'), ('\'', '\''), ('„', '“'), ('“', '”'), ('‚', '‘'), ('«', '»')];
        let text = parts
            .iter()
            .map(|(w, q)| match q {
                Some(i) => format!("{}{w}{}", PAIRS[*i].0, PAIRS[*i].1),
                None => w.clone(),
            })
            .collect::<Vec<_>>()
            .join(" ");
        prop_assert_eq!(postprocess_answer(&text), text);
    }

    #[test]
    fn pipeline_deterministic(q in "[A-Za-zäöü ]{1,40}") {
        let e = HashedBow::new(64);
        let doc = sample_document();
        let idx = RagIndex::build(&doc, &RagConfig::auto_merging(&[256, 64, 16], 12, 6), &e).unwrap();
        let a = idx.answer(&q, &e, &TokenOverlap, &EchoLlm).unwrap();
        let b = idx.answer(&q, &e, &TokenOverlap, &EchoLlm).unwrap();
        prop_assert_eq!(a, b);
    }
}
