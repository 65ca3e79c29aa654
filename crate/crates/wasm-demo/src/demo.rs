//! The demo operations as plain functions over JSON strings.

use std::sync::OnceLock;

use figura_core::annotation::verify::stubs::StopwordDetector;
use figura_core::annotation::{check_lexical_repetition, length_ok, repeated_tokens, LanguageDetector};
use figura_core::ontology::figures::label_of;
use figura_core::ontology::{
    self, all_figures, figure_info, property_vocabulary, search_figures, Choice, Dimension, MappingConfig,
    PropertySelection, TripleStore,
};
use figura_core::rag::embed::HashedBow;
use figura_core::rag::{serialize_ontology, DocumentTemplates, RagConfig, RagIndex, TokenOverlap};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

fn sample() -> &'static TripleStore {
    static STORE: OnceLock<TripleStore> = OnceLock::new();
    STORE.get_or_init(|| {
        ontology::load(ontology::SAMPLE_ONTOLOGY, &MappingConfig::default_mapping())
            .expect("bundled ontology loads")
            .store
    })
}

fn error(message: impl std::fmt::Display) -> String {
    json!({ "error": message.to_string() }).to_string()
}

/// Figures plus the value list of every dimension, for building the form.
pub fn catalogue() -> String {
    let store = sample();
    let p = store.prefixes();
    let dims: serde_json::Map<String, Value> = Dimension::ALL
        .into_iter()
        .map(|d| {
            let values: Vec<Value> = property_vocabulary(store, d)
                .iter()
                .map(|v| json!({ "value": p.compact(v), "label": label_of(store, v) }))
                .collect();
            (d.as_str().to_string(), Value::Array(values))
        })
        .collect();
    let figures: Vec<Value> = all_figures(store)
        .into_iter()
        .map(|f| json!({ "figure": p.compact(&f.iri), "label": f.label }))
        .collect();
    json!({ "figures": figures, "dimensions": dims }).to_string()
}

/// `selection` maps dimension names to prefixed values; missing or null is "no idea".
pub fn search(selection: &str) -> String {
    let store = sample();
    let raw: std::collections::BTreeMap<String, Option<String>> = match serde_json::from_str(selection) {
        Ok(v) => v,
        Err(e) => return error(e),
    };
    let mut sel = PropertySelection::default();
    for (key, value) in raw {
        let Ok(dim) = key.parse::<Dimension>() else {
            return error(format!("unknown dimension {key}"));
        };
        let Some(value) = value.filter(|v| !v.is_empty()) else {
            continue;
        };
        match store.prefixes().resolve(&value) {
            Some(iri) if property_vocabulary(store, dim).contains(&iri) => sel.set(dim, Choice::Value(iri)),
            _ => return error(format!("unknown value {value} for {key}")),
        }
    }
    let p = store.prefixes();
    let hits: Vec<Value> = search_figures(store, &sel)
        .into_iter()
        .filter_map(|f| figure_info(store, &f.iri).ok())
        .map(|info| {
            json!({
                "figure": p.compact(&info.iri),
                "label": info.label,
                "definitions": info.definitions.iter().map(|d| &d.text.lexical).collect::<Vec<_>>(),
                "examples": info.examples.iter().map(|e| &e.text.lexical).collect::<Vec<_>>(),
            })
        })
        .collect();
    Value::Array(hits).to_string()
}

#[derive(Debug, Deserialize)]
pub struct ExploreRequest {
    pub question: String,
    /// One size for basic chunking, several (decreasing) for auto-merging.
    pub sizes: Vec<usize>,
    pub retrieve_k: usize,
    pub rerank_k: usize,
    #[serde(default)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Hit {
    id: u64,
    score: f64,
    text: String,
}

/// Retrieval over the bundled ontology document with the hashed embedder:
/// raw leaf hits, then what survives merging and reranking.
pub fn explore(request: &str) -> String {
    let req: ExploreRequest = match serde_json::from_str(request) {
        Ok(r) => r,
        Err(e) => return error(e),
    };
    let mut config = if req.sizes.len() == 1 {
        RagConfig::basic(req.sizes[0], req.retrieve_k, req.rerank_k)
    } else {
        RagConfig::auto_merging(&req.sizes, req.retrieve_k, req.rerank_k)
    };
    if let Some(t) = req.threshold {
        config.merge_threshold = t;
    }
    if let Err(e) = config.validate() {
        return error(e);
    }
    let document = serialize_ontology(sample(), &DocumentTemplates::default());
    let embedder = HashedBow::default();
    let index = match RagIndex::build(&document, &config, &embedder) {
        Ok(i) => i,
        Err(e) => return error(e),
    };
    let contexts = match index.contexts(&req.question, &embedder, &TokenOverlap) {
        Ok(c) => c,
        Err(e) => return error(e),
    };
    let hits: Vec<Hit> = contexts
        .retrieved
        .iter()
        .map(|(id, score)| Hit {
            id: *id,
            score: *score,
            text: index.tree.get(*id).map(|c| c.text.clone()).unwrap_or_default(),
        })
        .collect();
    let selected: Vec<Value> = contexts
        .chunk_ids
        .iter()
        .zip(&contexts.texts)
        .map(|(id, text)| {
            let level = index.tree.level_index(*id).unwrap_or(0);
            json!({ "id": id, "level": level, "merged": level + 1 < index.tree.depth(), "text": text })
        })
        .collect();
    json!({
        "config": config.to_string(),
        "leaves": index.tree.leaves().len(),
        "retrieved": hits,
        "selected": selected,
    })
    .to_string()
}

/// The submission checks that run without external services.
pub fn check_text(text: &str) -> String {
    json!({
        "characters": text.chars().count(),
        "length_ok": length_ok(text),
        "language": StopwordDetector.detect(text),
        "repetition": check_lexical_repetition(text),
        "repeated": repeated_tokens(text),
    })
    .to_string()
}
