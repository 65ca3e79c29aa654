//! Independent oracles and random generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use figura_core::ontology::{Conjunct, Iri, Literal, PatternTerm, QueryPattern, Term, Triple, TripleStore};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub const NS: &str = "http://example.org/grhoot#";

pub fn ex(local: &str) -> Iri {
    Iri::new(format!("{NS}{local}"))
}

/// Nested-loop join: every conjunct scans every triple.
pub fn brute_force_query(store: &TripleStore, pattern: &QueryPattern) -> Vec<BTreeMap<String, Term>> {
    let mut partial: Vec<BTreeMap<String, Term>> = vec![BTreeMap::new()];
    for c in pattern.conjuncts() {
        let mut next = Vec::new();
        for b in &partial {
            for t in store.iter() {
                if t.predicate != c.predicate {
                    continue;
                }
                let mut nb = b.clone();
                if unify(&c.subject, &Term::Iri(t.subject.clone()), &mut nb)
                    && unify(&c.object, &t.object, &mut nb)
                {
                    next.push(nb);
                }
            }
        }
        partial = next;
    }
    partial.sort_by_key(key);
    partial.dedup();
    partial
}

fn key(b: &BTreeMap<String, Term>) -> Vec<(String, String, Term)> {
    b.iter()
        .map(|(k, v)| {
            let s = match v {
                Term::Iri(i) => i.as_str().to_string(),
                Term::Literal(l) => l.lexical.clone(),
            };
            (k.clone(), s, v.clone())
        })
        .collect()
}

fn unify(slot: &PatternTerm, value: &Term, b: &mut BTreeMap<String, Term>) -> bool {
    match slot {
        PatternTerm::Var(v) => match b.get(v) {
            Some(existing) => existing == value,
            None => {
                b.insert(v.clone(), value.clone());
                true
            }
        },
        PatternTerm::Iri(i) => *value == Term::Iri(i.clone()),
        PatternTerm::Literal(l) => *value == Term::Literal(l.clone()),
    }
}

/// Random store over small vocabularies so joins actually hit.
pub fn random_store(rng: &mut ChaCha8Rng, max_triples: usize) -> TripleStore {
    let n_subjects = rng.random_range(1..=40);
    let n_preds = rng.random_range(1..=6);
    let n_objects = rng.random_range(1..=30);
    let target = rng.random_range(1..=max_triples);
    let mut store = TripleStore::new();
    store.prefixes_mut().insert("", NS);
    for _ in 0..target {
        let s = ex(&format!("s{}", rng.random_range(0..n_subjects)));
        let p = ex(&format!("p{}", rng.random_range(0..n_preds)));
        let o: Term = match rng.random_range(0..10) {
            0 => Term::Literal(Literal::plain(format!("lit{}", rng.random_range(0..5)))),
            // Subjects also appear as objects so chains join.
            1..=4 => Term::Iri(ex(&format!("s{}", rng.random_range(0..n_subjects)))),
            _ => Term::Iri(ex(&format!("o{}", rng.random_range(0..n_objects)))),
        };
        store.insert(Triple::new(s, p, o));
    }
    store
}

/// Random pattern with up to `max_conjuncts` conjuncts over at most two variables.
pub fn random_pattern(rng: &mut ChaCha8Rng, store: &TripleStore, max_conjuncts: usize) -> QueryPattern {
    let vars = ["x", "y"];
    let n = rng.random_range(1..=max_conjuncts);
    let triples = store.triples();
    let mut conjuncts = Vec::with_capacity(n);
    for _ in 0..n {
        // Anchor constants on real triples most of the time.
        let t = &triples[rng.random_range(0..triples.len())];
        let predicate = if rng.random_bool(0.9) {
            t.predicate.clone()
        } else {
            ex("p_missing")
        };
        let subject = if rng.random_bool(0.7) {
            PatternTerm::var(vars[rng.random_range(0..2)])
        } else {
            PatternTerm::Iri(t.subject.clone())
        };
        let object = if rng.random_bool(0.6) {
            PatternTerm::var(vars[rng.random_range(0..2)])
        } else {
            PatternTerm::from(t.object.clone())
        };
        conjuncts.push(Conjunct::new(subject, predicate, object));
    }
    QueryPattern::new(conjuncts).expect("non-empty")
}

pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        dot += *x as f64 * *y as f64;
        na += *x as f64 * *x as f64;
        nb += *y as f64 * *y as f64;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Full sort of all entries by cosine, descending, ties by ascending id.
pub fn exhaustive_rank(entries: &[(u64, Vec<f32>)], query: &[f32], k: usize) -> Vec<(u64, f64)> {
    let mut all: Vec<(u64, f64)> = entries.iter().map(|(id, v)| (*id, cosine(v, query))).collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

/// Whitespace-token document of `n` tokens drawn from a small vocabulary.
pub fn random_document(rng: &mut ChaCha8Rng, n: usize) -> String {
    const WORDS: [&str; 16] = [
        "Wiederholung", "Wort", "Satz", "Anfang", "Ende", "Figur", "Anapher", "Epipher", "Beispiel",
        "Goethe", "Klang", "Form", "Chiasmus", "und", "die", "der",
    ];
    let mut out = String::new();
    for i in 0..n {
        if i > 0 {
            out.push(if rng.random_bool(0.1) { '\n' } else { ' ' });
        }
        out.push_str(WORDS[rng.random_range(0..WORDS.len())]);
    }
    out
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Ontology in compound-relation form where each of `n` figures has every
/// property a template question asks about.
pub fn full_property_ontology(n: usize) -> String {
    let mut doc = String::from(
        "@prefix : <http://example.org/grhoot#> .\n@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .\n",
    );
    for i in 0..n {
        doc.push_str(&format!(
            ":Figure{i} a :RhetoricalFigure ;\n    :isRepeatableElementOfSameForm :Word ;\n    :isInPosition :Beginning ;\n    :isInArea :Sentence ;\n    rdfs:comment \"Definition der Figur {i}.\\n(Autorin {i})\" ;\n    :isExample \"Beispielsatz Nummer {i}.\\n(Autor {i}, Quelle {i})\" .\n"
        ));
    }
    doc
}
