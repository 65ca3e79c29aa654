//! Conjunctive basic-graph-pattern evaluation over a [`TripleStore`].

use std::collections::BTreeMap;

use thiserror::Error;

use super::store::TripleStore;
use super::term::{Iri, Literal, Term, Triple};

/// Subject or object slot of a conjunct.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PatternTerm {
    Var(String),
    Iri(Iri),
    Literal(Literal),
}

impl PatternTerm {
    pub fn var(name: impl Into<String>) -> Self {
        PatternTerm::Var(name.into())
    }
}

impl From<Iri> for PatternTerm {
    fn from(i: Iri) -> Self {
        PatternTerm::Iri(i)
    }
}

impl From<Term> for PatternTerm {
    fn from(t: Term) -> Self {
        match t {
            Term::Iri(i) => PatternTerm::Iri(i),
            Term::Literal(l) => PatternTerm::Literal(l),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Conjunct {
    pub subject: PatternTerm,
    pub predicate: Iri,
    pub object: PatternTerm,
}

impl Conjunct {
    pub fn new(subject: impl Into<PatternTerm>, predicate: Iri, object: impl Into<PatternTerm>) -> Self {
        Conjunct {
            subject: subject.into(),
            predicate,
            object: object.into(),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PatternError {
    #[error("a query pattern needs at least one conjunct")]
    Empty,
    #[error("literal in subject position of conjunct {0}")]
    LiteralSubject(usize),
}

/// Conjunction of triple patterns; variables with the same name unify.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryPattern {
    conjuncts: Vec<Conjunct>,
}

impl QueryPattern {
    pub fn new(conjuncts: Vec<Conjunct>) -> Result<Self, PatternError> {
        if conjuncts.is_empty() {
            return Err(PatternError::Empty);
        }
        if let Some(i) = conjuncts
            .iter()
            .position(|c| matches!(c.subject, PatternTerm::Literal(_)))
        {
            return Err(PatternError::LiteralSubject(i));
        }
        Ok(QueryPattern { conjuncts })
    }

    pub fn conjuncts(&self) -> &[Conjunct] {
        &self.conjuncts
    }

    pub fn variables(&self) -> Vec<&str> {
        let mut vars: Vec<&str> = Vec::new();
        for c in &self.conjuncts {
            for t in [&c.subject, &c.object] {
                if let PatternTerm::Var(v) = t {
                    if !vars.contains(&v.as_str()) {
                        vars.push(v);
                    }
                }
            }
        }
        vars
    }
}

/// One solution: variable name to bound term.
pub type Binding = BTreeMap<String, Term>;

/// All bindings satisfying every conjunct, sorted by bound values in
/// variable-name order and free of duplicates.
pub fn query(store: &TripleStore, pattern: &QueryPattern) -> Vec<Binding> {
    let order = plan(pattern);
    let mut results = Vec::new();
    let mut binding = Binding::new();
    solve(store, pattern, &order, 0, &mut binding, &mut results);
    sort_bindings(&mut results);
    results.dedup();
    results
}

pub fn sort_bindings(results: &mut [Binding]) {
    results.sort_by(|a, b| {
        a.iter()
            .map(|(k, v)| (k, v.sort_key(), v))
            .cmp(b.iter().map(|(k, v)| (k, v.sort_key(), v)))
    });
}

// Greedy join order: start from the most constrained conjunct, then prefer
// conjuncts sharing variables with those already placed.
fn plan(pattern: &QueryPattern) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..pattern.conjuncts.len()).collect();
    let mut bound: Vec<&str> = Vec::new();
    let mut order = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let (pos, _) = remaining
            .iter()
            .enumerate()
            .map(|(pos, &i)| {
                let c = &pattern.conjuncts[i];
                let score = [&c.subject, &c.object]
                    .iter()
                    .map(|t| match t {
                        PatternTerm::Var(v) if bound.contains(&v.as_str()) => 2,
                        PatternTerm::Var(_) => 0,
                        _ => 3,
                    })
                    .sum::<u32>();
                (pos, score)
            })
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
            .expect("non-empty");
        let i = remaining.remove(pos);
        for t in [&pattern.conjuncts[i].subject, &pattern.conjuncts[i].object] {
            if let PatternTerm::Var(v) = t {
                bound.push(v);
            }
        }
        order.push(i);
    }
    order
}

fn resolve<'a>(term: &'a PatternTerm, binding: &'a Binding) -> Option<Term> {
    match term {
        PatternTerm::Var(v) => binding.get(v).cloned(),
        PatternTerm::Iri(i) => Some(Term::Iri(i.clone())),
        PatternTerm::Literal(l) => Some(Term::Literal(l.clone())),
    }
}

fn solve(
    store: &TripleStore,
    pattern: &QueryPattern,
    order: &[usize],
    depth: usize,
    binding: &mut Binding,
    out: &mut Vec<Binding>,
) {
    let Some(&ci) = order.get(depth) else {
        out.push(binding.clone());
        return;
    };
    let c = &pattern.conjuncts[ci];
    let subject = resolve(&c.subject, binding);
    // A subject bound to a literal can never match.
    let subject_iri = match &subject {
        Some(Term::Iri(i)) => Some(i),
        Some(Term::Literal(_)) => return,
        None => None,
    };
    let object = resolve(&c.object, binding);
    let candidates: Vec<&Triple> = store
        .matching(subject_iri, Some(&c.predicate), object.as_ref())
        .collect();
    for t in candidates {
        let mut added: Vec<&str> = Vec::with_capacity(2);
        let mut ok = true;
        for (slot, value) in [(&c.subject, Term::Iri(t.subject.clone())), (&c.object, t.object.clone())] {
            if let PatternTerm::Var(v) = slot {
                match binding.get(v) {
                    Some(existing) if *existing != value => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        binding.insert(v.clone(), value);
                        added.push(v);
                    }
                }
            }
        }
        if ok {
            solve(store, pattern, order, depth + 1, binding, out);
        }
        for v in added {
            binding.remove(v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::turtle;

    fn fixture() -> TripleStore {
        turtle::parse(
            "@prefix : <http://example.org/grhoot#> .\n\
             :Anaphora :hasOperation :Repetition ; :affectedElement :Word ; :isInPosition :Beginning .\n\
             :Epiphora :hasOperation :Repetition ; :affectedElement :Word ; :isInPosition :End .\n\
             :Alliteration :hasOperation :Repetition ; :affectedElement :Sound .\n\
             :Ellipse :hasOperation :Omission ; :affectedElement :Word .\n",
        )
        .unwrap()
    }

    #[test]
    fn two_conjuncts_join_on_shared_variable() {
        let store = fixture();
        let p = QueryPattern::new(vec![
            Conjunct::new(PatternTerm::var("f"), store.iri(":hasOperation"), store.iri(":Repetition")),
            Conjunct::new(PatternTerm::var("f"), store.iri(":affectedElement"), store.iri(":Word")),
        ])
        .unwrap();
        let names: Vec<String> = query(&store, &p)
            .iter()
            .map(|b| b["f"].as_iri().unwrap().local_name().to_string())
            .collect();
        assert_eq!(names, ["Anaphora", "Epiphora"]);
    }

    #[test]
    fn contradictory_conjuncts_are_empty() {
        let store = fixture();
        let p = QueryPattern::new(vec![
            Conjunct::new(PatternTerm::var("f"), store.iri(":isInPosition"), store.iri(":Beginning")),
            Conjunct::new(PatternTerm::var("f"), store.iri(":isInPosition"), store.iri(":End")),
        ])
        .unwrap();
        assert!(query(&store, &p).is_empty());
    }

    #[test]
    fn repeated_variable_within_conjunct() {
        let mut store = fixture();
        store.insert(Triple::new(store.iri("X"), store.iri("sameAs"), store.iri("X")));
        store.insert(Triple::new(store.iri("X"), store.iri("sameAs"), store.iri("Y")));
        let p = QueryPattern::new(vec![Conjunct::new(
            PatternTerm::var("a"),
            store.iri("sameAs"),
            PatternTerm::var("a"),
        )])
        .unwrap();
        assert_eq!(query(&store, &p).len(), 1);
    }

    #[test]
    fn empty_pattern_rejected() {
        assert_eq!(QueryPattern::new(vec![]), Err(PatternError::Empty));
    }
}
