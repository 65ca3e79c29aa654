//! Template competency questions with answers taken from the ontology.

use crate::ontology::figures::{figures, label_of};
use crate::ontology::{query, Conjunct, Dimension, Iri, PatternTerm, QueryPattern, Term, TripleStore, Vocabulary};
use crate::rag::{figure_block, DocumentTemplates};

use super::dataset::GroundTruthRecord;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CqProperty {
    Definition,
    Example,
    Dimension(Dimension),
}

impl CqProperty {
    pub const ALL: [CqProperty; 7] = [
        CqProperty::Definition,
        CqProperty::Example,
        CqProperty::Dimension(Dimension::Operation),
        CqProperty::Dimension(Dimension::AffectedElement),
        CqProperty::Dimension(Dimension::OperationalForm),
        CqProperty::Dimension(Dimension::Position),
        CqProperty::Dimension(Dimension::Area),
    ];

    pub fn question(self, figure: &str) -> String {
        let what = match self {
            CqProperty::Definition => "die Definition",
            CqProperty::Example => "ein Beispiel",
            CqProperty::Dimension(Dimension::Operation) => "die Operation",
            CqProperty::Dimension(Dimension::AffectedElement) => "das betroffene Element",
            CqProperty::Dimension(Dimension::OperationalForm) => "die Form der Operation",
            CqProperty::Dimension(Dimension::Position) => "die Position",
            CqProperty::Dimension(Dimension::Area) => "der Bereich",
        };
        format!("Was ist {what} für die rhetorische Figur {figure}?")
    }

    /// `?value` holds the answer; literals for definitions and examples,
    /// vocabulary IRIs otherwise.
    pub fn pattern(self, v: &Vocabulary, figure: &Iri) -> QueryPattern {
        let fig = PatternTerm::Iri(figure.clone());
        let var = |n: &str| PatternTerm::Var(n.into());
        let conjuncts = match self {
            CqProperty::Definition => vec![
                Conjunct::new(fig, v.has_definition.clone(), var("node")),
                Conjunct::new(var("node"), v.is_definition.clone(), var("value")),
            ],
            CqProperty::Example => vec![
                Conjunct::new(fig, v.has_example.clone(), var("node")),
                Conjunct::new(var("node"), v.is_example.clone(), var("value")),
            ],
            CqProperty::Dimension(d) => vec![Conjunct::new(fig, v.predicate(d).clone(), var("value"))],
        };
        QueryPattern::new(conjuncts).expect("non-empty pattern with IRI subject")
    }
}

/// One question per figure and property the figure actually has.
pub fn generate_template_cqs(store: &TripleStore, templates: &DocumentTemplates) -> Vec<GroundTruthRecord> {
    let v = Vocabulary::for_store(store);
    let mut out = Vec::new();
    for fig in figures(store) {
        let label = label_of(store, &fig);
        let block = figure_block(store, &fig, templates);
        for prop in CqProperty::ALL {
            let mut values: Vec<String> = query(store, &prop.pattern(&v, &fig))
                .iter()
                .filter_map(|b| b.get("value"))
                .map(|t| match t {
                    Term::Literal(l) => l.lexical.clone(),
                    Term::Iri(i) => label_of(store, i),
                })
                .filter(|s| !s.trim().is_empty())
                .collect();
            values.sort();
            values.dedup();
            if values.is_empty() {
                continue;
            }
            let sep = match prop {
                CqProperty::Dimension(_) => ", ",
                _ => " ",
            };
            out.push(GroundTruthRecord {
                question: prop.question(&label),
                ground_truth: values.join(sep),
                reference_contexts: vec![block.clone()],
            });
        }
    }
    out
}
