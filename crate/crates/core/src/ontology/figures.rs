//! Figure-level view of a reified ontology: search by construction
//! properties, figure info and dropdown vocabularies.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::query::{query, Conjunct, PatternTerm, QueryPattern};
use super::store::TripleStore;
use super::term::{vocab, Iri, Literal, Term};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FigureError {
    #[error("unknown figure `{0}`")]
    UnknownFigure(String),
    #[error("subclass cycle through {}", .0.iter().map(|i| i.local_name()).collect::<Vec<_>>().join(" -> "))]
    Cycle(Vec<Iri>),
}

/// Resolved IRIs of the reified vocabulary for one store.
#[derive(Clone, Debug)]
pub struct Vocabulary {
    pub figure_class: Iri,
    pub has_operation: Iri,
    pub affected_element: Iri,
    pub has_operation_form: Iri,
    pub is_in_position: Iri,
    pub is_in_area: Iri,
    pub has_definition: Iri,
    pub is_definition: Iri,
    pub has_example: Iri,
    pub is_example: Iri,
    pub has_author: Iri,
    pub has_source: Iri,
    pub label: Iri,
    pub sub_class_of: Iri,
    pub rdf_type: Iri,
}

impl Vocabulary {
    pub fn for_store(store: &TripleStore) -> Self {
        let ns = store.prefixes().default_namespace();
        let t = |local: &str| Iri::new(format!("{ns}{local}"));
        Vocabulary {
            figure_class: t("RhetoricalFigure"),
            has_operation: t("hasOperation"),
            affected_element: t("affectedElement"),
            has_operation_form: t("hasOperationForm"),
            is_in_position: t("isInPosition"),
            is_in_area: t("isInArea"),
            has_definition: t("hasDefinition"),
            is_definition: t("isDefinition"),
            has_example: t("hasExample"),
            is_example: t("isExample"),
            has_author: t("hasAuthor"),
            has_source: t("hasSource"),
            label: Iri::new(vocab::RDFS_LABEL),
            sub_class_of: Iri::new(vocab::RDFS_SUBCLASS_OF),
            rdf_type: Iri::new(vocab::RDF_TYPE),
        }
    }

    pub fn predicate(&self, dim: Dimension) -> &Iri {
        match dim {
            Dimension::Operation => &self.has_operation,
            Dimension::AffectedElement => &self.affected_element,
            Dimension::OperationalForm => &self.has_operation_form,
            Dimension::Position => &self.is_in_position,
            Dimension::Area => &self.is_in_area,
        }
    }
}

/// The five dropdown dimensions of the property search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Operation,
    AffectedElement,
    OperationalForm,
    Position,
    Area,
}

impl Dimension {
    pub const ALL: [Dimension; 5] = [
        Dimension::Operation,
        Dimension::AffectedElement,
        Dimension::OperationalForm,
        Dimension::Position,
        Dimension::Area,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Operation => "operation",
            Dimension::AffectedElement => "affected_element",
            Dimension::OperationalForm => "operational_form",
            Dimension::Position => "position",
            Dimension::Area => "area",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dimension::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| format!("unknown dimension `{s}`"))
    }
}

/// One dropdown value; `NoIdea` is the "Keines davon/Weiß nicht" wildcard.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum Choice {
    #[default]
    NoIdea,
    Value(Iri),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PropertySelection {
    pub operation: Choice,
    pub affected_element: Choice,
    pub operational_form: Choice,
    pub position: Choice,
    pub area: Choice,
}

impl PropertySelection {
    pub fn get(&self, dim: Dimension) -> &Choice {
        match dim {
            Dimension::Operation => &self.operation,
            Dimension::AffectedElement => &self.affected_element,
            Dimension::OperationalForm => &self.operational_form,
            Dimension::Position => &self.position,
            Dimension::Area => &self.area,
        }
    }

    pub fn set(&mut self, dim: Dimension, choice: Choice) {
        *match dim {
            Dimension::Operation => &mut self.operation,
            Dimension::AffectedElement => &mut self.affected_element,
            Dimension::OperationalForm => &mut self.operational_form,
            Dimension::Position => &mut self.position,
            Dimension::Area => &mut self.area,
        } = choice;
    }

    pub fn constrained(&self) -> impl Iterator<Item = (Dimension, &Iri)> {
        Dimension::ALL.into_iter().filter_map(|d| match self.get(d) {
            Choice::Value(i) => Some((d, i)),
            Choice::NoIdea => None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FigureClass {
    pub iri: Iri,
    pub label: String,
    pub parents: Vec<Iri>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Definition {
    pub id: Iri,
    pub text: Literal,
    pub author: Option<Literal>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FigureExample {
    pub id: Iri,
    pub text: Literal,
    pub author: Option<Literal>,
    pub source: Option<Literal>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FigureInfo {
    pub iri: Iri,
    pub label: String,
    pub definitions: Vec<Definition>,
    pub examples: Vec<FigureExample>,
    pub parents: Vec<Iri>,
}

/// Figures of a store in either form: individuals typed with the root class,
/// classes below the root class, and transitively their subclasses.
pub fn figure_iris(store: &TripleStore, root: &Iri) -> BTreeSet<Iri> {
    let rdf_type = Iri::new(vocab::RDF_TYPE);
    let sub = Iri::new(vocab::RDFS_SUBCLASS_OF);
    let root_term = Term::Iri(root.clone());
    let mut figures: BTreeSet<Iri> = store
        .subjects(&rdf_type, &root_term)
        .chain(store.subjects(&sub, &root_term))
        .cloned()
        .collect();
    loop {
        let more: Vec<Iri> = store
            .matching(None, Some(&sub), None)
            .filter(|t| t.object.as_iri().is_some_and(|o| figures.contains(o)))
            .map(|t| t.subject.clone())
            .filter(|s| !figures.contains(s))
            .collect();
        if more.is_empty() {
            return figures;
        }
        figures.extend(more);
    }
}

pub fn figures(store: &TripleStore) -> BTreeSet<Iri> {
    figure_iris(store, &Vocabulary::for_store(store).figure_class)
}

/// Display label: German `rdfs:label`, then any label, then the local name.
pub fn label_of(store: &TripleStore, iri: &Iri) -> String {
    store
        .literal_value(iri, &Iri::new(vocab::RDFS_LABEL), Some("de"))
        .map(|l| l.lexical.clone())
        .unwrap_or_else(|| iri.local_name().to_string())
}

fn figure_class(store: &TripleStore, figures: &BTreeSet<Iri>, iri: &Iri) -> FigureClass {
    FigureClass {
        iri: iri.clone(),
        label: label_of(store, iri),
        parents: parents(store, figures, iri),
    }
}

fn parents(store: &TripleStore, figures: &BTreeSet<Iri>, iri: &Iri) -> Vec<Iri> {
    let sub = Iri::new(vocab::RDFS_SUBCLASS_OF);
    let mut out: Vec<Iri> = store
        .objects(iri, &sub)
        .filter_map(Term::as_iri)
        .filter(|p| figures.contains(*p) && *p != iri)
        .cloned()
        .collect();
    out.sort();
    out.dedup();
    out
}

pub fn all_figures(store: &TripleStore) -> Vec<FigureClass> {
    let figs = figures(store);
    figs.iter().map(|f| figure_class(store, &figs, f)).collect()
}

/// Fails when `rdfs:subClassOf` links between figures form a cycle
/// (self-links included).
pub fn check_hierarchy(store: &TripleStore) -> Result<(), FigureError> {
    let sub = Iri::new(vocab::RDFS_SUBCLASS_OF);
    let figs = figures(store);
    let mut edges: BTreeMap<&Iri, Vec<&Iri>> = BTreeMap::new();
    for t in store.matching(None, Some(&sub), None) {
        if let Some(o) = t.object.as_iri() {
            if figs.contains(&t.subject) && figs.contains(o) {
                edges.entry(&t.subject).or_default().push(o);
            }
        }
    }
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    fn visit<'a>(
        node: &'a Iri,
        edges: &BTreeMap<&'a Iri, Vec<&'a Iri>>,
        marks: &mut BTreeMap<&'a Iri, Mark>,
        path: &mut Vec<&'a Iri>,
    ) -> Result<(), FigureError> {
        match marks.get(node) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::Open) => {
                let start = path.iter().position(|n| *n == node).unwrap_or(0);
                let mut cycle: Vec<Iri> = path[start..].iter().map(|i| (*i).clone()).collect();
                cycle.push(node.clone());
                return Err(FigureError::Cycle(cycle));
            }
            None => {}
        }
        marks.insert(node, Mark::Open);
        path.push(node);
        for next in edges.get(node).into_iter().flatten() {
            visit(next, edges, marks, path)?;
        }
        path.pop();
        marks.insert(node, Mark::Done);
        Ok(())
    }
    let mut marks = BTreeMap::new();
    for node in edges.keys() {
        visit(node, &edges, &mut marks, &mut Vec::new())?;
    }
    Ok(())
}

/// Conjunctive pattern for a selection: one conjunct per concrete dimension.
pub fn selection_pattern(store: &TripleStore, selection: &PropertySelection) -> Option<QueryPattern> {
    let v = Vocabulary::for_store(store);
    let conjuncts: Vec<Conjunct> = selection
        .constrained()
        .map(|(d, value)| Conjunct::new(PatternTerm::var("figure"), v.predicate(d).clone(), value.clone()))
        .collect();
    QueryPattern::new(conjuncts).ok()
}

/// Figures matching every concrete dimension exactly. No subclass inference.
pub fn search_figures(store: &TripleStore, selection: &PropertySelection) -> Vec<FigureClass> {
    let figs = figures(store);
    let Some(pattern) = selection_pattern(store, selection) else {
        return figs.iter().map(|f| figure_class(store, &figs, f)).collect();
    };
    let hits: BTreeSet<Iri> = query(store, &pattern)
        .into_iter()
        .filter_map(|b| b.get("figure").and_then(Term::as_iri).cloned())
        .filter(|f| figs.contains(f))
        .collect();
    hits.iter().map(|f| figure_class(store, &figs, f)).collect()
}

pub fn figure_info(store: &TripleStore, figure: &Iri) -> Result<FigureInfo, FigureError> {
    let figs = figures(store);
    if !figs.contains(figure) {
        return Err(FigureError::UnknownFigure(figure.to_string()));
    }
    let v = Vocabulary::for_store(store);
    let linked = |pred: &Iri| -> Vec<Iri> {
        let mut ids: Vec<Iri> = store.objects(figure, pred).filter_map(Term::as_iri).cloned().collect();
        ids.sort();
        ids.dedup();
        ids
    };
    let definitions = linked(&v.has_definition)
        .into_iter()
        .filter_map(|id| {
            let text = store.literal_value(&id, &v.is_definition, Some("de"))?.clone();
            let author = store.literal_value(&id, &v.has_author, None).cloned();
            Some(Definition { id, text, author })
        })
        .filter(|d| !d.text.lexical.is_empty())
        .collect();
    let examples = linked(&v.has_example)
        .into_iter()
        .filter_map(|id| {
            let text = store.literal_value(&id, &v.is_example, Some("de"))?.clone();
            let author = store.literal_value(&id, &v.has_author, None).cloned();
            let source = store.literal_value(&id, &v.has_source, None).cloned();
            Some(FigureExample { id, text, author, source })
        })
        .filter(|e| !e.text.lexical.is_empty())
        .collect();
    Ok(FigureInfo {
        iri: figure.clone(),
        label: label_of(store, figure),
        definitions,
        examples,
        parents: parents(store, &figs, figure),
    })
}

/// Distinct values observed for a dimension's predicate, sorted.
pub fn property_vocabulary(store: &TripleStore, dim: Dimension) -> Vec<Iri> {
    let v = Vocabulary::for_store(store);
    let values: BTreeSet<Iri> = store
        .matching(None, Some(v.predicate(dim)), None)
        .filter_map(|t| t.object.as_iri().cloned())
        .collect();
    values.into_iter().collect()
}

/// Finds a figure by label (case-insensitive), local name, prefixed name or IRI.
pub fn find_figure(store: &TripleStore, name: &str) -> Option<Iri> {
    let figs = figures(store);
    let name = name.trim();
    if let Some(iri) = store.prefixes().resolve(name) {
        if figs.contains(&iri) {
            return Some(iri);
        }
    }
    let lower = name.to_lowercase();
    figs.iter()
        .find(|f| f.local_name().to_lowercase() == lower)
        .or_else(|| figs.iter().find(|f| label_of(store, f).to_lowercase() == lower))
        .cloned()
}
