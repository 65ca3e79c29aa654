//! Rhetorical-figure ontology: Turtle-subset I/O, reification and
//! conjunctive querying.

pub mod figures;
pub mod query;
pub mod reify;
pub mod store;
pub mod term;
pub mod turtle;

use thiserror::Error;

pub use figures::{
    all_figures, check_hierarchy, figure_info, find_figure, property_vocabulary, search_figures, Choice,
    Definition, Dimension, FigureClass, FigureError, FigureExample, FigureInfo, PropertySelection, Vocabulary,
};
pub use query::{query, Binding, Conjunct, PatternTerm, QueryPattern};
pub use reify::{reify, MappingConfig, MappingError, Reification, TransformationReport};
pub use store::{PrefixMap, TripleStore};
pub use term::{Iri, Literal, Term, Triple};
pub use turtle::TurtleError;

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error(transparent)]
    Parse(#[from] TurtleError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Figure(#[from] FigureError),
}

/// Parses, reifies and validates an ontology document.
pub fn load(document: &str, mapping: &MappingConfig) -> Result<Reification, OntologyError> {
    let store = turtle::parse(document)?;
    let reified = reify(&store, mapping)?;
    check_hierarchy(&reified.store)?;
    Ok(reified)
}

/// Sample ontology in compound-relation form, shipped for demos and tests.
pub const SAMPLE_ONTOLOGY: &str = include_str!("../../data/sample_ontology.ttl");
