//! Core of the rhetorical-figure annotation service.
//!
//! * [`ontology`]: Turtle-subset parsing, reification and conjunctive queries
//!   behind figure search and figure info.
//! * [`annotation`]: verification of submitted texts and the annotation store.
//! * [`rag`]: document flattening, chunking, vector index, auto-merging,
//!   reranking and prompt assembly.
//! * [`evaluation`]: competency-question ground truth and answer/context metrics.

pub mod annotation;
pub mod evaluation;
pub mod external;
pub mod ontology;
pub mod rag;
