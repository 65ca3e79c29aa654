use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::ontology::Iri;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub id: i64,
    pub text: String,
    pub context: Option<String>,
    pub author: Option<String>,
    pub source: Option<String>,
    pub is_invalid: bool,
    pub is_harmful: bool,
    pub created_at: DateTime<Utc>,
}

impl ExampleRecord {
    /// Eligible to be served for annotation.
    pub fn is_eligible(&self) -> bool {
        !self.is_invalid && !self.is_harmful
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub id: i64,
    pub example_id: i64,
    pub figure_iri: Iri,
    pub is_verified: bool,
    pub created_at: DateTime<Utc>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewExample {
    pub text: String,
    #[serde(default)]
    pub context: Option<String>,
    #[serde(default)]
    pub author: Option<String>,
    #[serde(default)]
    pub source: Option<String>,
}

impl NewExample {
    pub fn has_provenance(&self) -> bool {
        let present = |v: &Option<String>| v.as_deref().is_some_and(|s| !s.trim().is_empty());
        present(&self.author) || present(&self.source)
    }
}

/// Admin flag changes; `None` leaves a flag untouched.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagUpdate {
    #[serde(default)]
    pub example_id: Option<i64>,
    #[serde(default)]
    pub is_harmful: Option<bool>,
    #[serde(default)]
    pub is_invalid: Option<bool>,
    #[serde(default)]
    pub annotation_id: Option<i64>,
    #[serde(default)]
    pub is_verified: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagOutcome {
    pub example: Option<ExampleRecord>,
    pub annotation: Option<AnnotationRecord>,
}

/// One line of the audit export.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExportLine {
    Example(ExampleRecord),
    Annotation(AnnotationRecord),
}
