//! Flattening of a reified ontology into one prose document, one block per
//! figure.

use serde::{Deserialize, Serialize};

use crate::ontology::figures::{figure_info, figures, label_of};
use crate::ontology::{Dimension, Iri, Term, TripleStore, Vocabulary};

/// Sentence templates. Placeholders: `{figure}`, `{value}`, `{text}`,
/// `{author}`, `{source}`, `{provenance}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DocumentTemplates {
    pub heading: String,
    pub superclass: String,
    pub operation: String,
    pub affected_element: String,
    pub operational_form: String,
    pub position: String,
    pub area: String,
    pub definition: String,
    pub definition_author: String,
    pub example: String,
    pub example_provenance: String,
}

impl Default for DocumentTemplates {
    fn default() -> Self {
        DocumentTemplates {
            heading: "Rhetorische Figur: {figure}".into(),
            superclass: "{figure} ist eine Unterart von {value}.".into(),
            operation: "Die Operation von {figure} ist {value}.".into(),
            affected_element: "Das betroffene Element von {figure} ist {value}.".into(),
            operational_form: "Die Form der Operation von {figure} ist {value}.".into(),
            position: "Die Position von {figure} ist {value}.".into(),
            area: "Der Bereich von {figure} ist {value}.".into(),
            definition: "Definition von {figure}: {text}".into(),
            definition_author: " (Autor: {author})".into(),
            example: "Beispiel für {figure}: {text}".into(),
            example_provenance: " ({provenance})".into(),
        }
    }
}

impl DocumentTemplates {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    fn for_dimension(&self, dim: Dimension) -> &str {
        match dim {
            Dimension::Operation => &self.operation,
            Dimension::AffectedElement => &self.affected_element,
            Dimension::OperationalForm => &self.operational_form,
            Dimension::Position => &self.position,
            Dimension::Area => &self.area,
        }
    }
}

fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

/// One block per figure in IRI order, blocks separated by a blank line.
pub fn serialize_ontology(store: &TripleStore, templates: &DocumentTemplates) -> String {
    figures(store)
        .iter()
        .map(|f| figure_block(store, f, templates))
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// The block of a single figure. Panics if `fig` is not a figure of `store`.
pub fn figure_block(store: &TripleStore, fig: &Iri, templates: &DocumentTemplates) -> String {
    let v = Vocabulary::for_store(store);
    let info = figure_info(store, fig).expect("not a figure");
    let name = info.label.as_str();
    let mut lines = vec![fill(&templates.heading, &[("figure", name)])];
    for parent in &info.parents {
        lines.push(fill(
            &templates.superclass,
            &[("figure", name), ("value", &label_of(store, parent))],
        ));
    }
    for dim in Dimension::ALL {
        let mut values: Vec<String> = store
            .objects(fig, v.predicate(dim))
            .filter_map(Term::as_iri)
            .map(|o| label_of(store, o))
            .collect();
        values.sort();
        values.dedup();
        for value in values {
            lines.push(fill(templates.for_dimension(dim), &[("figure", name), ("value", &value)]));
        }
    }
    for d in &info.definitions {
        let mut line = fill(&templates.definition, &[("figure", name), ("text", &d.text.lexical)]);
        if let Some(a) = &d.author {
            line.push_str(&fill(&templates.definition_author, &[("author", &a.lexical)]));
        }
        lines.push(line);
    }
    for e in &info.examples {
        let mut line = fill(&templates.example, &[("figure", name), ("text", &e.text.lexical)]);
        let author = e.author.as_ref().map(|l| l.lexical.as_str()).unwrap_or("");
        let source = e.source.as_ref().map(|l| l.lexical.as_str()).unwrap_or("");
        let provenance = [author, source].iter().filter(|s| !s.is_empty()).copied().collect::<Vec<_>>().join(", ");
        if !provenance.is_empty() {
            line.push_str(&fill(
                &templates.example_provenance,
                &[("provenance", &provenance), ("author", author), ("source", source)],
            ));
        }
        lines.push(line);
    }
    lines.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::{self, MappingConfig};

    #[test]
    fn empty_store_empty_document() {
        assert_eq!(serialize_ontology(&TripleStore::new(), &DocumentTemplates::default()), "");
    }

    #[test]
    fn shared_example_in_every_block() {
        let store = ontology::load(ontology::SAMPLE_ONTOLOGY, &MappingConfig::default_mapping())
            .unwrap()
            .store;
        let doc = serialize_ontology(&store, &DocumentTemplates::default());
        let blocks: Vec<&str> = doc.split("\n\n").collect();
        assert_eq!(blocks.len(), 12);
        let with_caesar = blocks.iter().filter(|b| b.contains("Ich kam, ich sah, ich siegte.")).count();
        assert_eq!(with_caesar, 3);
        assert!(doc.contains("Antimetabole ist eine Unterart von Chiasmus."));
    }

    #[test]
    fn templates_from_toml_override_partially() {
        let t = DocumentTemplates::from_toml("heading = \"Figur {figure}\"\n").unwrap();
        assert_eq!(t.heading, "Figur {figure}");
        assert_eq!(t.area, DocumentTemplates::default().area);
    }
}
