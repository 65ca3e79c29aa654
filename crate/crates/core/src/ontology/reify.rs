//! Rewrites an ontology from compound-relation form into fine-grained form.
//!
//! Four rewrites are applied in one pass over the input triples:
//!
//! * compound construction predicates are expanded into the triple bundle
//!   configured for them (`$OBJECT` stands for the original object);
//! * textual definitions become `DefinitionXn` individuals linked with
//!   `hasDefinition`, carrying `isDefinition` and an optional `hasAuthor`;
//! * inline examples become shared `ExampleN` individuals linked with
//!   `hasExample`, carrying `isExample` and optional `hasAuthor`/`hasSource`;
//! * figure individuals are promoted to classes below the figure root class,
//!   and configured specializations become `rdfs:subClassOf` links.
//!
//! Provenance of a definition or example is read from a final line of the
//! literal that consists of a parenthesized citation, `(Author)` or
//! `(Author, Source)`. The transform is idempotent.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use regex::Regex;
use thiserror::Error;

use super::figures::{figure_iris, Vocabulary};
use super::store::{PrefixMap, TripleStore};
use super::term::{vocab, Iri, Literal, Term, Triple};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MappingError {
    #[error("mapping line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("mapping line {line}: cannot resolve `{name}`")]
    Unresolved { line: usize, name: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ObjectTemplate {
    Fixed(String),
    /// `$OBJECT`: the object of the rewritten triple.
    Original,
}

#[derive(Clone, Debug)]
pub struct CompoundMapping {
    pub compound: String,
    pub bundle: Vec<(String, ObjectTemplate)>,
    line: usize,
}

/// Editable reification settings, normally loaded from a mapping file.
#[derive(Clone, Debug)]
pub struct MappingConfig {
    pub mappings: Vec<CompoundMapping>,
    /// `(child, parent)` figure specializations.
    pub subclasses: Vec<(String, String)>,
    /// Local-name pattern identifying compound predicates that need a mapping.
    pub compound_pattern: Regex,
    pub figure_class: String,
    pub definition_predicate: String,
    pub example_predicate: String,
    prefixes: PrefixMap,
}

impl Default for MappingConfig {
    fn default() -> Self {
        MappingConfig {
            mappings: Vec::new(),
            subclasses: Vec::new(),
            compound_pattern: Regex::new(DEFAULT_COMPOUND_PATTERN).expect("valid"),
            figure_class: "RhetoricalFigure".into(),
            definition_predicate: "rdfs:comment".into(),
            example_predicate: "isExample".into(),
            prefixes: PrefixMap::new(),
        }
    }
}

const DEFAULT_COMPOUND_PATTERN: &str = r"^is[A-Z]\w*Element\w*$";

/// Mapping shipped with the crate; covers the construction relations of the
/// bundled sample ontology.
pub const DEFAULT_MAPPING: &str = include_str!("../../data/reification.map");

impl MappingConfig {
    /// Parses the mapping file format:
    ///
    /// ```text
    /// # comment
    /// @prefix g: <http://example.org/grhoot#> .
    /// @figure-class RhetoricalFigure
    /// @compound-pattern ^is[A-Z]\w*Element\w*$
    /// @subclass Antimetabole < Chiasmus
    /// isRepeatableElementOfSameForm -> hasOperation=Repetition; affectedElement=$OBJECT; hasOperationForm=SameForm
    /// ```
    pub fn parse(text: &str) -> Result<Self, MappingError> {
        let mut cfg = MappingConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            let syntax = |message: &str| MappingError::Syntax {
                line,
                message: message.to_string(),
            };
            if let Some(rest) = l.strip_prefix('@') {
                let (directive, arg) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
                let arg = arg.trim();
                match directive {
                    "prefix" => {
                        let arg = arg.trim_end_matches('.').trim();
                        let (p, iri) = arg.split_once(':').ok_or_else(|| syntax("expected `p: <iri>`"))?;
                        let iri = iri
                            .trim()
                            .strip_prefix('<')
                            .and_then(|s| s.strip_suffix('>'))
                            .ok_or_else(|| syntax("expected `<iri>`"))?;
                        cfg.prefixes.insert(p.trim(), iri);
                    }
                    "figure-class" => cfg.figure_class = arg.to_string(),
                    "definition-predicate" => cfg.definition_predicate = arg.to_string(),
                    "example-predicate" => cfg.example_predicate = arg.to_string(),
                    "compound-pattern" => {
                        cfg.compound_pattern = Regex::new(arg).map_err(|e| syntax(&e.to_string()))?;
                    }
                    "subclass" => {
                        let (child, parent) = arg.split_once('<').ok_or_else(|| syntax("expected `Child < Parent`"))?;
                        cfg.subclasses
                            .push((child.trim().to_string(), parent.trim().to_string()));
                    }
                    other => return Err(syntax(&format!("unknown directive `@{other}`"))),
                }
                continue;
            }
            let (compound, bundle) = l.split_once("->").ok_or_else(|| syntax("expected `compound -> p=o; ...`"))?;
            let compound = compound.trim();
            if compound.is_empty() {
                return Err(syntax("empty compound predicate"));
            }
            let mut pairs = Vec::new();
            for part in bundle.split(';').map(str::trim).filter(|p| !p.is_empty()) {
                let (p, o) = part.split_once('=').ok_or_else(|| syntax("expected `predicate=object`"))?;
                let o = o.trim();
                let template = if o == "$OBJECT" {
                    ObjectTemplate::Original
                } else {
                    ObjectTemplate::Fixed(o.to_string())
                };
                pairs.push((p.trim().to_string(), template));
            }
            if pairs.is_empty() {
                return Err(syntax("empty triple bundle"));
            }
            cfg.mappings.push(CompoundMapping {
                compound: compound.to_string(),
                bundle: pairs,
                line,
            });
        }
        Ok(cfg)
    }

    pub fn default_mapping() -> Self {
        Self::parse(DEFAULT_MAPPING).expect("bundled mapping parses")
    }

    fn resolve(&self, store: &TripleStore, name: &str, line: usize) -> Result<Iri, MappingError> {
        if let Some((p, local)) = name.split_once(':') {
            if let Some(iri) = self.prefixes.expand(p, local) {
                return Ok(iri);
            }
        }
        store.prefixes().resolve(name).ok_or_else(|| MappingError::Unresolved {
            line,
            name: name.to_string(),
        })
    }
}

/// Summary of one reification run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TransformationReport {
    /// Compound-looking triples without a mapping, passed through unchanged.
    pub unmapped: Vec<Triple>,
    pub compound_rewrites: usize,
    pub definitions: usize,
    pub examples: usize,
    pub classes: usize,
    pub subclass_links: usize,
}

impl TransformationReport {
    pub fn summary(&self) -> String {
        format!(
            "compound relations rewritten: {}\ndefinitions: {}\nexamples: {}\nclasses: {}\nsubclass links: {}\nunmapped: {}\n",
            self.compound_rewrites,
            self.definitions,
            self.examples,
            self.classes,
            self.subclass_links,
            self.unmapped.len()
        )
    }

    /// Plain-text list of unmapped relations, one per line.
    pub fn to_text(&self, prefixes: &PrefixMap) -> String {
        let mut out = String::new();
        for t in &self.unmapped {
            let o = match &t.object {
                Term::Iri(i) => prefixes.compact(i),
                Term::Literal(l) => format!("{:?}", l.lexical),
            };
            let _ = writeln!(
                out,
                "unmapped: {} {} {}",
                prefixes.compact(&t.subject),
                prefixes.compact(&t.predicate),
                o
            );
        }
        out
    }
}

pub struct Reification {
    pub store: TripleStore,
    pub report: TransformationReport,
}

/// Splits a trailing `(Author, Source)` line off a literal.
pub fn split_citation(text: &str) -> (&str, Option<&str>) {
    let trimmed = text.trim_end();
    if let Some(nl) = trimmed.rfind('\n') {
        let last = trimmed[nl + 1..].trim();
        if let Some(inner) = last.strip_prefix('(').and_then(|s| s.strip_suffix(')')) {
            if !inner.trim().is_empty() {
                return (trimmed[..nl].trim_end(), Some(inner.trim()));
            }
        }
    }
    (text, None)
}

pub fn reify(store: &TripleStore, config: &MappingConfig) -> Result<Reification, MappingError> {
    let v = Vocabulary::for_store(store);
    let figure_root = config.resolve(store, &config.figure_class, 0)?;
    let definition_pred = config.resolve(store, &config.definition_predicate, 0)?;
    let example_pred = config.resolve(store, &config.example_predicate, 0)?;
    let rdf_type = Iri::new(vocab::RDF_TYPE);
    let sub_class_of = Iri::new(vocab::RDFS_SUBCLASS_OF);
    let owl_class = Iri::new(vocab::OWL_CLASS);
    let owl_individual = Term::Iri(Iri::new(vocab::OWL_NAMED_INDIVIDUAL));

    let mut mappings: HashMap<Iri, Vec<(Iri, ObjectTemplate)>> = HashMap::new();
    for m in &config.mappings {
        let compound = config.resolve(store, &m.compound, m.line)?;
        let mut bundle = Vec::new();
        for (p, o) in &m.bundle {
            bundle.push((config.resolve(store, p, m.line)?, o.clone()));
        }
        mappings.insert(compound, bundle);
    }
    let mut subclasses = Vec::new();
    for (c, p) in &config.subclasses {
        subclasses.push((config.resolve(store, c, 0)?, config.resolve(store, p, 0)?));
    }

    let figures = figure_iris(store, &figure_root);
    // Definition and example individuals that are already reified.
    let reified: HashSet<&Iri> = store
        .iter()
        .filter(|t| t.predicate == v.has_definition || t.predicate == v.has_example)
        .filter_map(|t| t.object.as_iri())
        .collect();

    let mut names = NameAllocator::new(store);
    let mut examples_by_content: HashMap<(Literal, Option<String>, Option<String>), Iri> = HashMap::new();
    for t in store.iter().filter(|t| t.predicate == v.has_example) {
        if let Some(e) = t.object.as_iri() {
            if let Some(text) = store.literal_value(e, &v.is_example, None) {
                let author = store.literal_value(e, &v.has_author, None).map(|l| l.lexical.clone());
                let source = store.literal_value(e, &v.has_source, None).map(|l| l.lexical.clone());
                examples_by_content.insert((text.clone(), author, source), e.clone());
            }
        }
    }

    let mut out = TripleStore::with_prefixes(store.prefixes().clone());
    let mut report = TransformationReport::default();
    let ns = store.prefixes().default_namespace().to_string();

    for t in store.iter() {
        if let Some(bundle) = mappings.get(&t.predicate) {
            for (p, o) in bundle {
                let object = match o {
                    ObjectTemplate::Original => t.object.clone(),
                    ObjectTemplate::Fixed(name) => Term::Iri(config.resolve(store, name, 0)?),
                };
                out.insert(Triple::new(t.subject.clone(), p.clone(), object));
            }
            report.compound_rewrites += 1;
            continue;
        }
        if t.predicate.as_str().starts_with(&ns)
            && config.compound_pattern.is_match(t.predicate.local_name())
        {
            report.unmapped.push(t.clone());
            out.insert(t.clone());
            continue;
        }
        let is_individual = reified.contains(&t.subject);
        match &t.object {
            Term::Literal(lit) if t.predicate == definition_pred && !is_individual => {
                let (text, citation) = split_citation(&lit.lexical);
                let id = names.definition(&t.subject);
                out.insert(Triple::new(t.subject.clone(), v.has_definition.clone(), id.clone()));
                if let Some(author) = citation {
                    out.insert(Triple::new(id.clone(), v.has_author.clone(), Literal::plain(author)));
                }
                out.insert(Triple::new(
                    id,
                    v.is_definition.clone(),
                    Literal {
                        lexical: text.to_string(),
                        lang: lit.lang.clone(),
                    },
                ));
                report.definitions += 1;
            }
            Term::Literal(lit) if t.predicate == example_pred && !is_individual => {
                let (text, citation) = split_citation(&lit.lexical);
                let (author, source) = match citation {
                    Some(c) => match c.split_once(", ") {
                        Some((a, s)) => (Some(a.trim().to_string()), Some(s.trim().to_string())),
                        None => (Some(c.to_string()), None),
                    },
                    None => (None, None),
                };
                let text = Literal {
                    lexical: text.to_string(),
                    lang: lit.lang.clone(),
                };
                let key = (text.clone(), author.clone(), source.clone());
                let id = match examples_by_content.get(&key) {
                    Some(id) => id.clone(),
                    None => {
                        let id = names.example();
                        examples_by_content.insert(key, id.clone());
                        report.examples += 1;
                        id
                    }
                };
                out.insert(Triple::new(t.subject.clone(), v.has_example.clone(), id.clone()));
                if let Some(a) = author {
                    out.insert(Triple::new(id.clone(), v.has_author.clone(), Literal::plain(a)));
                }
                if let Some(s) = source {
                    out.insert(Triple::new(id.clone(), v.has_source.clone(), Literal::plain(s)));
                }
                out.insert(Triple::new(id, example_pred.clone(), text));
            }
            Term::Iri(o) if t.predicate == rdf_type && *o == figure_root && figures.contains(&t.subject) => {
                out.insert(Triple::new(t.subject.clone(), rdf_type.clone(), owl_class.clone()));
                out.insert(Triple::new(t.subject.clone(), sub_class_of.clone(), figure_root.clone()));
                report.classes += 1;
            }
            obj if t.predicate == rdf_type && *obj == owl_individual && figures.contains(&t.subject) => {}
            _ => {
                out.insert(t.clone());
            }
        }
    }

    for (child, parent) in subclasses {
        if figures.contains(&child)
            && figures.contains(&parent)
            && child != parent
            && out.insert(Triple::new(child, sub_class_of.clone(), parent))
        {
            report.subclass_links += 1;
        }
    }

    Ok(Reification { store: out, report })
}

struct NameAllocator {
    taken: BTreeSet<String>,
    next_example: usize,
    ns: String,
}

impl NameAllocator {
    fn new(store: &TripleStore) -> Self {
        let ns = store.prefixes().default_namespace().to_string();
        let mut taken = BTreeSet::new();
        let mut max_example = 0;
        let mut note = |iri: &Iri| {
            if let Some(local) = iri.as_str().strip_prefix(ns.as_str()) {
                if let Some(n) = local.strip_prefix("Example").and_then(|d| d.parse::<usize>().ok()) {
                    max_example = max_example.max(n);
                }
                taken.insert(local.to_string());
            }
        };
        for t in store.iter() {
            note(&t.subject);
            if let Term::Iri(o) = &t.object {
                note(o);
            }
        }
        NameAllocator {
            taken,
            next_example: max_example + 1,
            ns,
        }
    }

    fn definition(&mut self, figure: &Iri) -> Iri {
        let base = figure.local_name();
        let mut n = 1;
        loop {
            let local = format!("Definition{base}{n}");
            if self.taken.insert(local.clone()) {
                return Iri::new(format!("{}{local}", self.ns));
            }
            n += 1;
        }
    }

    fn example(&mut self) -> Iri {
        loop {
            let local = format!("Example{}", self.next_example);
            self.next_example += 1;
            if self.taken.insert(local.clone()) {
                return Iri::new(format!("{}{local}", self.ns));
            }
        }
    }
}
