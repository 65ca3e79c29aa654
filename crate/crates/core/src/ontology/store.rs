use std::collections::{HashMap, HashSet};

use indexmap::IndexMap;

use super::term::{vocab, Iri, Literal, Term, Triple};

/// Prefix declarations of a document, in declaration order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PrefixMap {
    entries: IndexMap<String, String>,
}

impl PrefixMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, prefix: impl Into<String>, namespace: impl Into<String>) {
        self.entries.insert(prefix.into(), namespace.into());
    }

    pub fn get(&self, prefix: &str) -> Option<&str> {
        self.entries.get(prefix).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(p, n)| (p.as_str(), n.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Namespace of the empty prefix, or the built-in default.
    pub fn default_namespace(&self) -> &str {
        self.get("").unwrap_or(vocab::DEFAULT_NS)
    }

    pub fn expand(&self, prefix: &str, local: &str) -> Option<Iri> {
        self.get(prefix).map(|ns| Iri::new(format!("{ns}{local}")))
    }

    /// Resolves `prefix:local`, `<absolute>` or a bare local name (default namespace).
    pub fn resolve(&self, name: &str) -> Option<Iri> {
        let name = name.trim();
        if let Some(inner) = name.strip_prefix('<').and_then(|s| s.strip_suffix('>')) {
            return Some(Iri::new(inner));
        }
        if name == "a" {
            return Some(Iri::new(vocab::RDF_TYPE));
        }
        match name.split_once(':') {
            Some((prefix, local)) => self.expand(prefix, local).or_else(|| match prefix {
                "rdf" => Some(Iri::new(format!("{}{local}", vocab::RDF))),
                "rdfs" => Some(Iri::new(format!("{}{local}", vocab::RDFS))),
                "owl" => Some(Iri::new(format!("{}{local}", vocab::OWL))),
                _ => None,
            }),
            None if !name.is_empty() => Some(Iri::new(format!("{}{name}", self.default_namespace()))),
            None => None,
        }
    }

    /// Prefixed form of `iri` when a declared namespace covers it, else `<iri>`.
    pub fn compact(&self, iri: &Iri) -> String {
        let s = iri.as_str();
        let best = self
            .entries
            .iter()
            .filter(|(_, ns)| s.starts_with(ns.as_str()) && is_pn_local(&s[ns.len()..]))
            .max_by_key(|(_, ns)| ns.len());
        match best {
            Some((p, ns)) => format!("{p}:{}", &s[ns.len()..]),
            None => format!("<{s}>"),
        }
    }
}

pub(crate) fn is_pn_local(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_alphanumeric() || c == '_' => {}
        _ => return false,
    }
    s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '-')
}

/// Set of triples with stable insertion order and per-position indexes.
#[derive(Clone, Debug, Default)]
pub struct TripleStore {
    triples: Vec<Triple>,
    seen: HashSet<Triple>,
    prefixes: PrefixMap,
    by_subject: HashMap<Iri, Vec<usize>>,
    by_predicate: HashMap<Iri, Vec<usize>>,
    by_object: HashMap<Term, Vec<usize>>,
}

impl PartialEq for TripleStore {
    fn eq(&self, other: &Self) -> bool {
        self.triples == other.triples
    }
}

impl TripleStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_prefixes(prefixes: PrefixMap) -> Self {
        TripleStore {
            prefixes,
            ..Self::default()
        }
    }

    /// Inserts a triple; returns `false` when it was already present.
    pub fn insert(&mut self, triple: Triple) -> bool {
        if self.seen.contains(&triple) {
            return false;
        }
        let idx = self.triples.len();
        self.by_subject.entry(triple.subject.clone()).or_default().push(idx);
        self.by_predicate.entry(triple.predicate.clone()).or_default().push(idx);
        self.by_object.entry(triple.object.clone()).or_default().push(idx);
        self.seen.insert(triple.clone());
        self.triples.push(triple);
        true
    }

    pub fn extend(&mut self, triples: impl IntoIterator<Item = Triple>) {
        for t in triples {
            self.insert(t);
        }
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.seen.contains(triple)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn prefixes(&self) -> &PrefixMap {
        &self.prefixes
    }

    pub fn prefixes_mut(&mut self) -> &mut PrefixMap {
        &mut self.prefixes
    }

    /// Resolves a name against this store's prefixes.
    pub fn iri(&self, name: &str) -> Iri {
        self.prefixes
            .resolve(name)
            .unwrap_or_else(|| Iri::new(format!("{}{name}", self.prefixes.default_namespace())))
    }

    /// Triples matching the given pattern; `None` is a wildcard.
    pub fn matching<'a>(
        &'a self,
        subject: Option<&Iri>,
        predicate: Option<&Iri>,
        object: Option<&Term>,
    ) -> Box<dyn Iterator<Item = &'a Triple> + 'a> {
        // Walk the smallest applicable posting list.
        let lists = [
            subject.map(|s| self.by_subject.get(s)),
            predicate.map(|p| self.by_predicate.get(p)),
            object.map(|o| self.by_object.get(o)),
        ];
        let mut best: Option<&Vec<usize>> = None;
        for list in lists.into_iter().flatten() {
            match list {
                None => return Box::new(std::iter::empty()),
                Some(l) if best.is_none_or(|b| l.len() < b.len()) => best = Some(l),
                Some(_) => {}
            }
        }
        let subject = subject.cloned();
        let predicate = predicate.cloned();
        let object = object.cloned();
        let filter = move |t: &&Triple| {
            subject.as_ref().is_none_or(|s| &t.subject == s)
                && predicate.as_ref().is_none_or(|p| &t.predicate == p)
                && object.as_ref().is_none_or(|o| &t.object == o)
        };
        match best {
            Some(list) => Box::new(list.iter().map(|&i| &self.triples[i]).filter(filter)),
            None => Box::new(self.triples.iter().filter(filter)),
        }
    }

    pub fn objects<'a>(&'a self, subject: &Iri, predicate: &Iri) -> impl Iterator<Item = &'a Term> + 'a {
        self.matching(Some(subject), Some(predicate), None).map(|t| &t.object)
    }

    pub fn subjects<'a>(&'a self, predicate: &Iri, object: &Term) -> impl Iterator<Item = &'a Iri> + 'a {
        self.matching(None, Some(predicate), Some(object)).map(|t| &t.subject)
    }

    /// First literal value of `predicate` on `subject`, preferring `lang`.
    pub fn literal_value(&self, subject: &Iri, predicate: &Iri, lang: Option<&str>) -> Option<&Literal> {
        let mut first = None;
        for lit in self.objects(subject, predicate).filter_map(Term::as_literal) {
            if lang.is_some() && lit.lang.as_deref() == lang {
                return Some(lit);
            }
            first.get_or_insert(lit);
        }
        first
    }
}
