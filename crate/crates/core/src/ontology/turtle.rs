//! Reader and writer for the Turtle subset used by the figure ontology.
//!
//! Supported: `@prefix`/`PREFIX` declarations, `;` predicate lists, `,` object
//! lists, absolute IRIs, prefixed names, `a`, short and long string literals
//! with optional language tags, and `#` comments. Blank nodes, collections,
//! numeric literals and datatypes are rejected.

use std::fmt::Write as _;

use indexmap::IndexMap;
use thiserror::Error;

use super::store::{PrefixMap, TripleStore};
use super::term::{vocab, Iri, Literal, Term, Triple};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TurtleError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown prefix `{prefix}:` at {line}:{column}")]
    UnknownPrefix {
        prefix: String,
        line: usize,
        column: usize,
    },
    #[error("unterminated literal starting at {line}:{column}")]
    UnterminatedLiteral { line: usize, column: usize },
}

pub fn parse(document: &str) -> Result<TripleStore, TurtleError> {
    Parser::new(document).run()
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
    store: TripleStore,
}

#[derive(Clone, Copy)]
struct Mark {
    line: usize,
    column: usize,
}

impl Parser {
    fn new(document: &str) -> Self {
        Parser {
            chars: document.chars().collect(),
            pos: 0,
            line: 1,
            column: 1,
            store: TripleStore::new(),
        }
    }

    fn run(mut self) -> Result<TripleStore, TurtleError> {
        loop {
            self.skip_ws();
            match self.peek() {
                None => break,
                Some('@') => self.prefix_directive(true)?,
                Some('P' | 'p') if self.lookahead_keyword("PREFIX") => self.prefix_directive(false)?,
                Some(_) => self.triples()?,
            }
        }
        Ok(self.store)
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn mark(&self) -> Mark {
        Mark {
            line: self.line,
            column: self.column,
        }
    }

    fn error(&self, at: Mark, message: impl Into<String>) -> TurtleError {
        TurtleError::Syntax {
            line: at.line,
            column: at.column,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn lookahead_keyword(&self, kw: &str) -> bool {
        let n = kw.chars().count();
        let word: String = self.chars[self.pos..].iter().take(n).collect();
        word.eq_ignore_ascii_case(kw) && self.peek_at(n).is_some_and(char::is_whitespace)
    }

    fn expect(&mut self, want: char) -> Result<(), TurtleError> {
        self.skip_ws();
        let at = self.mark();
        match self.bump() {
            Some(c) if c == want => Ok(()),
            Some(c) => Err(self.error(at, format!("expected `{want}`, found `{c}`"))),
            None => Err(self.error(at, format!("expected `{want}`, found end of input"))),
        }
    }

    fn prefix_directive(&mut self, at_form: bool) -> Result<(), TurtleError> {
        let at = self.mark();
        if at_form {
            self.bump();
            let word = self.read_while(|c| c.is_ascii_alphabetic());
            if word != "prefix" {
                return Err(self.error(at, format!("unsupported directive `@{word}`")));
            }
        } else {
            for _ in 0..6 {
                self.bump();
            }
        }
        self.skip_ws();
        let name_at = self.mark();
        let prefix = self.read_while(|c| c.is_alphanumeric() || c == '_' || c == '-' || c == '.');
        if self.bump() != Some(':') {
            return Err(self.error(name_at, "expected prefix name followed by `:`"));
        }
        self.skip_ws();
        let iri = self.iri_ref()?;
        self.store.prefixes_mut().insert(prefix, iri.as_str());
        if at_form {
            self.expect('.')?;
        }
        Ok(())
    }

    fn read_while(&mut self, f: impl Fn(char) -> bool) -> String {
        let mut out = String::new();
        while let Some(c) = self.peek() {
            if !f(c) {
                break;
            }
            out.push(c);
            self.bump();
        }
        out
    }

    fn iri_ref(&mut self) -> Result<Iri, TurtleError> {
        let at = self.mark();
        if self.bump() != Some('<') {
            return Err(self.error(at, "expected `<`"));
        }
        let mut out = String::new();
        loop {
            match self.bump() {
                Some('>') => return Ok(Iri::new(out)),
                Some(c) if c.is_whitespace() || c == '<' || c == '"' => {
                    return Err(self.error(at, "invalid character in IRI"));
                }
                Some(c) => out.push(c),
                None => return Err(self.error(at, "unterminated IRI")),
            }
        }
    }

    fn triples(&mut self) -> Result<(), TurtleError> {
        let subject = self.resource("subject")?;
        loop {
            self.skip_ws();
            let predicate = self.predicate()?;
            loop {
                self.skip_ws();
                let object = self.object()?;
                self.store
                    .insert(Triple::new(subject.clone(), predicate.clone(), object));
                self.skip_ws();
                if self.peek() == Some(',') {
                    self.bump();
                } else {
                    break;
                }
            }
            self.skip_ws();
            match self.peek() {
                Some(';') => {
                    while self.peek() == Some(';') {
                        self.bump();
                        self.skip_ws();
                    }
                    if self.peek() == Some('.') {
                        self.bump();
                        return Ok(());
                    }
                }
                Some('.') => {
                    self.bump();
                    return Ok(());
                }
                _ => {
                    let at = self.mark();
                    return Err(match self.peek() {
                        Some(c) => self.error(at, format!("expected `;`, `,` or `.`, found `{c}`")),
                        None => self.error(at, "expected `.`, found end of input"),
                    });
                }
            }
        }
    }

    fn predicate(&mut self) -> Result<Iri, TurtleError> {
        if self.peek() == Some('a') && self.peek_at(1).is_none_or(|c| c.is_whitespace() || c == '<' || c == ':') {
            // `a` must stand alone; `a:x` or `abc:` are prefixed names.
            if self.peek_at(1) != Some(':') {
                self.bump();
                return Ok(Iri::new(vocab::RDF_TYPE));
            }
        }
        self.resource("predicate")
    }

    fn resource(&mut self, role: &str) -> Result<Iri, TurtleError> {
        self.skip_ws();
        let at = self.mark();
        match self.peek() {
            Some('<') => self.iri_ref(),
            Some(c) if c.is_alphanumeric() || c == ':' || c == '_' => self.prefixed_name(),
            Some('[') | Some('(') => Err(self.error(at, "blank nodes and collections are not supported")),
            Some(c) => Err(self.error(at, format!("expected {role}, found `{c}`"))),
            None => Err(self.error(at, format!("expected {role}, found end of input"))),
        }
    }

    fn prefixed_name(&mut self) -> Result<Iri, TurtleError> {
        let at = self.mark();
        if self.peek() == Some('_') && self.peek_at(1) == Some(':') {
            return Err(self.error(at, "blank nodes and collections are not supported"));
        }
        let prefix = self.read_while(|c| c.is_alphanumeric() || c == '_' || c == '-' || c == '.');
        if self.peek() != Some(':') {
            return Err(self.error(at, format!("expected prefixed name, found `{prefix}`")));
        }
        self.bump();
        let mut local = String::new();
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | ':' | '%') {
                local.push(c);
                self.bump();
            } else {
                break;
            }
        }
        // A trailing `.` terminates the statement rather than the name.
        while local.ends_with('.') {
            local.pop();
            self.pos -= 1;
            self.column -= 1;
        }
        match self.store.prefixes().expand(&prefix, &local) {
            Some(iri) => Ok(iri),
            None => Err(TurtleError::UnknownPrefix {
                prefix,
                line: at.line,
                column: at.column,
            }),
        }
    }

    fn object(&mut self) -> Result<Term, TurtleError> {
        match self.peek() {
            Some('"') | Some('\'') => self.literal().map(Term::Literal),
            Some(c) if c.is_ascii_digit() || c == '+' || c == '-' => {
                let at = self.mark();
                Err(self.error(at, "numeric literals are not supported"))
            }
            _ => self.resource("object").map(Term::Iri),
        }
    }

    fn literal(&mut self) -> Result<Literal, TurtleError> {
        let at = self.mark();
        let quote = self.bump().expect("caller checked quote");
        let long = self.peek() == Some(quote) && self.peek_at(1) == Some(quote);
        if long {
            self.bump();
            self.bump();
        }
        let mut out = String::new();
        loop {
            let Some(c) = self.bump() else {
                return Err(TurtleError::UnterminatedLiteral {
                    line: at.line,
                    column: at.column,
                });
            };
            if c == quote {
                if !long {
                    break;
                }
                if self.peek() == Some(quote) && self.peek_at(1) == Some(quote) {
                    self.bump();
                    self.bump();
                    break;
                }
                out.push(c);
            } else if c == '\\' {
                let esc_at = self.mark();
                let e = self.bump().ok_or(TurtleError::UnterminatedLiteral {
                    line: at.line,
                    column: at.column,
                })?;
                out.push(match e {
                    'n' => '\n',
                    'r' => '\r',
                    't' => '\t',
                    'b' => '\u{8}',
                    'f' => '\u{c}',
                    '"' | '\'' | '\\' => e,
                    'u' | 'U' => {
                        let n = if e == 'u' { 4 } else { 8 };
                        let hex: String = (0..n).filter_map(|_| self.bump()).collect();
                        u32::from_str_radix(&hex, 16)
                            .ok()
                            .and_then(char::from_u32)
                            .ok_or_else(|| self.error(esc_at, "invalid unicode escape"))?
                    }
                    other => return Err(self.error(esc_at, format!("invalid escape `\\{other}`"))),
                });
            } else if (c == '\n' || c == '\r') && !long {
                return Err(TurtleError::UnterminatedLiteral {
                    line: at.line,
                    column: at.column,
                });
            } else {
                out.push(c);
            }
        }
        if self.peek() == Some('@') {
            self.bump();
            let tag = self.read_while(|c| c.is_ascii_alphanumeric() || c == '-');
            if tag.is_empty() {
                return Err(self.error(at, "empty language tag"));
            }
            return Ok(Literal::lang(out, tag));
        }
        if self.peek() == Some('^') {
            return Err(self.error(self.mark(), "datatyped literals are not supported"));
        }
        Ok(Literal::plain(out))
    }
}

/// Writes `store` as Turtle, grouping by subject in first-appearance order.
pub fn serialize(store: &TripleStore) -> String {
    let prefixes = store.prefixes();
    let mut out = String::new();
    for (p, ns) in prefixes.iter() {
        let _ = writeln!(out, "@prefix {p}: <{ns}> .");
    }
    if !prefixes.is_empty() {
        out.push('\n');
    }
    let mut grouped: IndexMap<&Iri, IndexMap<&Iri, Vec<&Term>>> = IndexMap::new();
    for t in store.iter() {
        grouped
            .entry(&t.subject)
            .or_default()
            .entry(&t.predicate)
            .or_default()
            .push(&t.object);
    }
    for (subject, preds) in grouped {
        let _ = write!(out, "{}", write_iri(prefixes, subject));
        let n = preds.len();
        for (i, (pred, objs)) in preds.into_iter().enumerate() {
            let p = if pred.as_str() == vocab::RDF_TYPE {
                "a".to_string()
            } else {
                write_iri(prefixes, pred)
            };
            let objs: Vec<String> = objs.into_iter().map(|o| write_term(prefixes, o)).collect();
            let sep = if i + 1 == n { " ." } else { " ;" };
            if i == 0 {
                let _ = writeln!(out, " {p} {}{sep}", objs.join(", "));
            } else {
                let _ = writeln!(out, "    {p} {}{sep}", objs.join(", "));
            }
        }
        out.push('\n');
    }
    out
}

fn write_iri(prefixes: &PrefixMap, iri: &Iri) -> String {
    prefixes.compact(iri)
}

fn write_term(prefixes: &PrefixMap, term: &Term) -> String {
    match term {
        Term::Iri(i) => write_iri(prefixes, i),
        Term::Literal(l) => {
            let mut s = String::with_capacity(l.lexical.len() + 2);
            s.push('"');
            for c in l.lexical.chars() {
                match c {
                    '"' => s.push_str("\\\""),
                    '\\' => s.push_str("\\\\"),
                    '\n' => s.push_str("\\n"),
                    '\r' => s.push_str("\\r"),
                    '\t' => s.push_str("\\t"),
                    c => s.push(c),
                }
            }
            s.push('"');
            if let Some(lang) = &l.lang {
                s.push('@');
                s.push_str(lang);
            }
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PREFIX: &str = "@prefix : <http://example.org/grhoot#> .\n";

    fn ex(local: &str) -> Iri {
        Iri::new(format!("http://example.org/grhoot#{local}"))
    }

    #[test]
    fn single_triple() {
        let store = parse(&format!("{PREFIX}:Epiphora :isInArea :Sentence .")).unwrap();
        assert_eq!(store.len(), 1);
        assert_eq!(store.triples()[0].subject, ex("Epiphora"));
        assert_eq!(store.triples()[0].object, Term::Iri(ex("Sentence")));
    }

    #[test]
    fn prefixes_only_gives_empty_store() {
        let store = parse(&format!("{PREFIX}@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .\n")).unwrap();
        assert!(store.is_empty());
        assert_eq!(store.prefixes().len(), 2);
    }

    #[test]
    fn semicolon_chain_expands_to_shared_subject() {
        // Expanded by hand: three triples with subject :Epiphora.
        let doc = format!(
            "{PREFIX}# epiphora\n:Epiphora :isInPosition :Beginning ;\n    :isInArea :Sentence ;\n    :isRepeatableElementOfSameForm :Word .\n"
        );
        let store = parse(&doc).unwrap();
        let expected = vec![
            Triple::new(ex("Epiphora"), ex("isInPosition"), ex("Beginning")),
            Triple::new(ex("Epiphora"), ex("isInArea"), ex("Sentence")),
            Triple::new(ex("Epiphora"), ex("isRepeatableElementOfSameForm"), ex("Word")),
        ];
        assert_eq!(store.triples(), expected.as_slice());
    }

    #[test]
    fn object_lists_and_literals() {
        let doc = format!(
            "{PREFIX}:A :label \"Anapher\"@de, 'anaphora'@en ; a :RhetoricalFigure ; :note \"\"\"zwei\nZeilen\"\"\" .\n"
        );
        let store = parse(&doc).unwrap();
        assert_eq!(store.len(), 4);
        assert_eq!(store.triples()[0].object, Term::Literal(Literal::lang("Anapher", "de")));
        assert_eq!(store.triples()[2].predicate.as_str(), vocab::RDF_TYPE);
        assert_eq!(store.triples()[3].object, Term::Literal(Literal::plain("zwei\nZeilen")));
    }

    #[test]
    fn escapes_and_trailing_semicolon() {
        let doc = format!("{PREFIX}:A :p \"a\\\"b\\n\\u00e4\" ; .");
        let store = parse(&doc).unwrap();
        assert_eq!(store.triples()[0].object, Term::Literal(Literal::plain("a\"b\nä")));
    }

    #[test]
    fn unknown_prefix_reports_position() {
        let err = parse(&format!("{PREFIX}:A :p\n  foo:B .")).unwrap_err();
        assert_eq!(
            err,
            TurtleError::UnknownPrefix {
                prefix: "foo".into(),
                line: 3,
                column: 3
            }
        );
    }

    #[test]
    fn unterminated_literal() {
        let err = parse(&format!("{PREFIX}:A :p \"open\n:B :p :C .")).unwrap_err();
        assert_eq!(err, TurtleError::UnterminatedLiteral { line: 2, column: 7 });
        assert!(matches!(
            parse(&format!("{PREFIX}:A :p \"\"\"never closed")),
            Err(TurtleError::UnterminatedLiteral { .. })
        ));
    }

    #[test]
    fn syntax_errors_carry_line_and_column() {
        let err = parse(&format!("{PREFIX}:A :p :B\n:C :p :D .")).unwrap_err();
        match err {
            TurtleError::Syntax { line, column, .. } => assert_eq!((line, column), (3, 1)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse(&format!("{PREFIX}:A :p [ :q :r ] .")), Err(TurtleError::Syntax { .. })));
        assert!(matches!(parse(&format!("{PREFIX}:A :p 42 .")), Err(TurtleError::Syntax { .. })));
    }

    #[test]
    fn serialize_then_parse_is_identity_on_fixture() {
        let doc = format!(
            "{PREFIX}:A a :RhetoricalFigure ; :label \"Zitat: \\\"x\\\"\"@de .\n:B :p :A, :C .\n"
        );
        let store = parse(&doc).unwrap();
        let again = parse(&serialize(&store)).unwrap();
        assert_eq!(store.triples(), again.triples());
    }
}
