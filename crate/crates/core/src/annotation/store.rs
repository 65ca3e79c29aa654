//! SQLite persistence for examples and annotations.
//!
//! Three tables: `example`, `figure` (a cache of ontology figures keyed by
//! IRI) and `annotation` referencing both. Rows are never deleted; state
//! changes go through the flag columns. All writes are serialized through a
//! single writer connection; reads use a second connection in WAL mode and
//! therefore only see committed data.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use chrono::{DateTime, DurationRound, SecondsFormat, TimeDelta, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rusqlite::{params, Connection, OptionalExtension, Row};
use thiserror::Error;

use super::model::{AnnotationRecord, ExampleRecord, ExportLine, FlagOutcome, FlagUpdate, NewExample};
use super::repetition::check_lexical_repetition;
use super::verify::{Overall, VerificationReport};
use crate::ontology::figures::{figures, label_of, Vocabulary};
use crate::ontology::{Iri, Term, TripleStore};

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("an author or a source is required")]
    MissingProvenance,
    #[error("verification raised a warning; resubmit with confirmation")]
    ConfirmationRequired(VerificationReport),
    #[error("no example is eligible for annotation")]
    NoEligibleExample,
    #[error("unknown example {0}")]
    UnknownExample(i64),
    #[error("unknown annotation {0}")]
    UnknownAnnotation(i64),
    #[error("unknown figure `{0}`")]
    UnknownFigure(Iri),
    #[error("no figure selected")]
    NoFigures,
    #[error("figures {figures:?} need a word repeated in identical form, none found")]
    RepetitionCheckFailed { figures: Vec<Iri> },
    #[error("example {example_id} is already annotated with `{figure}`")]
    DuplicateAnnotation { example_id: i64, figure: Iri },
    #[error("storage error: {0}")]
    Storage(#[from] rusqlite::Error),
    #[error("export failed: {0}")]
    Export(String),
}

/// Figures whose annotation requires [`check_lexical_repetition`] to pass.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RepetitionRule {
    pub figures: BTreeSet<Iri>,
}

impl RepetitionRule {
    /// Figures with both `hasOperation Repetition` and `hasOperationForm SameForm`.
    pub fn from_ontology(store: &TripleStore) -> Self {
        let v = Vocabulary::for_store(store);
        let repetition = Term::Iri(store.iri("Repetition"));
        let same_form = Term::Iri(store.iri("SameForm"));
        let figures = figures(store)
            .into_iter()
            .filter(|f| {
                store.objects(f, &v.has_operation).any(|o| *o == repetition)
                    && store.objects(f, &v.has_operation_form).any(|o| *o == same_form)
            })
            .collect();
        RepetitionRule { figures }
    }

    pub fn applies_to(&self, figure: &Iri) -> bool {
        self.figures.contains(figure)
    }
}

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS example (
    id          INTEGER PRIMARY KEY AUTOINCREMENT,
    text        TEXT NOT NULL,
    context     TEXT,
    author      TEXT,
    source      TEXT,
    is_invalid  INTEGER NOT NULL DEFAULT 0,
    is_harmful  INTEGER NOT NULL DEFAULT 0,
    created_at  TEXT NOT NULL,
    CHECK (author IS NOT NULL OR source IS NOT NULL)
);
CREATE TABLE IF NOT EXISTS figure (
    id    INTEGER PRIMARY KEY AUTOINCREMENT,
    name  TEXT NOT NULL,
    iri   TEXT NOT NULL UNIQUE
);
CREATE TABLE IF NOT EXISTS annotation (
    id           INTEGER PRIMARY KEY AUTOINCREMENT,
    example_id   INTEGER NOT NULL REFERENCES example(id),
    figure_id    INTEGER NOT NULL REFERENCES figure(id),
    is_verified  INTEGER NOT NULL DEFAULT 0,
    created_at   TEXT NOT NULL,
    UNIQUE (example_id, figure_id)
);
";

pub struct AnnotationStore {
    writer: Mutex<Connection>,
    reader: Option<Mutex<Connection>>,
    rng: Mutex<ChaCha8Rng>,
}

impl AnnotationStore {
    /// Opens (creating if needed) the database file at `path`.
    pub fn open(path: impl AsRef<Path>, seed: Option<u64>) -> Result<Self, AnnotationError> {
        let writer = Connection::open(path.as_ref())?;
        writer.pragma_update(None, "journal_mode", "WAL")?;
        writer.pragma_update(None, "foreign_keys", "ON")?;
        writer.execute_batch(SCHEMA)?;
        let reader = Connection::open(path.as_ref())?;
        reader.pragma_update(None, "foreign_keys", "ON")?;
        Ok(AnnotationStore {
            writer: Mutex::new(writer),
            reader: Some(Mutex::new(reader)),
            rng: Mutex::new(rng_for(seed)),
        })
    }

    pub fn open_in_memory(seed: Option<u64>) -> Result<Self, AnnotationError> {
        let writer = Connection::open_in_memory()?;
        writer.pragma_update(None, "foreign_keys", "ON")?;
        writer.execute_batch(SCHEMA)?;
        Ok(AnnotationStore {
            writer: Mutex::new(writer),
            reader: None,
            rng: Mutex::new(rng_for(seed)),
        })
    }

    /// Reseeds the draw sequence of [`random_example`](Self::random_example).
    pub fn reseed(&self, seed: u64) {
        *self.rng.lock().expect("rng lock") = ChaCha8Rng::seed_from_u64(seed);
    }

    fn read<T>(&self, f: impl FnOnce(&Connection) -> rusqlite::Result<T>) -> Result<T, AnnotationError> {
        let lock = match &self.reader {
            Some(r) => r.lock(),
            None => self.writer.lock(),
        };
        let conn = lock.expect("connection lock");
        Ok(f(&conn)?)
    }

    /// Stores a submission. A `Warn` report needs `confirmed`; confirmed
    /// warnings are stored with `is_invalid` set for admin review.
    pub fn submit_example(
        &self,
        example: &NewExample,
        report: &VerificationReport,
        confirmed: bool,
    ) -> Result<ExampleRecord, AnnotationError> {
        if !example.has_provenance() {
            return Err(AnnotationError::MissingProvenance);
        }
        let warn = report.overall == Overall::Warn;
        if warn && !confirmed {
            return Err(AnnotationError::ConfirmationRequired(report.clone()));
        }
        let clean = |v: &Option<String>| v.as_deref().map(str::trim).filter(|s| !s.is_empty()).map(String::from);
        let now = now();
        let conn = self.writer.lock().expect("writer lock");
        conn.execute(
            "INSERT INTO example (text, context, author, source, is_invalid, is_harmful, created_at)
             VALUES (?1, ?2, ?3, ?4, ?5, 0, ?6)",
            params![
                example.text,
                clean(&example.context),
                clean(&example.author),
                clean(&example.source),
                warn,
                timestamp(&now)
            ],
        )?;
        let id = conn.last_insert_rowid();
        Ok(get_example(&conn, id)?.expect("just inserted"))
    }

    pub fn example(&self, id: i64) -> Result<ExampleRecord, AnnotationError> {
        self.read(|c| get_example(c, id))?
            .ok_or(AnnotationError::UnknownExample(id))
    }

    /// Uniform draw among examples that are neither invalid nor harmful.
    pub fn random_example(&self) -> Result<ExampleRecord, AnnotationError> {
        let ids: Vec<i64> = self.read(|c| {
            let mut stmt = c.prepare("SELECT id FROM example WHERE is_invalid = 0 AND is_harmful = 0 ORDER BY id")?;
            let rows = stmt.query_map([], |r| r.get(0))?;
            rows.collect()
        })?;
        if ids.is_empty() {
            return Err(AnnotationError::NoEligibleExample);
        }
        let pick = ids[self.rng.lock().expect("rng lock").random_range(0..ids.len())];
        self.example(pick)
    }

    /// Records one annotation per figure, atomically. Figures in `rule` need
    /// the example text to pass the lexical repetition check.
    pub fn annotate(
        &self,
        example_id: i64,
        figure_iris: &[Iri],
        ontology: &TripleStore,
        rule: &RepetitionRule,
    ) -> Result<Vec<AnnotationRecord>, AnnotationError> {
        if figure_iris.is_empty() {
            return Err(AnnotationError::NoFigures);
        }
        let known = figures(ontology);
        if let Some(unknown) = figure_iris.iter().find(|f| !known.contains(*f)) {
            return Err(AnnotationError::UnknownFigure(unknown.clone()));
        }
        let mut conn = self.writer.lock().expect("writer lock");
        let example = get_example(&conn, example_id)?.ok_or(AnnotationError::UnknownExample(example_id))?;
        let needs_repetition: Vec<Iri> = figure_iris.iter().filter(|f| rule.applies_to(f)).cloned().collect();
        if !needs_repetition.is_empty() && !check_lexical_repetition(&example.text) {
            return Err(AnnotationError::RepetitionCheckFailed {
                figures: needs_repetition,
            });
        }
        let tx = conn.transaction()?;
        let now = now();
        let mut ids = Vec::with_capacity(figure_iris.len());
        for figure in figure_iris {
            tx.execute(
                "INSERT INTO figure (name, iri) VALUES (?1, ?2) ON CONFLICT(iri) DO UPDATE SET name = excluded.name",
                params![label_of(ontology, figure), figure.as_str()],
            )?;
            let figure_id: i64 = tx.query_row("SELECT id FROM figure WHERE iri = ?1", [figure.as_str()], |r| r.get(0))?;
            let inserted = tx.execute(
                "INSERT INTO annotation (example_id, figure_id, is_verified, created_at)
                 VALUES (?1, ?2, 0, ?3) ON CONFLICT(example_id, figure_id) DO NOTHING",
                params![example_id, figure_id, timestamp(&now)],
            )?;
            if inserted == 0 {
                // Dropping `tx` rolls back the figures inserted so far.
                return Err(AnnotationError::DuplicateAnnotation {
                    example_id,
                    figure: figure.clone(),
                });
            }
            ids.push(tx.last_insert_rowid());
        }
        tx.commit()?;
        ids.into_iter()
            .map(|id| Ok(get_annotation(&conn, id)?.expect("just inserted")))
            .collect()
    }

    pub fn annotation(&self, id: i64) -> Result<AnnotationRecord, AnnotationError> {
        self.read(|c| get_annotation(c, id))?
            .ok_or(AnnotationError::UnknownAnnotation(id))
    }

    pub fn annotations_for(&self, example_id: i64) -> Result<Vec<AnnotationRecord>, AnnotationError> {
        self.read(|c| {
            let mut stmt = c.prepare(&format!("{ANNOTATION_SELECT} WHERE a.example_id = ?1 ORDER BY a.id"))?;
            let rows = stmt.query_map([example_id], annotation_row)?;
            rows.collect()
        })
    }

    /// Applies admin flag changes. Ids are checked before anything is written.
    pub fn set_flags(&self, update: &FlagUpdate) -> Result<FlagOutcome, AnnotationError> {
        let mut conn = self.writer.lock().expect("writer lock");
        if let Some(id) = update.example_id {
            get_example(&conn, id)?.ok_or(AnnotationError::UnknownExample(id))?;
        }
        if let Some(id) = update.annotation_id {
            get_annotation(&conn, id)?.ok_or(AnnotationError::UnknownAnnotation(id))?;
        }
        let tx = conn.transaction()?;
        if let Some(id) = update.example_id {
            if let Some(h) = update.is_harmful {
                tx.execute("UPDATE example SET is_harmful = ?1 WHERE id = ?2", params![h, id])?;
            }
            if let Some(v) = update.is_invalid {
                tx.execute("UPDATE example SET is_invalid = ?1 WHERE id = ?2", params![v, id])?;
            }
        }
        if let (Some(id), Some(v)) = (update.annotation_id, update.is_verified) {
            tx.execute("UPDATE annotation SET is_verified = ?1 WHERE id = ?2", params![v, id])?;
        }
        tx.commit()?;
        Ok(FlagOutcome {
            example: update.example_id.map(|id| get_example(&conn, id)).transpose()?.flatten(),
            annotation: update.annotation_id.map(|id| get_annotation(&conn, id)).transpose()?.flatten(),
        })
    }

    pub fn examples(&self) -> Result<Vec<ExampleRecord>, AnnotationError> {
        self.read(|c| {
            let mut stmt = c.prepare(&format!("{EXAMPLE_SELECT} ORDER BY id"))?;
            let rows = stmt.query_map([], example_row)?;
            rows.collect()
        })
    }

    /// Examples submitted at or after `since` that are not yet marked harmful;
    /// the input of the periodic manual content review.
    pub fn review_queue(&self, since: DateTime<Utc>) -> Result<Vec<ExampleRecord>, AnnotationError> {
        Ok(self
            .examples()?
            .into_iter()
            .filter(|e| e.created_at >= since && !e.is_harmful)
            .collect())
    }

    /// Writes every example, then every annotation, as JSON Lines.
    pub fn export_jsonl(&self, mut out: impl Write) -> Result<usize, AnnotationError> {
        let annotations: Vec<AnnotationRecord> = self.read(|c| {
            let mut stmt = c.prepare(&format!("{ANNOTATION_SELECT} ORDER BY a.id"))?;
            let rows = stmt.query_map([], annotation_row)?;
            rows.collect()
        })?;
        let lines = self
            .examples()?
            .into_iter()
            .map(ExportLine::Example)
            .chain(annotations.into_iter().map(ExportLine::Annotation));
        let mut n = 0;
        for line in lines {
            let json = serde_json::to_string(&line).map_err(|e| AnnotationError::Export(e.to_string()))?;
            writeln!(out, "{json}").map_err(|e| AnnotationError::Export(e.to_string()))?;
            n += 1;
        }
        Ok(n)
    }
}

fn rng_for(seed: Option<u64>) -> ChaCha8Rng {
    match seed {
        Some(s) => ChaCha8Rng::seed_from_u64(s),
        None => ChaCha8Rng::from_os_rng(),
    }
}

fn now() -> DateTime<Utc> {
    Utc::now()
        .duration_trunc(TimeDelta::milliseconds(1))
        .expect("millisecond truncation")
}

fn timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn parse_timestamp(s: String) -> rusqlite::Result<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(&s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| rusqlite::Error::FromSqlConversionFailure(0, rusqlite::types::Type::Text, Box::new(e)))
}

const EXAMPLE_SELECT: &str =
    "SELECT id, text, context, author, source, is_invalid, is_harmful, created_at FROM example";
const ANNOTATION_SELECT: &str = "SELECT a.id, a.example_id, f.iri, a.is_verified, a.created_at \
     FROM annotation a JOIN figure f ON f.id = a.figure_id";

fn example_row(r: &Row<'_>) -> rusqlite::Result<ExampleRecord> {
    Ok(ExampleRecord {
        id: r.get(0)?,
        text: r.get(1)?,
        context: r.get(2)?,
        author: r.get(3)?,
        source: r.get(4)?,
        is_invalid: r.get(5)?,
        is_harmful: r.get(6)?,
        created_at: parse_timestamp(r.get(7)?)?,
    })
}

fn annotation_row(r: &Row<'_>) -> rusqlite::Result<AnnotationRecord> {
    Ok(AnnotationRecord {
        id: r.get(0)?,
        example_id: r.get(1)?,
        figure_iri: Iri::new(r.get::<_, String>(2)?),
        is_verified: r.get(3)?,
        created_at: parse_timestamp(r.get(4)?)?,
    })
}

fn get_example(conn: &Connection, id: i64) -> rusqlite::Result<Option<ExampleRecord>> {
    conn.query_row(&format!("{EXAMPLE_SELECT} WHERE id = ?1"), [id], example_row)
        .optional()
}

fn get_annotation(conn: &Connection, id: i64) -> rusqlite::Result<Option<AnnotationRecord>> {
    conn.query_row(&format!("{ANNOTATION_SELECT} WHERE a.id = ?1"), [id], annotation_row)
        .optional()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::verify::Overall;
    use crate::ontology::{self, MappingConfig};

    fn accept() -> VerificationReport {
        VerificationReport {
            language_ok: true,
            length_ok: true,
            grammar_ok: true,
            gibberish_flag: None,
            overall: Overall::Accept,
            note: None,
        }
    }

    fn warn() -> VerificationReport {
        VerificationReport {
            language_ok: false,
            gibberish_flag: Some(true),
            overall: Overall::Warn,
            ..accept()
        }
    }

    fn new(text: &str) -> NewExample {
        NewExample {
            text: text.into(),
            author: Some("Goethe".into()),
            ..Default::default()
        }
    }

    fn onto() -> TripleStore {
        ontology::load(ontology::SAMPLE_ONTOLOGY, &MappingConfig::default_mapping())
            .unwrap()
            .store
    }

    #[test]
    fn submit_happy_path_and_provenance() {
        let store = AnnotationStore::open_in_memory(Some(1)).unwrap();
        let rec = store.submit_example(&new("Das Wasser rauscht."), &accept(), false).unwrap();
        assert!(!rec.is_invalid && !rec.is_harmful);
        assert_eq!(store.example(rec.id).unwrap(), rec);

        let anonymous = NewExample {
            text: "Kein Autor hier.".into(),
            author: Some("  ".into()),
            ..Default::default()
        };
        assert!(matches!(
            store.submit_example(&anonymous, &accept(), false),
            Err(AnnotationError::MissingProvenance)
        ));
        let sourced = NewExample {
            source: Some("Der Fischer".into()),
            ..anonymous
        };
        assert!(store.submit_example(&sourced, &accept(), false).is_ok());
    }

    #[test]
    fn warn_needs_confirmation_then_flags_invalid() {
        let store = AnnotationStore::open_in_memory(Some(1)).unwrap();
        assert!(matches!(
            store.submit_example(&new("qwrtz pfft"), &warn(), false),
            Err(AnnotationError::ConfirmationRequired(_))
        ));
        let rec = store.submit_example(&new("qwrtz pfft"), &warn(), true).unwrap();
        assert!(rec.is_invalid);
        assert!(matches!(store.random_example(), Err(AnnotationError::NoEligibleExample)));
    }

    #[test]
    fn annotate_multi_select_and_duplicates() {
        let store = AnnotationStore::open_in_memory(Some(1)).unwrap();
        let onto = onto();
        let rule = RepetitionRule::from_ontology(&onto);
        let ex = store
            .submit_example(&new("Das Wasser rauscht, das Wasser schwoll."), &accept(), false)
            .unwrap();
        let recs = store
            .annotate(ex.id, &[onto.iri("Anaphora"), onto.iri("Parallelism")], &onto, &rule)
            .unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs.iter().all(|r| !r.is_verified && r.example_id == ex.id));

        let dup = store.annotate(ex.id, &[onto.iri("Klimax"), onto.iri("Anaphora")], &onto, &rule);
        assert!(matches!(dup, Err(AnnotationError::DuplicateAnnotation { .. })));
        // The whole batch rolled back; the first annotations are intact.
        let after = store.annotations_for(ex.id).unwrap();
        assert_eq!(after, recs);
    }

    #[test]
    fn repetition_rule_rejects_epiphora_without_repeats() {
        let store = AnnotationStore::open_in_memory(Some(1)).unwrap();
        let onto = onto();
        let rule = RepetitionRule::from_ontology(&onto);
        assert!(rule.applies_to(&onto.iri("Epiphora")));
        assert!(!rule.applies_to(&onto.iri("Chiasmus")));
        let ex = store.submit_example(&new("Alle Wege führen nach Rom"), &accept(), false).unwrap();
        let err = store.annotate(ex.id, &[onto.iri("Epiphora")], &onto, &rule).unwrap_err();
        assert!(matches!(err, AnnotationError::RepetitionCheckFailed { .. }));
        assert!(store.annotate(ex.id, &[onto.iri("Chiasmus")], &onto, &rule).is_ok());
    }

    #[test]
    fn annotate_unknowns() {
        let store = AnnotationStore::open_in_memory(Some(1)).unwrap();
        let onto = onto();
        let rule = RepetitionRule::default();
        assert!(matches!(
            store.annotate(99, &[onto.iri("Anaphora")], &onto, &rule),
            Err(AnnotationError::UnknownExample(99))
        ));
        let ex = store.submit_example(&new("Ein Satz zum Testen."), &accept(), false).unwrap();
        assert!(matches!(
            store.annotate(ex.id, &[onto.iri("Word")], &onto, &rule),
            Err(AnnotationError::UnknownFigure(_))
        ));
    }

    #[test]
    fn flags_update_and_unknown_ids_do_not_mutate() {
        let store = AnnotationStore::open_in_memory(Some(1)).unwrap();
        let onto = onto();
        let ex = store.submit_example(&new("Ich kam, ich sah, ich siegte."), &accept(), false).unwrap();
        let ann = store
            .annotate(ex.id, &[onto.iri("Anaphora")], &onto, &RepetitionRule::default())
            .unwrap();
        let out = store
            .set_flags(&FlagUpdate {
                annotation_id: Some(ann[0].id),
                is_verified: Some(true),
                ..Default::default()
            })
            .unwrap();
        assert!(out.annotation.unwrap().is_verified);
        assert!(!store.example(ex.id).unwrap().is_harmful);

        let bad = store.set_flags(&FlagUpdate {
            example_id: Some(ex.id),
            is_harmful: Some(true),
            annotation_id: Some(4242),
            is_verified: Some(false),
            ..Default::default()
        });
        assert!(matches!(bad, Err(AnnotationError::UnknownAnnotation(4242))));
        assert!(!store.example(ex.id).unwrap().is_harmful);
        assert!(store.annotation(ann[0].id).unwrap().is_verified);
    }

    #[test]
    fn export_lists_everything() {
        let store = AnnotationStore::open_in_memory(Some(1)).unwrap();
        let onto = onto();
        let ex = store.submit_example(&new("Ich kam, ich sah, ich siegte."), &accept(), false).unwrap();
        store
            .annotate(ex.id, &[onto.iri("Klimax")], &onto, &RepetitionRule::default())
            .unwrap();
        let mut buf = Vec::new();
        assert_eq!(store.export_jsonl(&mut buf).unwrap(), 2);
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<ExportLine> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert!(matches!(&lines[0], ExportLine::Example(e) if e.id == ex.id));
        assert!(matches!(&lines[1], ExportLine::Annotation(a) if a.figure_iri == onto.iri("Klimax")));
        assert!(text.contains("\"created_at\":\"20"));
    }
}
