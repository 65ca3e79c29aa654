//! Ground-truth and answer files as JSON Lines, NFC-normalized.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub question: String,
    pub ground_truth: String,
    #[serde(rename = "contexts", alias = "reference_contexts", default)]
    pub reference_contexts: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRecord {
    #[serde(flatten)]
    pub truth: GroundTruthRecord,
    pub answer: String,
    pub retrieved_contexts: Vec<String>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("line {line}: field `{field}` is empty")]
    EmptyField { line: usize, field: &'static str },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn nfc(s: &str) -> String {
    s.nfc().collect()
}

trait Normalize {
    fn normalize(&mut self);
    fn check(&self, line: usize) -> Result<(), DatasetError>;
}

impl Normalize for GroundTruthRecord {
    fn normalize(&mut self) {
        self.question = nfc(&self.question);
        self.ground_truth = nfc(&self.ground_truth);
        self.reference_contexts.iter_mut().for_each(|c| *c = nfc(c));
    }

    fn check(&self, line: usize) -> Result<(), DatasetError> {
        if self.question.trim().is_empty() {
            return Err(DatasetError::EmptyField { line, field: "question" });
        }
        if self.ground_truth.trim().is_empty() {
            return Err(DatasetError::EmptyField { line, field: "ground_truth" });
        }
        Ok(())
    }
}

impl Normalize for EvalRecord {
    fn normalize(&mut self) {
        self.truth.normalize();
        self.answer = nfc(&self.answer);
        self.retrieved_contexts.iter_mut().for_each(|c| *c = nfc(c));
    }

    fn check(&self, line: usize) -> Result<(), DatasetError> {
        self.truth.check(line)
    }
}

fn read<T: DeserializeOwned + Normalize>(input: impl BufRead) -> Result<Vec<T>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut rec: T = serde_json::from_str(&line).map_err(|e| DatasetError::Line {
            line: i + 1,
            message: e.to_string(),
        })?;
        rec.normalize();
        rec.check(i + 1)?;
        out.push(rec);
    }
    Ok(out)
}

fn write<T: Serialize + Normalize + Clone>(records: &[T], mut out: impl Write) -> Result<(), DatasetError> {
    for r in records {
        let mut r = r.clone();
        r.normalize();
        writeln!(out, "{}", serde_json::to_string(&r).expect("record serializes"))?;
    }
    Ok(())
}

pub fn read_ground_truth(input: impl BufRead) -> Result<Vec<GroundTruthRecord>, DatasetError> {
    read(input)
}

pub fn write_ground_truth(records: &[GroundTruthRecord], out: impl Write) -> Result<(), DatasetError> {
    write(records, out)
}

pub fn read_answers(input: impl BufRead) -> Result<Vec<EvalRecord>, DatasetError> {
    read(input)
}

pub fn write_answers(records: &[EvalRecord], out: impl Write) -> Result<(), DatasetError> {
    write(records, out)
}
