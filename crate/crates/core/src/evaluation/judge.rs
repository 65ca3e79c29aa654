use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::external::ExternalError;

/// Sentences ending in `.`, `!` or `?` followed by whitespace; the rest of
/// the text forms the last sentence.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut current = String::new();
    for (i, c) in chars.iter().enumerate() {
        current.push(*c);
        if matches!(c, '.' | '!' | '?') && chars.get(i + 1).is_some_and(|n| n.is_whitespace()) {
            out.push(std::mem::take(&mut current));
        }
    }
    out.push(current);
    out.into_iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

/// LLM-style judgments the metrics are built on.
pub trait Judge: Send + Sync {
    /// Decomposition of a text into atomic statements.
    fn claims(&self, text: &str) -> Result<Vec<String>, ExternalError> {
        Ok(split_sentences(text))
    }

    fn is_supported(&self, statement: &str, contexts: &[String]) -> Result<bool, ExternalError>;

    fn is_relevant(&self, context: &str, question: &str, ground_truth: &str) -> Result<bool, ExternalError>;

    fn generate_questions(&self, answer: &str, n: usize) -> Result<Vec<String>, ExternalError>;

    fn classify_claims(&self, answer_claims: &[String], truth_claims: &[String]) -> Result<ClaimCounts, ExternalError>;
}

/// Lowercased, whitespace-collapsed, without trailing sentence punctuation.
pub fn normalize(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .trim_end_matches(['.', '!', '?'])
        .to_lowercase()
}

/// Deterministic judge based on normalized substring matching.
#[derive(Debug, Default)]
pub struct ExactMatchJudge {
    /// normalized ground truth -> question
    questions: Vec<(String, String)>,
    /// Contexts are long and checked once per claim.
    normalized: Mutex<HashMap<String, String>>,
}

impl ExactMatchJudge {
    /// `pairs` are (question, ground truth); an answer containing a ground
    /// truth "regenerates" its question.
    pub fn new<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        ExactMatchJudge {
            questions: pairs
                .into_iter()
                .map(|(q, gt)| (normalize(gt), q.to_string()))
                .filter(|(gt, _)| !gt.is_empty())
                .collect(),
            normalized: Mutex::default(),
        }
    }

    fn contains(&self, context: &str, needle: &str) -> bool {
        let mut cache = self.normalized.lock().expect("cache lock");
        if cache.len() > 4096 {
            cache.clear();
        }
        cache
            .entry(context.to_string())
            .or_insert_with(|| normalize(context))
            .contains(needle)
    }
}

impl Judge for ExactMatchJudge {
    fn is_supported(&self, statement: &str, contexts: &[String]) -> Result<bool, ExternalError> {
        let s = normalize(statement);
        Ok(!s.is_empty() && contexts.iter().any(|c| self.contains(c, &s)))
    }

    fn is_relevant(&self, context: &str, _question: &str, ground_truth: &str) -> Result<bool, ExternalError> {
        Ok(split_sentences(ground_truth)
            .iter()
            .any(|s| self.contains(context, &normalize(s))))
    }

    fn generate_questions(&self, answer: &str, n: usize) -> Result<Vec<String>, ExternalError> {
        let a = normalize(answer);
        // Longest matching ground truth wins.
        let hit = self
            .questions
            .iter()
            .filter(|(gt, _)| a.contains(gt.as_str()))
            .max_by_key(|(gt, _)| gt.len());
        Ok(hit.map(|(_, q)| vec![q.clone(); n]).unwrap_or_default())
    }

    fn classify_claims(&self, answer_claims: &[String], truth_claims: &[String]) -> Result<ClaimCounts, ExternalError> {
        let a: Vec<String> = answer_claims.iter().map(|c| normalize(c)).collect();
        let t: Vec<String> = truth_claims.iter().map(|c| normalize(c)).collect();
        let matches = |x: &String, y: &String| x == y;
        let tp = a.iter().filter(|x| t.iter().any(|y| matches(x, y))).count();
        let fn_ = t.iter().filter(|y| !a.iter().any(|x| matches(x, y))).count();
        Ok(ClaimCounts {
            tp,
            fp: a.len() - tp,
            fn_,
        })
    }
}

/// Judge with canned answers, for exercising the metric arithmetic.
#[derive(Clone, Debug, Default)]
pub struct ScriptedJudge {
    pub supported: HashMap<String, bool>,
    pub relevant: HashMap<String, bool>,
    pub questions: Vec<String>,
    pub counts: ClaimCounts,
    pub fail: bool,
}

impl ScriptedJudge {
    fn guard(&self) -> Result<(), ExternalError> {
        if self.fail {
            Err(ExternalError::Transport("scripted failure".into()))
        } else {
            Ok(())
        }
    }
}

impl Judge for ScriptedJudge {
    fn is_supported(&self, statement: &str, _contexts: &[String]) -> Result<bool, ExternalError> {
        self.guard()?;
        Ok(self.supported.get(statement).copied().unwrap_or(false))
    }

    fn is_relevant(&self, context: &str, _q: &str, _gt: &str) -> Result<bool, ExternalError> {
        self.guard()?;
        Ok(self.relevant.get(context).copied().unwrap_or(false))
    }

    fn generate_questions(&self, _answer: &str, n: usize) -> Result<Vec<String>, ExternalError> {
        self.guard()?;
        Ok(self.questions.iter().take(n).cloned().collect())
    }

    fn classify_claims(&self, _a: &[String], _t: &[String]) -> Result<ClaimCounts, ExternalError> {
        self.guard()?;
        Ok(self.counts)
    }
}
