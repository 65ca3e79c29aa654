use std::fmt;

use serde::{Deserialize, Serialize};

use super::dataset::EvalRecord;
use super::judge::{split_sentences, ClaimCounts, Judge};
use crate::external::ExternalError;
use crate::rag::{cosine, Embedder};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Faithfulness,
    ContextPrecision,
    ContextRecall,
    AnswerCorrectness,
    AnswerSimilarity,
    AnswerRelevancy,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Faithfulness,
        Metric::ContextPrecision,
        Metric::ContextRecall,
        Metric::AnswerCorrectness,
        Metric::AnswerSimilarity,
        Metric::AnswerRelevancy,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            Metric::Faithfulness => "faithf.",
            Metric::ContextPrecision => "c_precision",
            Metric::ContextRecall => "c_recall",
            Metric::AnswerCorrectness => "a_correctn.",
            Metric::AnswerSimilarity => "a_similarity",
            Metric::AnswerRelevancy => "a_relevancy",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

/// `None` marks a metric that could not be computed for the input.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricScores {
    pub faithfulness: Option<f64>,
    pub context_precision: Option<f64>,
    pub context_recall: Option<f64>,
    pub answer_correctness: Option<f64>,
    pub answer_similarity: Option<f64>,
    pub answer_relevancy: Option<f64>,
}

impl MetricScores {
    pub fn get(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::Faithfulness => self.faithfulness,
            Metric::ContextPrecision => self.context_precision,
            Metric::ContextRecall => self.context_recall,
            Metric::AnswerCorrectness => self.answer_correctness,
            Metric::AnswerSimilarity => self.answer_similarity,
            Metric::AnswerRelevancy => self.answer_relevancy,
        }
    }

    pub fn set(&mut self, m: Metric, v: Option<f64>) {
        let slot = match m {
            Metric::Faithfulness => &mut self.faithfulness,
            Metric::ContextPrecision => &mut self.context_precision,
            Metric::ContextRecall => &mut self.context_recall,
            Metric::AnswerCorrectness => &mut self.answer_correctness,
            Metric::AnswerSimilarity => &mut self.answer_similarity,
            Metric::AnswerRelevancy => &mut self.answer_relevancy,
        };
        *slot = v;
    }

    /// Per-metric mean over the scores that are defined.
    pub fn mean<'a>(all: impl IntoIterator<Item = &'a MetricScores>) -> MetricScores {
        let all: Vec<&MetricScores> = all.into_iter().collect();
        let mut out = MetricScores::default();
        for m in Metric::ALL {
            let vals: Vec<f64> = all.iter().filter_map(|s| s.get(m)).collect();
            if !vals.is_empty() {
                out.set(m, Some(vals.iter().sum::<f64>() / vals.len() as f64));
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    /// Weights of claim F1 and answer similarity in answer correctness.
    pub correctness_weights: (f64, f64),
    /// Questions generated per answer for answer relevancy.
    pub relevancy_questions: usize,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            correctness_weights: (0.75, 0.25),
            relevancy_questions: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub text: String,
    pub supported: bool,
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

pub fn judge_claims(record: &EvalRecord, judge: &dyn Judge) -> Result<Vec<Claim>, ExternalError> {
    judge
        .claims(&record.answer)?
        .into_iter()
        .map(|text| {
            let supported = judge.is_supported(&text, &record.retrieved_contexts)?;
            Ok(Claim { text, supported })
        })
        .collect()
}

pub fn faithfulness(record: &EvalRecord, judge: &dyn Judge) -> Result<Option<f64>, ExternalError> {
    let claims = judge_claims(record, judge)?;
    if claims.is_empty() {
        return Ok(None);
    }
    Ok(Some(claims.iter().filter(|c| c.supported).count() as f64 / claims.len() as f64))
}

/// Mean of precision@k over the ranks k holding a relevant context.
pub fn context_precision_from(relevance: &[bool]) -> f64 {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (k, rel) in relevance.iter().enumerate() {
        if *rel {
            hits += 1;
            sum += hits as f64 / (k + 1) as f64;
        }
    }
    if hits == 0 {
        0.0
    } else {
        sum / hits as f64
    }
}

pub fn context_precision(record: &EvalRecord, judge: &dyn Judge) -> Result<Option<f64>, ExternalError> {
    let relevance = record
        .retrieved_contexts
        .iter()
        .map(|c| judge.is_relevant(c, &record.truth.question, &record.truth.ground_truth))
        .collect::<Result<Vec<bool>, _>>()?;
    Ok(Some(context_precision_from(&relevance)))
}

pub fn context_recall(record: &EvalRecord, judge: &dyn Judge) -> Result<Option<f64>, ExternalError> {
    let sentences = split_sentences(&record.truth.ground_truth);
    if sentences.is_empty() {
        return Ok(None);
    }
    if record.retrieved_contexts.is_empty() {
        return Ok(Some(0.0));
    }
    let mut attributable = 0;
    for s in &sentences {
        if judge.is_supported(s, &record.retrieved_contexts)? {
            attributable += 1;
        }
    }
    Ok(Some(attributable as f64 / sentences.len() as f64))
}

pub fn text_similarity(a: &str, b: &str, embedder: &dyn Embedder) -> Result<Option<f64>, ExternalError> {
    if a.trim().is_empty() || b.trim().is_empty() {
        return Ok(None);
    }
    let v = embedder.embed(&[a.to_string(), b.to_string()])?;
    if v.len() != 2 {
        return Err(ExternalError::BadResponse(format!("{} embeddings for 2 texts", v.len())));
    }
    Ok(Some(clamp01(cosine(&v[0], &v[1]))))
}

pub fn answer_similarity(record: &EvalRecord, embedder: &dyn Embedder) -> Result<Option<f64>, ExternalError> {
    text_similarity(&record.answer, &record.truth.ground_truth, embedder)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Relevancy {
    pub score: Option<f64>,
    /// Fewer than the requested number of questions came back.
    pub short: bool,
}

pub fn answer_relevancy(
    record: &EvalRecord,
    judge: &dyn Judge,
    embedder: &dyn Embedder,
    n: usize,
) -> Result<Relevancy, ExternalError> {
    let generated = judge.generate_questions(&record.answer, n.max(1))?;
    let generated: Vec<String> = generated.into_iter().take(n.max(1)).collect();
    let short = generated.len() < n.max(1);
    if generated.is_empty() {
        return Ok(Relevancy { score: None, short });
    }
    let mut texts = vec![record.truth.question.clone()];
    texts.extend(generated);
    let v = embedder.embed(&texts)?;
    if v.len() != texts.len() {
        return Err(ExternalError::BadResponse("embedding batch size".into()));
    }
    let sum: f64 = v[1..].iter().map(|g| cosine(&v[0], g)).sum();
    Ok(Relevancy {
        score: Some(clamp01(sum / (v.len() - 1) as f64)),
        short,
    })
}

/// F1 over claim classes; `None` when there are no claims at all.
pub fn claim_f1(c: ClaimCounts) -> Option<f64> {
    let denom = c.tp as f64 + 0.5 * (c.fp + c.fn_) as f64;
    (denom > 0.0).then(|| c.tp as f64 / denom)
}

pub fn answer_correctness_from(counts: ClaimCounts, similarity: f64, weights: (f64, f64)) -> f64 {
    let (wf, ws) = weights;
    clamp01(wf * claim_f1(counts).unwrap_or(0.0) + ws * similarity)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Correctness {
    pub score: Option<f64>,
    pub counts: ClaimCounts,
    /// F1 was undefined; only the similarity term contributed.
    pub f1_undefined: bool,
}

pub fn answer_correctness(
    record: &EvalRecord,
    judge: &dyn Judge,
    similarity: Option<f64>,
    weights: (f64, f64),
) -> Result<Correctness, ExternalError> {
    let answer_claims = judge.claims(&record.answer)?;
    let truth_claims = judge.claims(&record.truth.ground_truth)?;
    let counts = judge.classify_claims(&answer_claims, &truth_claims)?;
    let f1_undefined = claim_f1(counts).is_none();
    Ok(Correctness {
        score: similarity.map(|s| answer_correctness_from(counts, s, weights)),
        counts,
        f1_undefined,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RecordScores {
    pub scores: MetricScores,
    pub notes: Vec<String>,
}

pub fn score_record(
    record: &EvalRecord,
    judge: &dyn Judge,
    embedder: &dyn Embedder,
    config: &MetricConfig,
) -> Result<RecordScores, ExternalError> {
    let mut notes = Vec::new();
    let similarity = answer_similarity(record, embedder)?;
    let relevancy = answer_relevancy(record, judge, embedder, config.relevancy_questions)?;
    if relevancy.short {
        notes.push("answer_relevancy: fewer generated questions than requested".into());
    }
    let correctness = answer_correctness(record, judge, similarity, config.correctness_weights)?;
    if correctness.f1_undefined {
        notes.push("answer_correctness: no claims, similarity term only".into());
    }
    let scores = MetricScores {
        faithfulness: faithfulness(record, judge)?,
        context_precision: context_precision(record, judge)?,
        context_recall: context_recall(record, judge)?,
        answer_correctness: correctness.score,
        answer_similarity: similarity,
        answer_relevancy: relevancy.score,
    };
    Ok(RecordScores { scores, notes })
}
