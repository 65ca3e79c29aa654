use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::dataset::{EvalRecord, GroundTruthRecord};
use super::judge::Judge;
use super::metrics::{score_record, Metric, MetricConfig, MetricScores};
use crate::rag::{postprocess_answer, ChunkMethod, Embedder, Llm, RagConfig, RagError, RagIndex, Reranker};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("the evaluation dataset is empty")]
    EmptyDataset,
    #[error("no configurations to evaluate")]
    NoConfigs,
    #[error("configuration {config}: {source}")]
    Build { config: String, source: RagError },
}

/// External services one evaluation run talks to.
pub struct EvalServices<'a> {
    /// Embeds chunks and questions for retrieval.
    pub retrieval_embedder: &'a dyn Embedder,
    pub reranker: &'a dyn Reranker,
    pub llm: &'a dyn Llm,
    pub judge: &'a dyn Judge,
    /// Embeds texts for the similarity-based metrics.
    pub metric_embedder: &'a dyn Embedder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub config: RagConfig,
    pub scores: MetricScores,
    /// One flag per column of [`Report::columns`].
    pub best: Vec<bool>,
    pub scored: usize,
    pub excluded: usize,
}

impl ReportRow {
    pub fn chunk_sizes(&self) -> String {
        self.config.chunk_sizes.iter().map(usize::to_string).collect::<Vec<_>>().join(", ")
    }

    pub fn method(&self) -> &'static str {
        match self.config.method {
            ChunkMethod::Basic => "Basic",
            ChunkMethod::AutoMerging => "AMR",
        }
    }

    pub fn reranker(&self) -> String {
        format!("top-{}/{}", self.config.retrieve_k, self.config.rerank_k)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub columns: Vec<Metric>,
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn from_rows(rows: Vec<(RagConfig, MetricScores, usize, usize)>) -> Report {
        let columns = Metric::ALL.to_vec();
        let best_per_column: Vec<Option<f64>> = columns
            .iter()
            .map(|m| rows.iter().filter_map(|r| r.1.get(*m)).max_by(f64::total_cmp))
            .collect();
        let rows = rows
            .into_iter()
            .map(|(config, scores, scored, excluded)| ReportRow {
                label: config.to_string(),
                best: columns
                    .iter()
                    .zip(&best_per_column)
                    .map(|(m, best)| scores.get(*m).is_some() && scores.get(*m) == *best)
                    .collect(),
                config,
                scores,
                scored,
                excluded,
            })
            .collect();
        Report { columns, rows }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Fixed-width table; best values per column carry a trailing `*`,
    /// undefined values show as `n/a`.
    pub fn to_table(&self) -> String {
        let mut header: Vec<String> = vec!["Chunk Sizes".into(), "Chunking Method".into(), "reranker".into()];
        header.extend(self.columns.iter().map(|m| m.short_name().to_string()));
        let mut lines: Vec<Vec<String>> = vec![header];
        for r in &self.rows {
            let mut cells = vec![r.chunk_sizes(), r.method().to_string(), r.reranker()];
            for (m, best) in self.columns.iter().zip(&r.best) {
                cells.push(match r.scores.get(*m) {
                    Some(v) => format!("{v:.4}{}", if *best { "*" } else { "" }),
                    None => "n/a".into(),
                });
            }
            lines.push(cells);
        }
        let widths: Vec<usize> = (0..lines[0].len())
            .map(|i| lines.iter().map(|l| l[i].chars().count()).max().unwrap_or(0))
            .collect();
        lines
            .iter()
            .map(|l| {
                l.iter()
                    .zip(&widths)
                    .map(|(c, w)| format!("{c:<w$}"))
                    .collect::<Vec<_>>()
                    .join("  ")
                    .trim_end()
                    .to_string()
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub report: Report,
    /// Answers per configuration, same order as the report rows.
    pub answers: Vec<Vec<EvalRecord>>,
    /// Records left out of the averages, with the reason.
    pub failures: Vec<(String, String)>,
}

/// Builds an index per configuration over `document`, answers every question,
/// postprocesses the answers and averages the six metrics.
pub fn run_evaluation(
    dataset: &[GroundTruthRecord],
    configs: &[RagConfig],
    document: &str,
    services: &EvalServices<'_>,
    metric_config: &MetricConfig,
) -> Result<Evaluation, EvalError> {
    if dataset.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    if configs.is_empty() {
        return Err(EvalError::NoConfigs);
    }
    let mut rows = Vec::new();
    let mut answers = Vec::new();
    let mut failures = Vec::new();
    for config in configs {
        let label = config.to_string();
        let index = RagIndex::build(document, config, services.retrieval_embedder).map_err(|source| EvalError::Build {
            config: label.clone(),
            source,
        })?;
        let mut records = Vec::new();
        let mut scores = Vec::new();
        for truth in dataset {
            let answered = index.answer(&truth.question, services.retrieval_embedder, services.reranker, services.llm);
            let answer = match answered {
                Ok(a) => a,
                Err(e) => {
                    failures.push((label.clone(), format!("{}: {e}", truth.question)));
                    continue;
                }
            };
            let record = EvalRecord {
                truth: truth.clone(),
                answer: postprocess_answer(&answer.text),
                retrieved_contexts: answer.contexts.texts,
            };
            match score_record(&record, services.judge, services.metric_embedder, metric_config) {
                Ok(s) => scores.push(s.scores),
                Err(e) => failures.push((label.clone(), format!("{}: {e}", truth.question))),
            }
            records.push(record);
        }
        let excluded = dataset.len() - scores.len();
        rows.push((config.clone(), MetricScores::mean(&scores), scores.len(), excluded));
        answers.push(records);
    }
    Ok(Evaluation {
        report: Report::from_rows(rows),
        answers,
        failures,
    })
}
