//! Competency-question ground truth, answer and context metrics, and the
//! configuration comparison report.

pub mod cq;
pub mod dataset;
pub mod judge;
pub mod metrics;
pub mod report;

pub use cq::{generate_template_cqs, CqProperty};
pub use dataset::{read_answers, read_ground_truth, write_answers, write_ground_truth, DatasetError, EvalRecord, GroundTruthRecord};
pub use judge::{split_sentences, ClaimCounts, ExactMatchJudge, Judge, ScriptedJudge};
pub use metrics::{
    answer_correctness, answer_correctness_from, answer_relevancy, answer_similarity, context_precision,
    context_precision_from, context_recall, faithfulness, score_record, Claim, Metric, MetricConfig, MetricScores,
};
pub use report::{run_evaluation, EvalError, EvalServices, Evaluation, Report, ReportRow};
