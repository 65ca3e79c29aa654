//! Evaluation judge backed by the chat model.

use std::sync::Arc;

use figura_core::annotation::verify::judge_answer_is_yes;
use figura_core::evaluation::{ClaimCounts, Judge};
use figura_core::external::ExternalError;
use figura_core::rag::{ChatMessage, ChatRequest, Llm, Role};

#[derive(Clone)]
pub struct LlmJudge {
    pub llm: Arc<dyn Llm>,
}

impl LlmJudge {
    fn ask(&self, prompt: String) -> Result<String, ExternalError> {
        self.llm.chat(&ChatRequest {
            messages: vec![ChatMessage {
                role: Role::User,
                content: prompt,
            }],
            temperature: 0.0,
        })
    }

    fn yes_no(&self, prompt: String) -> Result<bool, ExternalError> {
        Ok(judge_answer_is_yes(&self.ask(format!("{prompt}\nAnswer with exactly one word: yes or no."))?))
    }
}

fn numbered(items: &[String]) -> String {
    items
        .iter()
        .enumerate()
        .map(|(i, s)| format!("[{}] {s}", i + 1))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Judge for LlmJudge {
    fn is_supported(&self, statement: &str, contexts: &[String]) -> Result<bool, ExternalError> {
        self.yes_no(format!(
            "Context:\n{}\n\nStatement: {statement}\nCan the statement be inferred from the context?",
            numbered(contexts)
        ))
    }

    fn is_relevant(&self, context: &str, question: &str, ground_truth: &str) -> Result<bool, ExternalError> {
        self.yes_no(format!(
            "Question: {question}\nReference answer: {ground_truth}\nContext: {context}\n\
             Was the context useful in arriving at the reference answer?"
        ))
    }

    fn generate_questions(&self, answer: &str, n: usize) -> Result<Vec<String>, ExternalError> {
        let reply = self.ask(format!(
            "Write {n} different German questions that the following answer responds to. \
             One question per line, no numbering.\n\nAnswer: {answer}"
        ))?;
        Ok(reply
            .lines()
            .map(|l| l.trim().trim_start_matches(|c: char| c.is_ascii_digit() || c == '.' || c == '-' || c == ')').trim())
            .filter(|l| !l.is_empty())
            .take(n)
            .map(str::to_string)
            .collect())
    }

    fn classify_claims(&self, answer_claims: &[String], truth_claims: &[String]) -> Result<ClaimCounts, ExternalError> {
        let mut c = ClaimCounts::default();
        for claim in answer_claims {
            if self.is_supported(claim, truth_claims)? {
                c.tp += 1;
            } else {
                c.fp += 1;
            }
        }
        for truth in truth_claims {
            if !self.is_supported(truth, answer_claims)? {
                c.fn_ += 1;
            }
        }
        Ok(c)
    }
}
