use serde::{Deserialize, Serialize};

use crate::external::ExternalError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

pub trait Llm: Send + Sync {
    fn chat(&self, request: &ChatRequest) -> Result<String, ExternalError>;
}

pub mod stubs {
    use std::sync::Mutex;

    use super::*;

    /// Answers with the user message's context section, so the reply quotes
    /// what was retrieved.
    #[derive(Clone, Debug, Default)]
    pub struct EchoLlm;

    impl Llm for EchoLlm {
        fn chat(&self, request: &ChatRequest) -> Result<String, ExternalError> {
            let user = request
                .messages
                .iter()
                .rev()
                .find(|m| m.role == Role::User)
                .ok_or_else(|| ExternalError::BadResponse("no user message".into()))?;
            let context = user.content.split("\n\nFrage:").next().unwrap_or_default();
            let context = context.strip_prefix("Kontext:\n").unwrap_or(context);
            Ok(format!("Laut Kontext: {}", context.trim()))
        }
    }

    /// Wraps another model and keeps every request it forwards.
    #[derive(Debug, Default)]
    pub struct RecordingLlm<L> {
        inner: L,
        requests: Mutex<Vec<ChatRequest>>,
    }

    impl<L> RecordingLlm<L> {
        pub fn new(inner: L) -> Self {
            RecordingLlm {
                inner,
                requests: Mutex::new(Vec::new()),
            }
        }

        pub fn requests(&self) -> Vec<ChatRequest> {
            self.requests.lock().expect("request log").clone()
        }
    }

    impl<L: Llm> Llm for RecordingLlm<L> {
        fn chat(&self, request: &ChatRequest) -> Result<String, ExternalError> {
            self.requests.lock().expect("request log").push(request.clone());
            self.inner.chat(request)
        }
    }

    #[derive(Clone, Debug)]
    pub struct FailingLlm(pub ExternalError);

    impl Llm for FailingLlm {
        fn chat(&self, _request: &ChatRequest) -> Result<String, ExternalError> {
            Err(self.0.clone())
        }
    }
}
