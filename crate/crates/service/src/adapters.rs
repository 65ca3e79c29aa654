//! HTTP clients for the external services, plus the local language detector.
//!
//! Wire formats: OpenAI-compatible `/chat/completions` and `/embeddings`,
//! a TEI-style `/rerank` (`{query, texts}` -> `[{index, score}]`) and the
//! LanguageTool `/v2/check` form API.

use std::sync::Arc;
use std::time::{Duration, Instant};

use figura_core::annotation::verify::{judge_answer_is_yes, GIBBERISH_PROMPT};
use figura_core::annotation::{GibberishJudge, GrammarChecker, LanguageDetector};
use figura_core::external::ExternalError;
use figura_core::rag::{ChatMessage, ChatRequest, Embedder, Llm, Reranker, Role};
use reqwest::blocking::{Client, RequestBuilder};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::config::Endpoint;
use crate::jsonl::{now, JsonlLog};

/// Blocking client shared by the adapters. Build it outside async contexts.
#[derive(Clone, Debug)]
pub struct Http {
    client: Client,
    audit: Option<Arc<JsonlLog>>,
}

impl Http {
    pub fn new(timeout: Duration, audit: Option<Arc<JsonlLog>>) -> Self {
        let client = Client::builder().timeout(timeout).build().expect("http client");
        Http { client, audit }
    }

    fn send(&self, service: &str, url: &str, req: RequestBuilder, body: &Value) -> Result<Value, ExternalError> {
        let started = Instant::now();
        let result = req
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    ExternalError::Timeout
                } else {
                    ExternalError::Transport(e.to_string())
                }
            })
            .and_then(|r| {
                let status = r.status();
                let text = r.text().map_err(|e| ExternalError::Transport(e.to_string()))?;
                if !status.is_success() {
                    return Err(ExternalError::BadResponse(format!("HTTP {status}: {text}")));
                }
                serde_json::from_str::<Value>(&text).map_err(|e| ExternalError::BadResponse(e.to_string()))
            });
        if let Some(log) = &self.audit {
            log.write(&json!({
                "ts": now(),
                "service": service,
                "url": url,
                "request": body,
                "response": result.as_ref().ok(),
                "error": result.as_ref().err().map(|e| e.to_string()),
                "duration_ms": started.elapsed().as_millis() as u64,
            }));
        }
        result
    }

    fn post_json(&self, service: &str, endpoint: &Endpoint, path: &str, body: Value) -> Result<Value, ExternalError> {
        let url = join(&endpoint.url, path);
        let mut req = self.client.post(&url).json(&body);
        if let Some(key) = &endpoint.api_key {
            req = req.bearer_auth(key);
        }
        self.send(service, &url, req, &body)
    }
}

fn join(base: &str, path: &str) -> String {
    let base = base.trim_end_matches('/');
    if base.ends_with(path) {
        base.to_string()
    } else {
        format!("{base}{path}")
    }
}

fn bad(msg: impl Into<String>) -> ExternalError {
    ExternalError::BadResponse(msg.into())
}

/// OpenAI-compatible chat completions.
#[derive(Clone, Debug)]
pub struct HttpLlm {
    pub http: Http,
    pub endpoint: Endpoint,
}

impl HttpLlm {
    pub fn request_body(&self, request: &ChatRequest) -> Value {
        json!({
            "model": self.endpoint.model.as_deref().unwrap_or("gpt-3.5-turbo"),
            "messages": request.messages,
            "temperature": request.temperature,
        })
    }
}

impl Llm for HttpLlm {
    fn chat(&self, request: &ChatRequest) -> Result<String, ExternalError> {
        let v = self
            .http
            .post_json("llm", &self.endpoint, "/chat/completions", self.request_body(request))?;
        v["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| bad("missing choices[0].message.content"))
    }
}

/// OpenAI-compatible embeddings.
#[derive(Clone, Debug)]
pub struct HttpEmbedder {
    pub http: Http,
    pub endpoint: Endpoint,
    pub dim: usize,
}

#[derive(Deserialize)]
struct EmbeddingItem {
    index: usize,
    embedding: Vec<f32>,
}

impl Embedder for HttpEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, ExternalError> {
        let mut out = Vec::with_capacity(texts.len());
        for batch in texts.chunks(64) {
            let mut body = json!({ "input": batch });
            if let Some(m) = &self.endpoint.model {
                body["model"] = json!(m);
            }
            let v = self.http.post_json("embedder", &self.endpoint, "/embeddings", body)?;
            let mut items: Vec<EmbeddingItem> =
                serde_json::from_value(v["data"].clone()).map_err(|e| bad(format!("embeddings: {e}")))?;
            items.sort_by_key(|i| i.index);
            if items.len() != batch.len() {
                return Err(bad(format!("{} embeddings for {} inputs", items.len(), batch.len())));
            }
            for i in items {
                if i.embedding.len() != self.dim {
                    return Err(bad(format!("embedding dimension {} instead of {}", i.embedding.len(), self.dim)));
                }
                out.push(i.embedding);
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub struct HttpReranker {
    pub http: Http,
    pub endpoint: Endpoint,
}

#[derive(Deserialize)]
struct RerankItem {
    index: usize,
    score: f64,
}

impl Reranker for HttpReranker {
    fn score(&self, query: &str, candidates: &[String]) -> Result<Vec<f64>, ExternalError> {
        let v = self.http.post_json(
            "reranker",
            &self.endpoint,
            "/rerank",
            json!({ "query": query, "texts": candidates }),
        )?;
        let items: Vec<RerankItem> = serde_json::from_value(v).map_err(|e| bad(format!("rerank: {e}")))?;
        let mut scores = vec![None; candidates.len()];
        for i in items {
            *scores.get_mut(i.index).ok_or_else(|| bad("rerank index out of range"))? = Some(i.score);
        }
        scores
            .into_iter()
            .map(|s| s.ok_or_else(|| bad("rerank result incomplete")))
            .collect()
    }
}

/// LanguageTool; any reported match counts as a grammar problem.
#[derive(Clone, Debug)]
pub struct LanguageTool {
    pub http: Http,
    pub endpoint: Endpoint,
}

impl GrammarChecker for LanguageTool {
    fn check(&self, text: &str) -> Result<bool, ExternalError> {
        let url = join(&self.endpoint.url, "/v2/check");
        let form = [("text", text), ("language", "de-DE")];
        let req = self.http.client.post(&url).form(&form);
        let v = self.http.send("grammar", &url, req, &json!({ "text": text, "language": "de-DE" }))?;
        let matches = v["matches"].as_array().ok_or_else(|| bad("missing matches"))?;
        Ok(matches.is_empty())
    }
}

/// Asks the chat model whether a text is gibberish.
#[derive(Clone)]
pub struct LlmGibberishJudge {
    pub llm: Arc<dyn Llm>,
}

impl GibberishJudge for LlmGibberishJudge {
    fn is_gibberish(&self, text: &str) -> Result<bool, ExternalError> {
        let answer = self.llm.chat(&ChatRequest {
            messages: vec![ChatMessage {
                role: Role::User,
                content: format!("{GIBBERISH_PROMPT}{text}"),
            }],
            temperature: 0.0,
        })?;
        Ok(judge_answer_is_yes(&answer))
    }
}

/// Statistical language identification, no network.
#[derive(Clone, Debug, Default)]
pub struct Whatlang;

impl LanguageDetector for Whatlang {
    fn detect(&self, text: &str) -> Option<String> {
        use whatlang::Lang;
        let lang = whatlang::detect_lang(text)?;
        Some(
            match lang {
                Lang::Deu => "de",
                Lang::Eng => "en",
                Lang::Fra => "fr",
                Lang::Spa => "es",
                Lang::Ita => "it",
                Lang::Nld => "nl",
                Lang::Por => "pt",
                Lang::Pol => "pl",
                Lang::Dan => "da",
                Lang::Swe => "sv",
                other => other.code(),
            }
            .to_string(),
        )
    }
}
