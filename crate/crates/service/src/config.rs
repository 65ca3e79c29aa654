//! Service configuration from `FIGURA_*` environment variables.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

#[derive(Clone, Debug, PartialEq)]
pub struct Endpoint {
    pub url: String,
    pub api_key: Option<String>,
    pub model: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    /// `None` serves the bundled sample ontology.
    pub ontology: Option<PathBuf>,
    pub mapping: Option<PathBuf>,
    pub database: PathBuf,
    pub rag_config: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    /// Loaded when present, otherwise built and written here.
    pub index: Option<PathBuf>,
    pub admin_token: Option<String>,
    /// Fixes the random example sequence.
    pub seed: Option<u64>,
    pub llm: Option<Endpoint>,
    pub embedder: Option<Endpoint>,
    pub embedding_dim: usize,
    pub reranker: Option<Endpoint>,
    pub grammar: Option<Endpoint>,
    pub timeout: Duration,
    pub request_log: Option<PathBuf>,
    pub audit_log: Option<PathBuf>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{var}: {message}")]
    Invalid { var: &'static str, message: String },
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            ontology: None,
            mapping: None,
            database: PathBuf::from("figura.db"),
            rag_config: None,
            templates: None,
            index: None,
            admin_token: None,
            seed: None,
            llm: None,
            embedder: None,
            embedding_dim: 1024,
            reranker: None,
            grammar: None,
            timeout: Duration::from_secs(30),
            request_log: None,
            audit_log: None,
        }
    }
}

impl ServiceConfig {
    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_vars(&std::env::vars().collect())
    }

    pub fn from_vars(vars: &HashMap<String, String>) -> Result<Self, ConfigError> {
        let get = |k: &str| vars.get(k).map(|v| v.trim().to_string()).filter(|v| !v.is_empty());
        let path = |k: &str| get(k).map(PathBuf::from);
        fn parse<T: std::str::FromStr>(var: &'static str, v: Option<String>) -> Result<Option<T>, ConfigError>
        where
            T::Err: std::fmt::Display,
        {
            v.map(|s| {
                s.parse::<T>().map_err(|e| ConfigError::Invalid {
                    var,
                    message: e.to_string(),
                })
            })
            .transpose()
        }
        let endpoint = |prefix: &str| {
            get(&format!("FIGURA_{prefix}_URL")).map(|url| Endpoint {
                url,
                api_key: get(&format!("FIGURA_{prefix}_API_KEY")),
                model: get(&format!("FIGURA_{prefix}_MODEL")),
            })
        };
        let d = ServiceConfig::default();
        Ok(ServiceConfig {
            bind: parse("FIGURA_BIND", get("FIGURA_BIND"))?.unwrap_or(d.bind),
            ontology: path("FIGURA_ONTOLOGY"),
            mapping: path("FIGURA_MAPPING"),
            database: path("FIGURA_DB").unwrap_or(d.database),
            rag_config: path("FIGURA_RAG_CONFIG"),
            templates: path("FIGURA_TEMPLATES"),
            index: path("FIGURA_INDEX"),
            admin_token: get("FIGURA_ADMIN_TOKEN"),
            seed: parse("FIGURA_SEED", get("FIGURA_SEED"))?,
            llm: endpoint("LLM"),
            embedder: endpoint("EMBED"),
            embedding_dim: parse("FIGURA_EMBED_DIM", get("FIGURA_EMBED_DIM"))?.unwrap_or(d.embedding_dim),
            reranker: endpoint("RERANK"),
            grammar: endpoint("GRAMMAR"),
            timeout: parse::<f64>("FIGURA_TIMEOUT_SECS", get("FIGURA_TIMEOUT_SECS"))?
                .map(Duration::from_secs_f64)
                .unwrap_or(d.timeout),
            request_log: path("FIGURA_REQUEST_LOG"),
            audit_log: path("FIGURA_AUDIT_LOG"),
        })
    }
}
