use std::path::Path;
use std::sync::{Arc, OnceLock};

use figura_core::annotation::verify::stubs::{HeuristicJudge, StopwordDetector};
use figura_core::annotation::{AnnotationError, AnnotationStore, GibberishJudge, GrammarChecker, LanguageDetector, RepetitionRule};
use figura_core::external::ExternalError;
use figura_core::ontology::{self, MappingConfig, OntologyError, TripleStore};
use figura_core::rag::embed::HashedBow;
use figura_core::rag::llm::stubs::EchoLlm;
use figura_core::rag::{serialize_ontology, DocumentTemplates, Embedder, Llm, RagConfig, RagError, RagIndex, Reranker, TokenOverlap};
use thiserror::Error;

use crate::adapters::{Http, HttpEmbedder, HttpLlm, HttpReranker, LanguageTool, LlmGibberishJudge, Whatlang};
use crate::config::ServiceConfig;
use crate::jsonl::JsonlLog;

/// External collaborators, swappable for deterministic doubles.
#[derive(Clone)]
pub struct Services {
    pub detector: Arc<dyn LanguageDetector>,
    pub grammar: Arc<dyn GrammarChecker>,
    pub gibberish: Arc<dyn GibberishJudge>,
    pub embedder: Arc<dyn Embedder>,
    pub reranker: Arc<dyn Reranker>,
    pub llm: Arc<dyn Llm>,
}

/// Grammar checker used when none is configured: never objects.
#[derive(Clone, Debug, Default)]
pub struct NoGrammarCheck;

impl GrammarChecker for NoGrammarCheck {
    fn check(&self, _text: &str) -> Result<bool, ExternalError> {
        Ok(true)
    }
}

impl Services {
    /// Fully offline doubles.
    pub fn stubs() -> Self {
        Services {
            detector: Arc::new(StopwordDetector),
            grammar: Arc::new(NoGrammarCheck),
            gibberish: Arc::new(HeuristicJudge),
            embedder: Arc::new(HashedBow::default()),
            reranker: Arc::new(TokenOverlap),
            llm: Arc::new(EchoLlm),
        }
    }

    /// HTTP adapters for every configured endpoint, local doubles otherwise.
    /// Must run outside an async context.
    pub fn from_config(config: &ServiceConfig, audit: Option<Arc<JsonlLog>>) -> Self {
        let http = Http::new(config.timeout, audit);
        let stubs = Services::stubs();
        let llm: Arc<dyn Llm> = match &config.llm {
            Some(e) => Arc::new(HttpLlm {
                http: http.clone(),
                endpoint: e.clone(),
            }),
            None => {
                tracing::warn!("FIGURA_LLM_URL not set, chat answers are echoed contexts");
                stubs.llm
            }
        };
        let gibberish: Arc<dyn GibberishJudge> = match &config.llm {
            Some(_) => Arc::new(LlmGibberishJudge { llm: llm.clone() }),
            None => stubs.gibberish,
        };
        Services {
            detector: Arc::new(Whatlang),
            grammar: match &config.grammar {
                Some(e) => Arc::new(LanguageTool {
                    http: http.clone(),
                    endpoint: e.clone(),
                }),
                None => stubs.grammar,
            },
            gibberish,
            embedder: match &config.embedder {
                Some(e) => Arc::new(HttpEmbedder {
                    http: http.clone(),
                    endpoint: e.clone(),
                    dim: config.embedding_dim,
                }),
                None => {
                    tracing::warn!("FIGURA_EMBED_URL not set, using hashed bag-of-words embeddings");
                    stubs.embedder
                }
            },
            reranker: match &config.reranker {
                Some(e) => Arc::new(HttpReranker {
                    http,
                    endpoint: e.clone(),
                }),
                None => stubs.reranker,
            },
            llm,
        }
    }
}

#[derive(Debug, Error)]
pub enum StartupError {
    #[error("reading {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("ontology: {0}")]
    Ontology(#[from] OntologyError),
    #[error("mapping: {0}")]
    Mapping(#[from] ontology::MappingError),
    #[error("RAG configuration: {0}")]
    RagConfig(#[from] figura_core::rag::ConfigError),
    #[error("document templates: {0}")]
    Templates(String),
    #[error("annotation store: {0}")]
    Store(#[from] AnnotationError),
    #[error("log file: {0}")]
    Log(std::io::Error),
}

pub fn read(path: &Path) -> Result<String, StartupError> {
    std::fs::read_to_string(path).map_err(|source| StartupError::Read {
        path: path.display().to_string(),
        source,
    })
}

pub struct AppState {
    pub ontology: TripleStore,
    pub rule: RepetitionRule,
    pub store: AnnotationStore,
    pub services: Services,
    pub rag_config: RagConfig,
    pub document: String,
    pub index: OnceLock<Arc<RagIndex>>,
    pub admin_token: Option<String>,
    pub request_log: Option<JsonlLog>,
}

pub fn load_ontology(config: &ServiceConfig) -> Result<TripleStore, StartupError> {
    let mapping = match &config.mapping {
        Some(p) => MappingConfig::parse(&read(p)?)?,
        None => MappingConfig::default_mapping(),
    };
    let text = match &config.ontology {
        Some(p) => read(p)?,
        None => ontology::SAMPLE_ONTOLOGY.to_string(),
    };
    let reified = ontology::load(&text, &mapping)?;
    if !reified.report.unmapped.is_empty() {
        tracing::warn!(
            "{} compound relations without mapping were kept as-is",
            reified.report.unmapped.len()
        );
    }
    Ok(reified.store)
}

pub fn load_templates(config: &ServiceConfig) -> Result<DocumentTemplates, StartupError> {
    match &config.templates {
        Some(p) => DocumentTemplates::from_toml(&read(p)?).map_err(|e| StartupError::Templates(e.to_string())),
        None => Ok(DocumentTemplates::default()),
    }
}

pub fn load_rag_config(config: &ServiceConfig) -> Result<RagConfig, StartupError> {
    match &config.rag_config {
        Some(p) => Ok(RagConfig::from_toml(&read(p)?)?),
        None => Ok(RagConfig::basic(2048, 12, 6)),
    }
}

impl AppState {
    /// Everything except the vector index, which [`AppState::build_index`]
    /// provides later.
    pub fn new(config: &ServiceConfig, services: Services) -> Result<Self, StartupError> {
        let ontology = load_ontology(config)?;
        let templates = load_templates(config)?;
        let rag_config = load_rag_config(config)?;
        let store = if config.database.as_os_str() == ":memory:" {
            AnnotationStore::open_in_memory(config.seed)?
        } else {
            AnnotationStore::open(&config.database, config.seed)?
        };
        let request_log = config
            .request_log
            .as_ref()
            .map(JsonlLog::open)
            .transpose()
            .map_err(StartupError::Log)?;
        Ok(AppState {
            rule: RepetitionRule::from_ontology(&ontology),
            document: serialize_ontology(&ontology, &templates),
            ontology,
            store,
            services,
            rag_config,
            index: OnceLock::new(),
            admin_token: config.admin_token.clone(),
            request_log,
        })
    }

    /// Loads the index from `path` if it exists and matches the configuration,
    /// otherwise builds it (and writes it to `path` when given).
    pub fn build_index(&self, path: Option<&Path>) -> Result<(), RagError> {
        if let Some(p) = path.filter(|p| p.exists()) {
            match RagIndex::load(p) {
                Ok(idx) if idx.config == self.rag_config && idx.index.dim() == self.services.embedder.dim() => {
                    let _ = self.index.set(Arc::new(idx));
                    return Ok(());
                }
                Ok(_) => tracing::info!("index at {} was built with other settings, rebuilding", p.display()),
                Err(e) => tracing::warn!("index at {} unreadable ({e}), rebuilding", p.display()),
            }
        }
        let idx = RagIndex::build(&self.document, &self.rag_config, self.services.embedder.as_ref())?;
        if let Some(p) = path {
            idx.save(p)?;
        }
        let _ = self.index.set(Arc::new(idx));
        Ok(())
    }

    pub fn index(&self) -> Option<Arc<RagIndex>> {
        self.index.get().cloned()
    }
}
