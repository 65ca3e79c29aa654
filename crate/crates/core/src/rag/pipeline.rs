use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::chunk::{ChunkError, ChunkId, ChunkTree};
use super::embed::Embedder;
use super::index::{build_index, retrieve, IndexError, VectorIndex};
use super::llm::{ChatMessage, ChatRequest, Llm, Role};
use super::merge::auto_merge;
use super::rerank::{rerank, Reranker};
use crate::external::ExternalError;

pub const GERMAN_ONLY: &str = "Bitte antworte nur auf Deutsch!";
pub const DEFAULT_TEMPERATURE: f64 = 0.1;

const DEFAULT_INSTRUCTION: &str = "Du bist ein Assistent für rhetorische Figuren. \
Beantworte die Frage anhand des folgenden Kontexts aus einer Ontologie rhetorischer Figuren. \
Wenn der Kontext die Antwort nicht enthält, sage das.";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChunkMethod {
    Basic,
    AutoMerging,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RagConfig {
    pub chunk_sizes: Vec<usize>,
    pub method: ChunkMethod,
    pub retrieve_k: usize,
    pub rerank_k: usize,
    #[serde(default = "default_threshold")]
    pub merge_threshold: f64,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
}

fn default_threshold() -> f64 {
    0.5
}

fn default_temperature() -> f64 {
    DEFAULT_TEMPERATURE
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("rerank_k ({rerank_k}) exceeds retrieve_k ({retrieve_k})")]
    RerankExceedsRetrieve { retrieve_k: usize, rerank_k: usize },
    #[error("retrieve_k and rerank_k must be at least 1")]
    ZeroK,
    #[error("basic chunking takes exactly one chunk size, got {0}")]
    BasicSizes(usize),
    #[error("auto-merging needs at least two chunk sizes")]
    MergingSizes,
    #[error("merge_threshold must lie in (0, 1], got {0}")]
    Threshold(f64),
    #[error(transparent)]
    Chunk(#[from] ChunkError),
    #[error("invalid configuration file: {0}")]
    Parse(String),
}

impl RagConfig {
    pub fn basic(size: usize, retrieve_k: usize, rerank_k: usize) -> Self {
        RagConfig {
            chunk_sizes: vec![size],
            method: ChunkMethod::Basic,
            retrieve_k,
            rerank_k,
            merge_threshold: default_threshold(),
            temperature: DEFAULT_TEMPERATURE,
        }
    }

    pub fn auto_merging(sizes: &[usize], retrieve_k: usize, rerank_k: usize) -> Self {
        RagConfig {
            chunk_sizes: sizes.to_vec(),
            method: ChunkMethod::AutoMerging,
            ..RagConfig::basic(0, retrieve_k, rerank_k)
        }
    }

    /// The six settings compared in the evaluation: three chunkings, each
    /// with retrieve/rerank 12/6 and 6/3.
    pub fn evaluation_grid() -> Vec<RagConfig> {
        let mut out = Vec::new();
        for (sizes, method) in [
            (vec![2048], ChunkMethod::Basic),
            (vec![2048, 512, 128], ChunkMethod::AutoMerging),
            (vec![512, 256, 128], ChunkMethod::AutoMerging),
        ] {
            for (retrieve_k, rerank_k) in [(12, 6), (6, 3)] {
                out.push(RagConfig {
                    chunk_sizes: sizes.clone(),
                    method,
                    retrieve_k,
                    rerank_k,
                    merge_threshold: default_threshold(),
                    temperature: DEFAULT_TEMPERATURE,
                });
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.retrieve_k == 0 || self.rerank_k == 0 {
            return Err(ConfigError::ZeroK);
        }
        if self.rerank_k > self.retrieve_k {
            return Err(ConfigError::RerankExceedsRetrieve {
                retrieve_k: self.retrieve_k,
                rerank_k: self.rerank_k,
            });
        }
        match self.method {
            ChunkMethod::Basic if self.chunk_sizes.len() != 1 => {
                return Err(ConfigError::BasicSizes(self.chunk_sizes.len()))
            }
            ChunkMethod::AutoMerging if self.chunk_sizes.len() < 2 => return Err(ConfigError::MergingSizes),
            _ => {}
        }
        if !(self.merge_threshold > 0.0 && self.merge_threshold <= 1.0) {
            return Err(ConfigError::Threshold(self.merge_threshold));
        }
        if self.chunk_sizes.contains(&0) {
            return Err(ChunkError::ZeroSize.into());
        }
        if self.chunk_sizes.windows(2).any(|w| w[0] <= w[1]) {
            return Err(ChunkError::NotDecreasing(self.chunk_sizes.clone()).into());
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RagConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

impl fmt::Display for RagConfig {
    /// e.g. `2048-512-128 / AMR / 12-6`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sizes: Vec<String> = self.chunk_sizes.iter().map(usize::to_string).collect();
        let method = match self.method {
            ChunkMethod::Basic => "basic",
            ChunkMethod::AutoMerging => "AMR",
        };
        write!(f, "{} / {} / {}-{}", sizes.join("-"), method, self.retrieve_k, self.rerank_k)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_instruction: String,
    pub context_chunks: Vec<String>,
    pub question: String,
}

impl PromptBundle {
    pub fn new(question: &str, context_chunks: Vec<String>) -> Self {
        PromptBundle::with_instruction(DEFAULT_INSTRUCTION, question, context_chunks)
    }

    /// The German-only directive is appended unless `instruction` already has it.
    pub fn with_instruction(instruction: &str, question: &str, context_chunks: Vec<String>) -> Self {
        let mut system_instruction = instruction.trim().to_string();
        if !system_instruction.contains(GERMAN_ONLY) {
            if !system_instruction.is_empty() {
                system_instruction.push(' ');
            }
            system_instruction.push_str(GERMAN_ONLY);
        }
        PromptBundle {
            system_instruction,
            context_chunks,
            question: question.to_string(),
        }
    }

    pub fn user_message(&self) -> String {
        format!(
            "Kontext:\n{}\n\nFrage: {}",
            self.context_chunks.join("\n---\n"),
            self.question
        )
    }

    pub fn to_request(&self, temperature: f64) -> ChatRequest {
        ChatRequest {
            messages: vec![
                ChatMessage {
                    role: Role::System,
                    content: self.system_instruction.clone(),
                },
                ChatMessage {
                    role: Role::User,
                    content: self.user_message(),
                },
            ],
            temperature,
        }
    }
}

#[derive(Debug, Error)]
pub enum RagError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("chunk metadata: {0}")]
    Metadata(String),
    #[error("language model failed: {source}")]
    Llm {
        source: ExternalError,
        /// The contexts that would have been sent.
        contexts: Vec<String>,
    },
}

/// Chunk tree plus the vector index over its leaves, built for one config.
#[derive(Clone, Debug)]
pub struct RagIndex {
    pub config: RagConfig,
    pub tree: ChunkTree,
    pub index: VectorIndex,
}

impl RagIndex {
    /// Only leaves are embedded; merging happens on the tree at query time.
    pub fn build(document: &str, config: &RagConfig, embedder: &dyn Embedder) -> Result<Self, RagError> {
        config.validate()?;
        let tree = ChunkTree::build(document, &config.chunk_sizes).map_err(ConfigError::from)?;
        let index = build_index(tree.leaves(), embedder)?;
        Ok(RagIndex {
            config: config.clone(),
            tree,
            index,
        })
    }

    fn sidecar(path: &Path) -> PathBuf {
        let mut p = path.as_os_str().to_owned();
        p.push(".chunks.json");
        PathBuf::from(p)
    }

    /// Writes the vector file at `path` and the chunks and config next to it.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RagError> {
        let path = path.as_ref();
        self.index.save(path)?;
        let meta = serde_json::json!({ "config": self.config, "tree": self.tree });
        std::fs::write(Self::sidecar(path), meta.to_string()).map_err(IndexError::from)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RagError> {
        let path = path.as_ref();
        let index = VectorIndex::load(path)?;
        let text = std::fs::read_to_string(Self::sidecar(path)).map_err(IndexError::from)?;
        #[derive(Deserialize)]
        struct Meta {
            config: RagConfig,
            tree: ChunkTree,
        }
        let meta: Meta = serde_json::from_str(&text).map_err(|e| RagError::Metadata(e.to_string()))?;
        if meta.tree.leaves().len() != index.len() {
            return Err(RagError::Metadata("chunk count does not match the index".into()));
        }
        Ok(RagIndex {
            config: meta.config,
            tree: meta.tree,
            index,
        })
    }

    /// Contexts for `question` after retrieval, optional merging and reranking.
    pub fn contexts(
        &self,
        question: &str,
        embedder: &dyn Embedder,
        reranker: &dyn Reranker,
    ) -> Result<Contexts, RagError> {
        let retrieved = retrieve(&self.index, question, self.config.retrieve_k, embedder)?;
        let ids: Vec<ChunkId> = retrieved.iter().map(|(id, _)| *id).collect();
        let candidates = match self.config.method {
            ChunkMethod::Basic => ids,
            ChunkMethod::AutoMerging => auto_merge(&ids, &self.tree, self.config.merge_threshold),
        };
        let texts: Vec<String> = candidates
            .iter()
            .filter_map(|id| self.tree.get(*id))
            .map(|c| c.text.clone())
            .collect();
        let reranked = rerank(question, &texts, reranker, self.config.rerank_k);
        Ok(Contexts {
            retrieved,
            chunk_ids: reranked.order.iter().map(|&i| candidates[i]).collect(),
            texts: reranked.order.iter().map(|&i| texts[i].clone()).collect(),
            rerank_fallback: reranked.fallback,
        })
    }

    pub fn answer(
        &self,
        question: &str,
        embedder: &dyn Embedder,
        reranker: &dyn Reranker,
        llm: &dyn Llm,
    ) -> Result<Answer, RagError> {
        let contexts = self.contexts(question, embedder, reranker)?;
        let bundle = PromptBundle::new(question, contexts.texts.clone());
        match llm.chat(&bundle.to_request(self.config.temperature)) {
            Ok(text) => Ok(Answer { text, contexts }),
            Err(source) => Err(RagError::Llm {
                source,
                contexts: contexts.texts,
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contexts {
    /// Raw retrieval hits over leaves, best first.
    pub retrieved: Vec<(ChunkId, f64)>,
    pub chunk_ids: Vec<ChunkId>,
    pub texts: Vec<String>,
    pub rerank_fallback: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub text: String,
    pub contexts: Contexts,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rag::embed::HashedBow;
    use crate::rag::llm::stubs::{EchoLlm, FailingLlm, RecordingLlm};
    use crate::rag::rerank::TokenOverlap;

    const DOC: &str = "Die Anapher wiederholt ein Wort am Anfang. Die Epipher wiederholt ein Wort am Ende. \
Der Chiasmus stellt Satzglieder über Kreuz. Die Ellipse lässt Satzteile aus.";

    #[test]
    fn config_validation() {
        assert!(RagConfig::basic(2048, 12, 6).validate().is_ok());
        assert_eq!(
            RagConfig::basic(2048, 6, 12).validate(),
            Err(ConfigError::RerankExceedsRetrieve { retrieve_k: 6, rerank_k: 12 })
        );
        let mut c = RagConfig::basic(2048, 12, 6);
        c.chunk_sizes.push(128);
        assert_eq!(c.validate(), Err(ConfigError::BasicSizes(2)));
        assert_eq!(RagConfig::auto_merging(&[512], 6, 3).validate(), Err(ConfigError::MergingSizes));
        let mut c = RagConfig::auto_merging(&[512, 128], 6, 3);
        c.merge_threshold = 0.0;
        assert!(matches!(c.validate(), Err(ConfigError::Threshold(_))));
    }

    #[test]
    fn toml_round_trip() {
        for c in RagConfig::evaluation_grid() {
            assert_eq!(RagConfig::from_toml(&c.to_toml()).unwrap(), c);
        }
        let c = RagConfig::from_toml("chunk_sizes = [512, 256, 128]\nmethod = \"auto_merging\"\nretrieve_k = 6\nrerank_k = 3\n")
            .unwrap();
        assert_eq!(c.merge_threshold, 0.5);
        assert_eq!(c.temperature, 0.1);
        assert!(RagConfig::from_toml("chunk_sizes = [1]\nmethod = \"basic\"\nretrieve_k = 1\nrerank_k = 1\nbogus = 1\n").is_err());
    }

    #[test]
    fn grid_labels() {
        let labels: Vec<String> = RagConfig::evaluation_grid().iter().map(|c| c.to_string()).collect();
        assert_eq!(labels[0], "2048 / basic / 12-6");
        assert_eq!(labels[5], "512-256-128 / AMR / 6-3");
    }

    #[test]
    fn directive_always_present() {
        let b = PromptBundle::with_instruction("", "Was ist eine Anapher?", vec![]);
        assert_eq!(b.system_instruction, GERMAN_ONLY);
        let b = PromptBundle::with_instruction(&format!("Sei knapp. {GERMAN_ONLY}"), "x", vec![]);
        assert_eq!(b.system_instruction.matches(GERMAN_ONLY).count(), 1);
    }

    #[test]
    fn answer_end_to_end_with_stubs() {
        let e = HashedBow::default();
        let idx = RagIndex::build(DOC, &RagConfig::auto_merging(&[16, 8], 4, 2), &e).unwrap();
        let llm = RecordingLlm::new(EchoLlm);
        let a = idx.answer("Was macht die Epipher?", &e, &TokenOverlap, &llm).unwrap();
        assert!(a.text.contains("Epipher wiederholt"));
        assert!(a.contexts.texts.len() <= 2);
        let reqs = llm.requests();
        assert_eq!(reqs.len(), 1);
        assert_eq!(reqs[0].temperature, 0.1);
        assert!(reqs[0].messages[0].content.contains(GERMAN_ONLY));
        let again = idx.answer("Was macht die Epipher?", &e, &TokenOverlap, &llm).unwrap();
        assert_eq!(again, a);
    }

    #[test]
    fn llm_failure_keeps_contexts() {
        let e = HashedBow::default();
        let idx = RagIndex::build(DOC, &RagConfig::basic(8, 3, 2), &e).unwrap();
        match idx.answer("Ellipse", &e, &TokenOverlap, &FailingLlm(ExternalError::Timeout)) {
            Err(RagError::Llm { contexts, .. }) => assert_eq!(contexts.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("figures.idx");
        let e = HashedBow::new(32);
        let idx = RagIndex::build(DOC, &RagConfig::auto_merging(&[16, 8, 4], 6, 3), &e).unwrap();
        idx.save(&path).unwrap();
        let back = RagIndex::load(&path).unwrap();
        assert_eq!(back.index, idx.index);
        assert_eq!(back.tree, idx.tree);
        assert_eq!(back.config, idx.config);
    }
}
