//! Retrieval over the flattened ontology and prompt assembly for the chat.

pub mod chunk;
pub mod document;
pub mod embed;
pub mod index;
pub mod llm;
pub mod merge;
pub mod pipeline;
pub mod postprocess;
pub mod rerank;

pub use chunk::{chunk_basic, chunk_hierarchical, Chunk, ChunkError, ChunkId, ChunkTree};
pub use document::{figure_block, serialize_ontology, DocumentTemplates};
pub use embed::{cosine, Embedder, HashedBow};
pub use index::{build_index, retrieve, IndexError, VectorIndex};
pub use llm::{ChatMessage, ChatRequest, Llm, Role};
pub use merge::{auto_merge, merged_texts};
pub use pipeline::{
    Answer, ChunkMethod, ConfigError, Contexts, PromptBundle, RagConfig, RagError, RagIndex, DEFAULT_TEMPERATURE,
    GERMAN_ONLY,
};
pub use postprocess::postprocess_answer;
pub use rerank::{rerank, Reranked, Reranker, TokenOverlap};
