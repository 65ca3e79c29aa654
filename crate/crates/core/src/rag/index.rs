//! Exact cosine top-k over an in-memory vector list, persisted to one file.
//!
//! File layout, little-endian: magic `FGVX`, format version (u32), dim (u32),
//! count (u64), then `count` records of `len: u32` followed by `len` bytes
//! holding the chunk id (u64) and `dim` f32 values.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};
use std::path::Path;

use thiserror::Error;

use super::chunk::{Chunk, ChunkId};
use super::embed::{dot, norm, Embedder};
use crate::external::ExternalError;

const MAGIC: &[u8; 4] = b"FGVX";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("vector has dimension {got}, index expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("chunk id {0} is already indexed")]
    DuplicateId(ChunkId),
    #[error("embedding failed: {0}")]
    Embedder(#[from] ExternalError),
    #[error("embedder returned {got} vectors for {expected} texts")]
    BatchSize { expected: usize, got: usize },
    #[error("corrupt index file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorIndex {
    dim: usize,
    ids: Vec<ChunkId>,
    vectors: Vec<Vec<f32>>,
    norms: Vec<f64>,
    seen: HashSet<ChunkId>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Ranked {
    score: f64,
    id: ChunkId,
}

impl Eq for Ranked {}

impl Ord for Ranked {
    /// Greater is better: higher score, then lower id.
    fn cmp(&self, other: &Self) -> Ordering {
        self.score.total_cmp(&other.score).then(other.id.cmp(&self.id))
    }
}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl VectorIndex {
    pub fn new(dim: usize) -> Self {
        VectorIndex {
            dim,
            ids: Vec::new(),
            vectors: Vec::new(),
            norms: Vec::new(),
            seen: HashSet::new(),
        }
    }

    pub fn insert(&mut self, id: ChunkId, vector: Vec<f32>) -> Result<(), IndexError> {
        if vector.len() != self.dim {
            return Err(IndexError::Dimension {
                expected: self.dim,
                got: vector.len(),
            });
        }
        if !self.seen.insert(id) {
            return Err(IndexError::DuplicateId(id));
        }
        self.ids.push(id);
        self.norms.push(norm(&vector));
        self.vectors.push(vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (ChunkId, &[f32])> {
        self.ids.iter().copied().zip(self.vectors.iter().map(Vec::as_slice))
    }

    /// Exact top-`k` by cosine similarity, ties broken by ascending id.
    pub fn search(&self, query: &[f32], k: usize) -> Vec<(ChunkId, f64)> {
        if k == 0 || query.len() != self.dim {
            return Vec::new();
        }
        let qn = norm(query);
        let mut heap: BinaryHeap<Reverse<Ranked>> = BinaryHeap::with_capacity(k + 1);
        for ((id, v), n) in self.ids.iter().zip(&self.vectors).zip(&self.norms) {
            let score = if *n == 0.0 || qn == 0.0 { 0.0 } else { dot(v, query) / (n * qn) };
            heap.push(Reverse(Ranked { score, id: *id }));
            if heap.len() > k {
                heap.pop();
            }
        }
        heap.into_sorted_vec().into_iter().map(|Reverse(r)| (r.id, r.score)).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let record = 8 + 4 * self.dim;
        let mut out = Vec::with_capacity(20 + self.len() * (4 + record));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for (id, v) in self.entries() {
            out.extend_from_slice(&(record as u32).to_le_bytes());
            out.extend_from_slice(&id.to_le_bytes());
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IndexError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(IndexError::Format("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(IndexError::Format(format!("unsupported version {version}")));
        }
        let dim = r.u32()? as usize;
        let count = r.u64()?;
        let mut index = VectorIndex::new(dim);
        for _ in 0..count {
            let len = r.u32()? as usize;
            if len != 8 + 4 * dim {
                return Err(IndexError::Format(format!("record length {len} for dim {dim}")));
            }
            let id = r.u64()?;
            let v = r
                .take(4 * dim)?
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
                .collect();
            index.insert(id, v)?;
        }
        if r.pos != bytes.len() {
            return Err(IndexError::Format("trailing bytes".into()));
        }
        Ok(index)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), IndexError> {
        Ok(std::fs::write(path, self.to_bytes())?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IndexError> {
        VectorIndex::from_bytes(&std::fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| IndexError::Format("truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, IndexError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, IndexError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Embeds every chunk in one batch. Nothing is returned on failure.
pub fn build_index(chunks: &[Chunk], embedder: &dyn Embedder) -> Result<VectorIndex, IndexError> {
    let texts: Vec<String> = chunks.iter().map(|c| c.text.clone()).collect();
    let vectors = if texts.is_empty() { Vec::new() } else { embedder.embed(&texts)? };
    if vectors.len() != chunks.len() {
        return Err(IndexError::BatchSize {
            expected: chunks.len(),
            got: vectors.len(),
        });
    }
    let mut index = VectorIndex::new(embedder.dim());
    for (c, v) in chunks.iter().zip(vectors) {
        index.insert(c.id, v)?;
    }
    Ok(index)
}

pub fn retrieve(
    index: &VectorIndex,
    query: &str,
    k: usize,
    embedder: &dyn Embedder,
) -> Result<Vec<(ChunkId, f64)>, IndexError> {
    if index.is_empty() {
        return Ok(Vec::new());
    }
    Ok(index.search(&embedder.embed_one(query)?, k))
}
