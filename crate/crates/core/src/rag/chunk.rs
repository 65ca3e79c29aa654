//! Whitespace-token chunking, flat and hierarchical.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type ChunkId = u64;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub id: ChunkId,
    pub text: String,
    /// 0 for leaves, increasing towards the roots.
    pub level: u32,
    pub parent_id: Option<ChunkId>,
    /// Half-open token range in the source document.
    pub span: (usize, usize),
}

impl Chunk {
    pub fn token_count(&self) -> usize {
        self.span.1 - self.span.0
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChunkError {
    #[error("chunk size must be at least 1")]
    ZeroSize,
    #[error("chunk sizes must be strictly decreasing, got {0:?}")]
    NotDecreasing(Vec<usize>),
    #[error("no chunk sizes given")]
    NoSizes,
}

pub fn tokens(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

fn windows(range: (usize, usize), size: usize) -> impl Iterator<Item = (usize, usize)> {
    let (start, end) = range;
    (start..end).step_by(size).map(move |s| (s, (s + size).min(end)))
}

/// Consecutive windows of at most `size` tokens, no overlap.
pub fn chunk_basic(text: &str, size: usize) -> Result<Vec<Chunk>, ChunkError> {
    Ok(ChunkTree::build(text, &[size])?.levels.pop().unwrap_or_default())
}

/// Convenience wrapper over [`ChunkTree::build`] that insists on two or more
/// levels.
pub fn chunk_hierarchical(text: &str, sizes: &[usize]) -> Result<ChunkTree, ChunkError> {
    if sizes.len() < 2 {
        return Err(ChunkError::NotDecreasing(sizes.to_vec()));
    }
    ChunkTree::build(text, sizes)
}

/// Chunk hierarchy; `levels[0]` holds the largest chunks, the last level the
/// leaves. A single level is the flat case.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "RawTree", into = "RawTree")]
pub struct ChunkTree {
    pub levels: Vec<Vec<Chunk>>,
    pub sizes: Vec<usize>,
    position: HashMap<ChunkId, (usize, usize)>,
    children: HashMap<ChunkId, Vec<ChunkId>>,
}

#[derive(Serialize, Deserialize)]
struct RawTree {
    sizes: Vec<usize>,
    levels: Vec<Vec<Chunk>>,
}

impl From<RawTree> for ChunkTree {
    fn from(raw: RawTree) -> Self {
        ChunkTree::from_levels(raw.levels, raw.sizes)
    }
}

impl From<ChunkTree> for RawTree {
    fn from(tree: ChunkTree) -> Self {
        RawTree {
            sizes: tree.sizes,
            levels: tree.levels,
        }
    }
}

impl ChunkTree {
    pub fn build(text: &str, sizes: &[usize]) -> Result<Self, ChunkError> {
        if sizes.is_empty() {
            return Err(ChunkError::NoSizes);
        }
        if sizes.contains(&0) {
            return Err(ChunkError::ZeroSize);
        }
        if sizes.windows(2).any(|w| w[0] <= w[1]) {
            return Err(ChunkError::NotDecreasing(sizes.to_vec()));
        }
        let toks = tokens(text);
        let depth = sizes.len();
        let mut next_id: ChunkId = 0;
        let mut make = |span: (usize, usize), level: usize, parent: Option<ChunkId>| {
            let c = Chunk {
                id: next_id,
                text: toks[span.0..span.1].join(" "),
                level: (depth - 1 - level) as u32,
                parent_id: parent,
                span,
            };
            next_id += 1;
            c
        };
        let mut levels: Vec<Vec<Chunk>> = Vec::with_capacity(depth);
        let roots: Vec<Chunk> = windows((0, toks.len()), sizes[0])
            .map(|span| make(span, 0, None))
            .collect();
        levels.push(roots);
        for (level, &size) in sizes.iter().enumerate().skip(1) {
            let parents: Vec<(ChunkId, (usize, usize))> = levels[level - 1].iter().map(|p| (p.id, p.span)).collect();
            let next: Vec<Chunk> = parents
                .into_iter()
                .flat_map(|(pid, span)| windows(span, size).map(move |s| (pid, s)))
                .map(|(pid, span)| make(span, level, Some(pid)))
                .collect();
            levels.push(next);
        }
        Ok(ChunkTree::from_levels(levels, sizes.to_vec()))
    }

    fn from_levels(levels: Vec<Vec<Chunk>>, sizes: Vec<usize>) -> Self {
        let mut position = HashMap::new();
        let mut children: HashMap<ChunkId, Vec<ChunkId>> = HashMap::new();
        for (l, level) in levels.iter().enumerate() {
            for (i, c) in level.iter().enumerate() {
                position.insert(c.id, (l, i));
                if let Some(p) = c.parent_id {
                    children.entry(p).or_default().push(c.id);
                }
            }
        }
        ChunkTree {
            levels,
            sizes,
            position,
            children,
        }
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn leaves(&self) -> &[Chunk] {
        self.levels.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn get(&self, id: ChunkId) -> Option<&Chunk> {
        self.position.get(&id).map(|&(l, i)| &self.levels[l][i])
    }

    /// Index into `levels` of the chunk's level.
    pub fn level_index(&self, id: ChunkId) -> Option<usize> {
        self.position.get(&id).map(|&(l, _)| l)
    }

    pub fn children(&self, id: ChunkId) -> &[ChunkId] {
        self.children.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn parent(&self, id: ChunkId) -> Option<&Chunk> {
        self.get(id)?.parent_id.and_then(|p| self.get(p))
    }

    pub fn is_ancestor(&self, ancestor: ChunkId, mut id: ChunkId) -> bool {
        while let Some(p) = self.get(id).and_then(|c| c.parent_id) {
            if p == ancestor {
                return true;
            }
            id = p;
        }
        false
    }

    pub fn len(&self) -> usize {
        self.position.len()
    }

    pub fn is_empty(&self) -> bool {
        self.position.is_empty()
    }
}
