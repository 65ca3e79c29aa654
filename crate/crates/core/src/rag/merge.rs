use std::collections::BTreeMap;

use super::chunk::{ChunkId, ChunkTree};

/// Replaces retrieved siblings by their parent once the retrieved share of the
/// parent's children reaches `threshold`, level by level towards the roots.
/// The result keeps retrieval order; a merged chunk takes the best rank of the
/// chunks it replaced.
pub fn auto_merge(retrieved: &[ChunkId], tree: &ChunkTree, threshold: f64) -> Vec<ChunkId> {
    // chunk id -> rank
    let mut selected: BTreeMap<ChunkId, usize> = BTreeMap::new();
    for (rank, id) in retrieved.iter().enumerate() {
        if tree.get(*id).is_some() {
            selected.entry(*id).or_insert(rank);
        }
    }
    for level in (0..tree.depth().saturating_sub(1)).rev() {
        for parent in &tree.levels[level] {
            let children = tree.children(parent.id);
            if children.is_empty() {
                continue;
            }
            let hits = children.iter().filter(|c| selected.contains_key(c)).count();
            if hits == 0 || (hits as f64 / children.len() as f64) < threshold {
                continue;
            }
            let mut rank = selected.get(&parent.id).copied().unwrap_or(usize::MAX);
            selected.retain(|id, r| {
                if tree.is_ancestor(parent.id, *id) {
                    rank = rank.min(*r);
                    false
                } else {
                    true
                }
            });
            selected.insert(parent.id, rank);
        }
    }
    let mut out: Vec<(usize, ChunkId)> = selected.into_iter().map(|(id, r)| (r, id)).collect();
    out.sort();
    out.into_iter().map(|(_, id)| id).collect()
}

pub fn merged_texts(ids: &[ChunkId], tree: &ChunkTree) -> Vec<String> {
    ids.iter().filter_map(|id| tree.get(*id)).map(|c| c.text.clone()).collect()
}
