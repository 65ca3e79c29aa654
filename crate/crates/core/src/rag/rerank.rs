use std::collections::HashSet;

use super::embed::words;
use crate::external::ExternalError;

pub trait Reranker: Send + Sync {
    /// One relevance score per candidate, higher is better.
    fn score(&self, query: &str, candidates: &[String]) -> Result<Vec<f64>, ExternalError>;
}

/// Share of distinct query words that occur in the candidate.
#[derive(Clone, Debug, Default)]
pub struct TokenOverlap;

impl Reranker for TokenOverlap {
    fn score(&self, query: &str, candidates: &[String]) -> Result<Vec<f64>, ExternalError> {
        let q: HashSet<String> = words(query).collect();
        Ok(candidates
            .iter()
            .map(|c| {
                if q.is_empty() {
                    return 0.0;
                }
                let c: HashSet<String> = words(c).collect();
                q.intersection(&c).count() as f64 / q.len() as f64
            })
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reranked {
    /// Positions into the candidate list, best first.
    pub order: Vec<usize>,
    /// Set when the reranker failed and retrieval order was kept.
    pub fallback: bool,
}

/// Top `k` candidates by reranker score, ties by original position.
pub fn rerank(query: &str, candidates: &[String], reranker: &dyn Reranker, k: usize) -> Reranked {
    let k = k.min(candidates.len());
    match reranker.score(query, candidates) {
        Ok(scores) if scores.len() == candidates.len() => {
            let mut order: Vec<usize> = (0..candidates.len()).collect();
            order.sort_by(|a, b| scores[*b].total_cmp(&scores[*a]).then(a.cmp(b)));
            order.truncate(k);
            Reranked { order, fallback: false }
        }
        _ => Reranked {
            order: (0..k).collect(),
            fallback: true,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Failing;
    impl Reranker for Failing {
        fn score(&self, _: &str, _: &[String]) -> Result<Vec<f64>, ExternalError> {
            Err(ExternalError::Timeout)
        }
    }

    struct Flat;
    impl Reranker for Flat {
        fn score(&self, _: &str, c: &[String]) -> Result<Vec<f64>, ExternalError> {
            Ok(vec![1.0; c.len()])
        }
    }

    fn cands(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("kandidat {i}")).collect()
    }

    #[test]
    fn counts() {
        assert_eq!(rerank("q", &cands(12), &TokenOverlap, 6).order.len(), 6);
        assert_eq!(rerank("q", &cands(6), &TokenOverlap, 3).order.len(), 3);
        assert_eq!(rerank("q", &cands(2), &TokenOverlap, 3).order.len(), 2);
    }

    #[test]
    fn identity_scores_keep_prefix() {
        assert_eq!(rerank("q", &cands(5), &Flat, 3).order, vec![0, 1, 2]);
    }

    #[test]
    fn overlap_ordering() {
        let c = vec!["nichts hier".to_string(), "die Anapher am Anfang".to_string()];
        let r = rerank("Was ist eine Anapher?", &c, &TokenOverlap, 2);
        assert_eq!(r.order, vec![1, 0]);
    }

    #[test]
    fn failure_falls_back() {
        let r = rerank("q", &cands(4), &Failing, 2);
        assert_eq!(r, Reranked { order: vec![0, 1], fallback: true });
    }
}
