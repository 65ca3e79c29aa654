use crate::external::ExternalError;

pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;
    /// One vector of length [`dim`](Self::dim) per input text.
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, ExternalError>;

    fn embed_one(&self, text: &str) -> Result<Vec<f32>, ExternalError> {
        self.embed(&[text.to_string()])?
            .pop()
            .ok_or_else(|| ExternalError::BadResponse("empty embedding batch".into()))
    }
}

/// Bag of lowercased words hashed into `dim` buckets, L2-normalized.
#[derive(Clone, Debug)]
pub struct HashedBow {
    dim: usize,
}

impl HashedBow {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        HashedBow { dim }
    }
}

impl Default for HashedBow {
    fn default() -> Self {
        HashedBow::new(256)
    }
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Lowercased words with surrounding punctuation stripped. Tokens made only
/// of punctuation are kept as-is so that no non-blank text embeds to zero.
pub fn words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace().map(|w| {
        let t = w.trim_matches(|c: char| !c.is_alphanumeric());
        if t.is_empty() { w } else { t }.to_lowercase()
    })
}

impl Embedder for HashedBow {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, ExternalError> {
        Ok(texts
            .iter()
            .map(|t| {
                let mut v = vec![0f32; self.dim];
                for w in words(t) {
                    v[(fnv1a(w.as_bytes()) % self.dim as u64) as usize] += 1.0;
                }
                let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
                if norm > 0.0 {
                    v.iter_mut().for_each(|x| *x /= norm);
                }
                v
            })
            .collect())
    }
}

/// Euclidean norm accumulated in f64.
pub fn norm(v: &[f32]) -> f64 {
    v.iter().map(|x| *x as f64 * *x as f64).sum::<f64>().sqrt()
}

pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot(a, b) / (na * nb)
}

pub(crate) fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum()
}
