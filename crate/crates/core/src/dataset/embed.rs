use std::collections::HashMap;

use super::DatasetError;

pub const DEFAULT_EMBEDDING_DIM: usize = 256;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(parts: &[&[u8]]) -> u64 {
    let mut hash = FNV_OFFSET;
    for part in parts {
        for &b in *part {
            hash ^= b as u64;
            hash = hash.wrapping_mul(FNV_PRIME);
        }
        // separator so ("ab","c") and ("a","bc") differ
        hash ^= 0xff;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    // final avalanche; FNV's low bits are weak for modulo bucketing
    hash ^= hash >> 33;
    hash = hash.wrapping_mul(0xff51_afd7_ed55_8ccd);
    hash ^= hash >> 33;
    hash
}

/// Scales `v` to unit L2 norm. Returns `false` (leaving `v` untouched) for a zero vector.
pub fn normalize(v: &mut [f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}

/// Deterministic feature-hashing embedder over word unigrams and bigrams.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HashedEmbedder {
    pub dim: usize,
}

impl Default for HashedEmbedder {
    fn default() -> Self {
        HashedEmbedder {
            dim: DEFAULT_EMBEDDING_DIM,
        }
    }
}

impl HashedEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        HashedEmbedder { dim }
    }

    pub fn embed(&self, text: &str) -> Vec<f64> {
        let lowered = text.to_lowercase();
        let tokens: Vec<&str> = lowered
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .collect();
        let mut v = vec![0.0; self.dim];
        let mut add = |h: u64| {
            let bucket = (h % self.dim as u64) as usize;
            let sign = if (h >> 63) & 1 == 1 { -1.0 } else { 1.0 };
            v[bucket] += sign;
        };
        if tokens.is_empty() {
            add(fnv1a(&[b"e", lowered.trim().as_bytes()]));
        }
        for t in &tokens {
            add(fnv1a(&[b"u", t.as_bytes()]));
        }
        for pair in tokens.windows(2) {
            add(fnv1a(&[b"b", pair[0].as_bytes(), pair[1].as_bytes()]));
        }
        if !normalize(&mut v) {
            // every feature cancelled out; fall back to a single signed bucket
            let h = fnv1a(&[b"f", lowered.as_bytes()]);
            v[(h % self.dim as u64) as usize] = 1.0;
        }
        v
    }
}

/// Source of embedding vectors for queries and model descriptions.
#[derive(Clone, Debug)]
pub enum EmbeddingProvider {
    /// Vectors looked up by record id.
    Precomputed(HashMap<String, Vec<f64>>),
    Hashed(HashedEmbedder),
}

impl EmbeddingProvider {
    /// Embeds a record. `id` is used by the precomputed table, `text` by the hasher.
    pub fn embed(&self, id: &str, text: &str) -> Result<Vec<f64>, DatasetError> {
        match self {
            EmbeddingProvider::Precomputed(table) => {
                let mut v = table
                    .get(id)
                    .cloned()
                    .ok_or_else(|| DatasetError::Lookup(id.to_string()))?;
                if !normalize(&mut v) {
                    return Err(DatasetError::Schema(format!(
                        "embedding for `{id}` is zero"
                    )));
                }
                Ok(v)
            }
            EmbeddingProvider::Hashed(h) => Ok(h.embed(text)),
        }
    }
}
