//! The trained scorer: a logistic capability head over the elementwise
//! product of query and model embeddings, and a softmax length-bucket head
//! over their sum.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PredictorError;

const FORMAT_VERSION: u32 = 1;

/// Fixed-width discretization of output length into `n_buckets` bins.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketConfig {
    pub l_max: u32,
    pub bucket_size: u32,
    pub n_buckets: usize,
}

impl BucketConfig {
    pub fn new(l_max: u32, bucket_size: u32, n_buckets: usize) -> Result<Self, PredictorError> {
        if l_max == 0 || bucket_size == 0 || n_buckets == 0 {
            return Err(PredictorError::Argument(
                "l_max, bucket size and bucket count must be positive".into(),
            ));
        }
        if (n_buckets as u64) * (bucket_size as u64) < l_max as u64 {
            return Err(PredictorError::Argument(format!(
                "{n_buckets} buckets of size {bucket_size} do not cover l_max {l_max}"
            )));
        }
        Ok(BucketConfig {
            l_max,
            bucket_size,
            n_buckets,
        })
    }

    /// `n_buckets` bins of size `ceil(l_max / n_buckets)`.
    pub fn with_bucket_count(l_max: u32, n_buckets: usize) -> Result<Self, PredictorError> {
        if n_buckets == 0 {
            return Err(PredictorError::Argument(
                "bucket count must be positive".into(),
            ));
        }
        Self::new(l_max, l_max.div_ceil(n_buckets as u32), n_buckets)
    }

    /// Bins of `bucket_size`, as many as needed to reach `l_max`.
    pub fn with_bucket_size(l_max: u32, bucket_size: u32) -> Result<Self, PredictorError> {
        if bucket_size == 0 {
            return Err(PredictorError::Argument(
                "bucket size must be positive".into(),
            ));
        }
        Self::new(l_max, bucket_size, l_max.div_ceil(bucket_size) as usize)
    }

    pub fn bucket_of(&self, length: u64) -> usize {
        ((length / self.bucket_size as u64) as usize).min(self.n_buckets - 1)
    }

    /// Representative length of a bucket: its center, capped at `l_max`.
    pub fn bucket_center(&self, idx: usize) -> u32 {
        let center = ((idx as f64 + 0.5) * self.bucket_size as f64).round();
        (center as u32).min(self.l_max)
    }
}

impl Default for BucketConfig {
    fn default() -> Self {
        BucketConfig::with_bucket_count(crate::dataset::DEFAULT_L_MAX, 10)
            .expect("default bucket config is valid")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualHeadModel {
    pub dim: usize,
    /// Capability weights, one per embedding coordinate.
    pub w1: Vec<f64>,
    pub b1: f64,
    /// Length-head weights, row-major `n_buckets x dim`.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub buckets: BucketConfig,
}

#[derive(Serialize, Deserialize)]
struct SavedModel {
    format_version: u32,
    model: DualHeadModel,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    let p = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    // keep the open interval even when the logit saturates
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= sum);
    out
}

/// Index of the largest entry; the lowest index wins ties.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

impl DualHeadModel {
    pub fn zeros(dim: usize, buckets: BucketConfig) -> Self {
        DualHeadModel {
            dim,
            w1: vec![0.0; dim],
            b1: 0.0,
            w2: vec![0.0; buckets.n_buckets * dim],
            b2: vec![0.0; buckets.n_buckets],
            buckets,
        }
    }

    /// Weights drawn uniformly from `[-scale, scale]`, biases zero.
    pub fn random(dim: usize, buckets: BucketConfig, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Self::zeros(dim, buckets);
        if scale > 0.0 {
            m.w1.iter_mut()
                .for_each(|w| *w = rng.gen_range(-scale..=scale));
            m.w2.iter_mut()
                .for_each(|w| *w = rng.gen_range(-scale..=scale));
        }
        m
    }

    pub fn n_buckets(&self) -> usize {
        self.buckets.n_buckets
    }

    pub fn is_finite(&self) -> bool {
        self.b1.is_finite()
            && self
                .w1
                .iter()
                .chain(&self.w2)
                .chain(&self.b2)
                .all(|x| x.is_finite())
    }

    fn check_dims(&self, q: &[f64], l: &[f64]) -> Result<(), PredictorError> {
        for v in [q, l] {
            if v.len() != self.dim {
                return Err(PredictorError::Dimension {
                    expected: self.dim,
                    got: v.len(),
                });
            }
        }
        Ok(())
    }

    pub(crate) fn capability_logit_unchecked(&self, q: &[f64], l: &[f64]) -> f64 {
        let dot: f64 = self
            .w1
            .iter()
            .zip(q.iter().zip(l))
            .map(|(w, (a, b))| w * a * b)
            .sum();
        dot + self.b1
    }

    pub(crate) fn length_logits_unchecked(&self, q: &[f64], l: &[f64]) -> Vec<f64> {
        let x: Vec<f64> = q.iter().zip(l).map(|(a, b)| a + b).collect();
        self.w2
            .chunks_exact(self.dim.max(1))
            .take(self.n_buckets())
            .zip(&self.b2)
            .map(|(row, b)| row.iter().zip(&x).map(|(w, xi)| w * xi).sum::<f64>() + b)
            .collect()
    }

    /// Capability score in (0, 1).
    pub fn predict_capability(&self, q: &[f64], l: &[f64]) -> Result<f64, PredictorError> {
        self.check_dims(q, l)?;
        Ok(sigmoid(self.capability_logit_unchecked(q, l)))
    }

    /// Bucket distribution and the center of its most likely bucket.
    pub fn predict_length(&self, q: &[f64], l: &[f64]) -> Result<(Vec<f64>, u32), PredictorError> {
        self.check_dims(q, l)?;
        let dist = if self.dim == 0 {
            softmax(&self.b2)
        } else {
            softmax(&self.length_logits_unchecked(q, l))
        };
        let len = self.buckets.bucket_center(argmax(&dist));
        Ok((dist, len))
    }

    pub fn save(&self, path: &Path) -> Result<(), PredictorError> {
        let body = serde_json::to_string(&SavedModel {
            format_version: FORMAT_VERSION,
            model: self.clone(),
        })
        .map_err(|e| PredictorError::Format(e.to_string()))?;
        std::fs::write(path, body).map_err(|e| PredictorError::Io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<Self, PredictorError> {
        let body = std::fs::read_to_string(path)
            .map_err(|e| PredictorError::Io(path.display().to_string(), e))?;
        let saved: SavedModel =
            serde_json::from_str(&body).map_err(|e| PredictorError::Format(e.to_string()))?;
        if saved.format_version != FORMAT_VERSION {
            return Err(PredictorError::Format(format!(
                "unsupported model format version {}",
                saved.format_version
            )));
        }
        let m = saved.model;
        if m.w1.len() != m.dim || m.w2.len() != m.dim * m.n_buckets() || m.b2.len() != m.n_buckets()
        {
            return Err(PredictorError::Format(
                "parameter shapes do not match header".into(),
            ));
        }
        BucketConfig::new(m.buckets.l_max, m.buckets.bucket_size, m.buckets.n_buckets)?;
        Ok(m)
    }
}
