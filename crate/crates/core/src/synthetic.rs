//! Planted datasets for end-to-end runs without recorded model responses.
//!
//! Each query gets a difficulty band from the mix, a number of correct models
//! inside that band, and a correct set drawn with skill-weighted sampling, so
//! expensive strong models answer hard queries more often. Embeddings carry a
//! noisy copy of the correctness pattern and the difficulty, which both the
//! trained scorer and nearest-neighbor retrieval can pick up.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{
    normalize, Dataset, DatasetError, Difficulty, ModelSpec, QueryRecord, Source, Tier,
    DEFAULT_L_MAX,
};
use crate::money::TokenPrice;

/// Reference price sheet in dollars per million tokens (input, output).
pub const REFERENCE_MODELS: [(&str, f64, f64, Tier); 10] = [
    ("qwen2.5-7b-instruct", 0.267, 0.267, Tier::Weak),
    ("qwen2.5-14b-instruct", 0.534, 0.534, Tier::Weak),
    ("qwen2.5-32b-instruct", 1.22, 1.22, Tier::Weak),
    ("qwen2.5-72b-instruct", 2.745, 2.745, Tier::Strong),
    ("gemma-2-9b-it", 0.343, 0.343, Tier::Weak),
    ("gemma-2-27b-it", 1.03, 1.03, Tier::Weak),
    ("gpt-4o-mini", 0.15, 0.6, Tier::Strong),
    ("gpt-4o", 2.5, 10.0, Tier::Strong),
    ("gemini-1.5-flash", 0.075, 0.3, Tier::Strong),
    ("claude-3-5-sonnet", 3.0, 15.0, Tier::Strong),
];

const SIGNAL_NOISE: f64 = 0.6;
const BACKGROUND_NOISE: f64 = 0.3;
const MIN_DIM: usize = 64;

#[derive(Debug, Error)]
pub enum SyntheticError {
    #[error("need at least two models, got {0}")]
    TooFewModels(usize),
    #[error("difficulty mix must be non-negative with a positive sum, got {0:?}")]
    Mix([f64; 3]),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Target fractions of EASY, MEDIUM and HARD queries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DifficultyMix {
    pub easy: f64,
    pub medium: f64,
    pub hard: f64,
}

impl Default for DifficultyMix {
    fn default() -> Self {
        DifficultyMix {
            easy: 0.784,
            medium: 0.152,
            hard: 0.064,
        }
    }
}

impl DifficultyMix {
    pub fn new(easy: f64, medium: f64, hard: f64) -> Result<Self, SyntheticError> {
        let parts = [easy, medium, hard];
        if parts.iter().any(|p| !p.is_finite() || *p < 0.0) || parts.iter().sum::<f64>() <= 0.0 {
            return Err(SyntheticError::Mix(parts));
        }
        Ok(DifficultyMix { easy, medium, hard })
    }

    /// Per-band query counts summing to `n`, by largest remainder.
    pub fn counts(&self, n: usize) -> [usize; 3] {
        let parts = [self.easy, self.medium, self.hard];
        let total: f64 = parts.iter().sum();
        let exact: Vec<f64> = parts.iter().map(|p| p / total * n as f64).collect();
        let mut counts = [0usize; 3];
        for (c, e) in counts.iter_mut().zip(&exact) {
            *c = e.floor() as usize;
        }
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by(|&a, &b| {
            (exact[b] - exact[b].floor())
                .total_cmp(&(exact[a] - exact[a].floor()))
                .then(a.cmp(&b))
        });
        let short = n - counts.iter().sum::<usize>();
        for &k in order.iter().take(short) {
            counts[k] += 1;
        }
        counts
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_queries: usize,
    pub n_models: usize,
    pub seed: u64,
    pub mix: DifficultyMix,
    pub concurrency_limit: u32,
    pub l_max: u32,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_queries: 1000,
            n_models: REFERENCE_MODELS.len(),
            seed: 0,
            mix: DifficultyMix::default(),
            concurrency_limit: 4,
            l_max: DEFAULT_L_MAX,
        }
    }
}

/// Inclusive range of correct-model counts for a band over `m` models.
pub fn correct_range(difficulty: Difficulty, m: usize) -> (usize, usize) {
    // smallest c with c * 10 >= m * 8, and with c * 10 >= m * 4
    let easy_min = (8 * m).div_ceil(10);
    let medium_min = (4 * m).div_ceil(10);
    match difficulty {
        Difficulty::Easy => (easy_min, m),
        Difficulty::Medium => (medium_min, easy_min.saturating_sub(1).max(medium_min)),
        Difficulty::Hard => (0, medium_min.saturating_sub(1)),
    }
}

fn model_spec(j: usize, dim: usize, n_models: usize, concurrency_limit: u32) -> ModelSpec {
    let (base, price_in, price_out, tier) = REFERENCE_MODELS[j % REFERENCE_MODELS.len()];
    let generation = j / REFERENCE_MODELS.len();
    let id = if generation == 0 {
        base.to_string()
    } else {
        format!("{base}-r{generation}")
    };
    let mut embedding = vec![0.0; dim];
    embedding[j] = 1.0;
    embedding[n_models + 3] = 1.0;
    normalize(&mut embedding);
    ModelSpec {
        name: id.clone(),
        description: format!("synthetic {} model priced like {base}", tier_word(tier)),
        id,
        embedding,
        price_in: TokenPrice::from_dollars_per_million(price_in)
            .expect("reference prices are valid"),
        price_out: TokenPrice::from_dollars_per_million(price_out)
            .expect("reference prices are valid"),
        tier,
        concurrency_limit,
    }
}

fn tier_word(tier: Tier) -> &'static str {
    match tier {
        Tier::Weak => "weak",
        Tier::Strong => "strong",
    }
}

/// Relative chance of a model being among a query's correct set.
fn skill(model: &ModelSpec) -> f64 {
    let tier = match model.tier {
        Tier::Weak => 1.0,
        Tier::Strong => 3.0,
    };
    tier * (1.0 + model.price_out.dollars_per_million().ln_1p())
}

/// `count` distinct indices, each drawn with probability proportional to its weight.
fn weighted_subset(rng: &mut ChaCha8Rng, weights: &[f64], count: usize) -> Vec<usize> {
    let mut keys: Vec<(f64, usize)> = weights
        .iter()
        .enumerate()
        .map(|(j, &w)| (rng.gen::<f64>().powf(1.0 / w), j))
        .collect();
    keys.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    keys.into_iter().take(count).map(|(_, j)| j).collect()
}

fn length_range(difficulty: Difficulty) -> (u64, u64) {
    match difficulty {
        Difficulty::Easy => (8, 60),
        Difficulty::Medium => (30, 160),
        Difficulty::Hard => (80, 400),
    }
}

pub fn gen_synthetic(config: &SyntheticConfig) -> Result<Dataset, SyntheticError> {
    let m = config.n_models;
    if m < 2 {
        return Err(SyntheticError::TooFewModels(m));
    }
    let dim = MIN_DIM.max(m + 4 + 16);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let models: Vec<ModelSpec> = (0..m)
        .map(|j| model_spec(j, dim, m, config.concurrency_limit))
        .collect();
    let weights: Vec<f64> = models.iter().map(skill).collect();
    let verbosity: Vec<f64> = models.iter().map(|_| rng.gen_range(0.8..1.3)).collect();

    let counts = config.mix.counts(config.n_queries);
    let mut bands: Vec<Difficulty> = Difficulty::ALL
        .iter()
        .zip(counts)
        .flat_map(|(&d, c)| std::iter::repeat_n(d, c))
        .collect();
    bands.shuffle(&mut rng);

    let signal = Normal::new(0.0, SIGNAL_NOISE).expect("positive deviation");
    let background = Normal::new(0.0, BACKGROUND_NOISE).expect("positive deviation");
    let l_max = config.l_max.max(1) as u64;
    let mut queries = Vec::with_capacity(config.n_queries);
    for (i, &difficulty) in bands.iter().enumerate() {
        let (lo, hi) = correct_range(difficulty, m);
        let count = rng.gen_range(lo..=hi);
        let correct = weighted_subset(&mut rng, &weights, count);
        let (len_lo, len_hi) = length_range(difficulty);
        let base_len = rng.gen_range(len_lo..=len_hi) as f64;

        let mut correctness = BTreeMap::new();
        let mut out_tokens = BTreeMap::new();
        let mut embedding = vec![0.0; dim];
        for (j, model) in models.iter().enumerate() {
            let ok = correct.contains(&j);
            correctness.insert(model.id.clone(), u8::from(ok));
            let jitter = rng.gen_range(0.85..1.15);
            let len = (base_len * verbosity[j] * jitter).round() as u64;
            out_tokens.insert(model.id.clone(), len.clamp(1, l_max));
            embedding[j] = if ok { 1.0 } else { -1.0 } + signal.sample(&mut rng);
        }
        embedding[m + difficulty.index()] = 1.0;
        embedding[m + 3] = 1.0;
        for v in embedding.iter_mut().skip(m + 4) {
            *v = background.sample(&mut rng);
        }
        normalize(&mut embedding);
        queries.push(QueryRecord {
            id: format!("syn-{i:05}"),
            text: format!(
                "synthetic {} query number {i}",
                difficulty.to_string().to_lowercase()
            ),
            source: Source::Synthetic,
            in_tokens: rng.gen_range(20..=200),
            correctness,
            out_tokens,
            embedding,
        });
    }
    Ok(Dataset::new(queries, models, config.l_max)?)
}
