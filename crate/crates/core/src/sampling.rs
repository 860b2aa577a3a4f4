//! Proximity-biased minimal-subset sampling of model hypotheses.
//!
//! The first member of every subset is drawn uniformly. Each further member is
//! drawn without replacement with probability proportional to
//! `exp(-d² / σ²)`, where `d` is its distance to the first member. The
//! generator is ChaCha8 seeded from a single `u64`, so a pool is a pure
//! function of `(data, kind, config)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::DataSet;
use crate::error::SampleError;
use crate::model::{fit_minimal, ModelKind, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub hypothesis_count: usize,
    /// Proximity kernel width in scene units; `None` selects 10% of the
    /// bounding-box diagonal of the data.
    pub proximity_sigma: Option<f64>,
    pub rng_seed: u64,
    pub max_retries_per_hypothesis: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { hypothesis_count: 5000, proximity_sigma: None, rng_seed: 0, max_retries_per_hypothesis: 100 }
    }
}

impl SamplerConfig {
    pub fn effective_sigma(&self, data: &DataSet) -> f64 {
        match self.proximity_sigma {
            Some(s) => s,
            None => {
                let d = 0.1 * data.bounding_box_diagonal();
                if d > 0.0 {
                    d
                } else {
                    1.0
                }
            }
        }
    }
}

/// One sampled hypothesis with the indices of the subset that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub params: ModelParams,
    pub subset: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisPool {
    pub hypotheses: Vec<Hypothesis>,
    /// Hypothesis slots abandoned after `max_retries_per_hypothesis` degenerate draws.
    pub skipped: usize,
    /// Total degenerate draws, retried or not.
    pub degenerate_draws: usize,
}

impl HypothesisPool {
    pub fn params(&self) -> Vec<ModelParams> {
        self.hypotheses.iter().map(|h| h.params).collect()
    }
}

/// Samples `hypothesis_count` model hypotheses.
///
/// A degenerate draw is retried; a slot whose retries are exhausted is
/// skipped and counted. For the fundamental matrix every real solution of a
/// seven-point subset becomes a separate hypothesis, and the pool is truncated
/// to the requested count.
pub fn sample_hypotheses(
    data: &DataSet,
    kind: ModelKind,
    cfg: &SamplerConfig,
) -> Result<HypothesisPool, SampleError> {
    let m = kind.minimal_subset_size();
    if data.len() < m {
        return Err(SampleError::InsufficientData { kind, needed: m, available: data.len() });
    }
    if data.dim() != kind.dimension() {
        return Err(crate::error::ModelError::Dimension {
            kind,
            expected: kind.dimension(),
            found: data.dim(),
        }
        .into());
    }
    if cfg.hypothesis_count == 0 {
        return Err(SampleError::InvalidConfig("hypothesis_count must be at least 1"));
    }
    if cfg.max_retries_per_hypothesis == 0 {
        return Err(SampleError::InvalidConfig("max_retries_per_hypothesis must be at least 1"));
    }
    let sigma = cfg.effective_sigma(data);
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(SampleError::InvalidConfig("proximity_sigma must be positive"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let inv_sigma2 = 1.0 / (sigma * sigma);
    let n = data.len();
    let mut weights = vec![0.0; n];
    let mut subset = Vec::with_capacity(m);
    let mut hypotheses = Vec::with_capacity(cfg.hypothesis_count);
    let mut skipped = 0;
    let mut degenerate_draws = 0;

    while hypotheses.len() < cfg.hypothesis_count {
        let mut produced = false;
        for _ in 0..cfg.max_retries_per_hypothesis {
            draw_subset(data, m, inv_sigma2, &mut rng, &mut weights, &mut subset);
            let points: Vec<&[f64]> = subset.iter().map(|&i| data.point(i)).collect();
            match fit_minimal(kind, &points) {
                Ok(solutions) => {
                    for params in solutions {
                        if hypotheses.len() < cfg.hypothesis_count {
                            hypotheses.push(Hypothesis { params, subset: subset.clone() });
                        }
                    }
                    produced = true;
                    break;
                }
                Err(_) => degenerate_draws += 1,
            }
        }
        if !produced {
            skipped += 1;
            if 2 * skipped > cfg.hypothesis_count {
                return Err(SampleError::TooManyDegenerate { skipped, requested: cfg.hypothesis_count });
            }
        }
    }
    Ok(HypothesisPool { hypotheses, skipped, degenerate_draws })
}

fn draw_subset(
    data: &DataSet,
    m: usize,
    inv_sigma2: f64,
    rng: &mut ChaCha8Rng,
    weights: &mut [f64],
    subset: &mut Vec<usize>,
) {
    let n = data.len();
    subset.clear();
    let first = rng.random_range(0..n);
    subset.push(first);
    if m == 1 {
        return;
    }
    let anchor = data.point(first);
    for (w, p) in weights.iter_mut().zip(data.points()) {
        let d2: f64 = p.iter().zip(anchor).map(|(a, b)| (a - b) * (a - b)).sum();
        *w = (-d2 * inv_sigma2).exp();
    }
    weights[first] = 0.0;
    while subset.len() < m {
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, w) in weights.iter().enumerate() {
                if *w > 0.0 {
                    acc += w;
                    chosen = Some(i);
                    if acc > target {
                        break;
                    }
                }
            }
            chosen.expect("positive total weight")
        } else {
            // Every remaining point underflowed: fall back to a uniform draw.
            let remaining: Vec<usize> = (0..n).filter(|i| !subset.contains(i)).collect();
            remaining[rng.random_range(0..remaining.len())]
        };
        weights[pick] = 0.0;
        subset.push(pick);
    }
}
