//! Synthetic candidate-model pools with known ground truth.
//!
//! Every query gets a latent topic vector; its relevant document shares
//! that latent, and the irrelevant candidates are other queries' documents
//! with independent latents. Model `i` embeds an item as
//! `(latent + σ_i·noise)·A_i + a·m_i`, where `A_i = I + a·G_i` and `m_i`
//! is a random offset, so noisier models rank worse and the distortion
//! `a` entangles dimensions the way anisotropic encoders do. Ground truth
//! is `T_i = 1/(1 + σ_i)`.

use serde::{Deserialize, Serialize};

use crate::data::{
    sample_candidates, EmbeddingMatrix, ModelPoolTruth, RankingDataset, TruthEntry, DEFAULT_MAX_QUERIES,
};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, Prng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub model_count: usize,
    pub query_count: usize,
    pub candidate_size: usize,
    pub dim: usize,
    /// One noise level per model, strictly increasing.
    pub noise_levels: Vec<f64>,
    pub anisotropy_strength: f64,
    pub seed: u64,
    /// Trailing latent dimensions in which every query and document draws
    /// its own value, so they carry no relevance signal. Zero by default.
    #[serde(default)]
    pub nuisance_dims: usize,
    /// Standard deviation of the nuisance latents.
    #[serde(default = "default_nuisance_scale")]
    pub nuisance_scale: f64,
}

fn default_nuisance_scale() -> f64 {
    3.0
}

impl SynthConfig {
    /// Noise levels spaced geometrically from `sigma_min` to `sigma_max`.
    pub fn geometric(
        model_count: usize,
        query_count: usize,
        candidate_size: usize,
        dim: usize,
        (sigma_min, sigma_max): (f64, f64),
        anisotropy_strength: f64,
        seed: u64,
    ) -> Self {
        let ratio = if model_count > 1 {
            (sigma_max / sigma_min).powf(1.0 / (model_count - 1) as f64)
        } else {
            1.0
        };
        SynthConfig {
            model_count,
            query_count,
            candidate_size,
            dim,
            noise_levels: (0..model_count).map(|i| sigma_min * ratio.powi(i as i32)).collect(),
            anisotropy_strength,
            seed,
            nuisance_dims: 0,
            nuisance_scale: default_nuisance_scale(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.model_count < 2 {
            return Err(Error::Config(format!(
                "need at least 2 models, got {}",
                self.model_count
            )));
        }
        if self.noise_levels.len() != self.model_count {
            return Err(Error::Config(format!(
                "{} noise levels for {} models",
                self.noise_levels.len(),
                self.model_count
            )));
        }
        if self.noise_levels.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::Config("noise levels must be finite and non-negative".into()));
        }
        if self.noise_levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("noise levels must be strictly increasing".into()));
        }
        if !(self.anisotropy_strength.is_finite() && self.anisotropy_strength >= 0.0) {
            return Err(Error::Config(
                "anisotropy strength must be finite and non-negative".into(),
            ));
        }
        if self.dim == 0 {
            return Err(Error::Config("dim must be positive".into()));
        }
        if !(self.nuisance_scale.is_finite() && self.nuisance_scale > 0.0) {
            return Err(Error::Config("nuisance scale must be positive".into()));
        }
        if self.nuisance_dims >= self.dim {
            return Err(Error::Config(format!(
                "{} nuisance dims leave no signal in {} dims",
                self.nuisance_dims, self.dim
            )));
        }
        if self.candidate_size < 2 {
            return Err(Error::Config("candidate size must be at least 2".into()));
        }
        if self.query_count < self.candidate_size {
            return Err(Error::Config(format!(
                "{} queries cannot supply candidate groups of size {}",
                self.query_count, self.candidate_size
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthModel {
    pub id: String,
    pub noise: f64,
    pub queries: EmbeddingMatrix,
    pub docs: EmbeddingMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthPool {
    pub models: Vec<SynthModel>,
    pub dataset: RankingDataset,
    pub truth: ModelPoolTruth,
    /// Query `i` is relevant to document `i`.
    pub relevant_pairs: Vec<(usize, usize)>,
}

pub fn model_id(index: usize) -> String {
    format!("model-{index:02}")
}

fn gaussian_matrix(rng: &mut Prng, rows: usize, cols: usize) -> Vec<f64> {
    (0..rows * cols).map(|_| rng.gaussian()).collect()
}

// Stream ids for derived seeds.
const LATENT_STREAM: u64 = 0;
const SAMPLING_STREAM: u64 = 1;
const MODEL_STREAM_BASE: u64 = 2;

/// Generates embeddings for every model, one shared candidate dataset,
/// and the ground truth. Deterministic in `config`.
pub fn generate_pool(config: &SynthConfig) -> Result<SynthPool> {
    config.validate()?;
    let (q, d) = (config.query_count, config.dim);
    let a = config.anisotropy_strength;

    let mut latent_rng = Prng::substream(config.seed, LATENT_STREAM);
    let mut query_latents = gaussian_matrix(&mut latent_rng, q, d);
    let mut doc_latents = query_latents.clone();
    let signal_dims = d - config.nuisance_dims;
    for r in 0..q {
        for c in signal_dims..d {
            query_latents[r * d + c] *= config.nuisance_scale;
            doc_latents[r * d + c] = config.nuisance_scale * latent_rng.gaussian();
        }
    }

    let relevant_pairs: Vec<(usize, usize)> = (0..q).map(|i| (i, i)).collect();
    let dataset = sample_candidates(
        &relevant_pairs,
        q,
        config.candidate_size,
        derive_seed(config.seed, SAMPLING_STREAM),
        Some(DEFAULT_MAX_QUERIES),
    )?;

    let mut models = Vec::with_capacity(config.model_count);
    for (i, &sigma) in config.noise_levels.iter().enumerate() {
        let mut rng = Prng::substream(config.seed, MODEL_STREAM_BASE + i as u64);
        let mut mixing = gaussian_matrix(&mut rng, d, d);
        for (idx, x) in mixing.iter_mut().enumerate() {
            *x *= a;
            if idx / d == idx % d {
                *x += 1.0;
            }
        }
        // Per-coordinate spread D: the shift dominates the item spread, so
        // raw embeddings of unrelated items are highly cosine-similar.
        let offset: Vec<f64> = (0..d).map(|_| a * d as f64 * rng.gaussian()).collect();
        let embed = |rng: &mut Prng, latents: &[f64]| -> Result<EmbeddingMatrix> {
            let mut values = Vec::with_capacity(q * d);
            let mut noisy = vec![0.0; d];
            for r in 0..q {
                for (c, x) in noisy.iter_mut().enumerate() {
                    *x = latents[r * d + c] + sigma * rng.gaussian();
                }
                for c in 0..d {
                    let mixed: f64 = (0..d).map(|k| noisy[k] * mixing[k * d + c]).sum();
                    values.push((mixed + offset[c]) as f32);
                }
            }
            EmbeddingMatrix::new(q, d, values)
        };
        let queries = embed(&mut rng, &query_latents)?;
        let docs = embed(&mut rng, &doc_latents)?;
        models.push(SynthModel {
            id: model_id(i),
            noise: sigma,
            queries,
            docs,
        });
    }

    let truth = ModelPoolTruth::new(
        models
            .iter()
            .map(|m| TruthEntry {
                id: m.id.clone(),
                score: 1.0 / (1.0 + m.noise),
            })
            .collect(),
    )?;
    Ok(SynthPool {
        models,
        dataset,
        truth,
        relevant_pairs,
    })
}
