//! Synthetic embeddings with planted binary structure.

use std::collections::HashSet;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::linalg::random_orthogonal;
use crate::matrix::RowMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Training points per class.
    pub n_per_class: usize,
    pub query_per_class: usize,
    pub database_per_class: usize,
    pub num_classes: usize,
    /// Embedding width and code length.
    pub k: usize,
    pub noise_sigma: f64,
    pub planted_rotation_seed: u64,
    pub sample_seed: u64,
}

impl SynthConfig {
    /// Query split is an eighth of the training split (at least one point
    /// per class) and the database four times the query split. Both seeds
    /// derive from `seed`.
    pub fn new(n_per_class: usize, num_classes: usize, k: usize, noise_sigma: f64, seed: u64) -> Self {
        let query_per_class = (n_per_class / 8).max(1);
        Self {
            n_per_class,
            query_per_class,
            database_per_class: 4 * query_per_class,
            num_classes,
            k,
            noise_sigma,
            planted_rotation_seed: seed,
            sample_seed: seed.wrapping_add(1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be positive".into()));
        }
        if self.num_classes == 0 || self.n_per_class == 0 {
            return Err(Error::InvalidConfig("need at least one class and one point per class".into()));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::InvalidConfig(format!("noise sigma must be finite and >= 0, got {}", self.noise_sigma)));
        }
        if self.k < usize::BITS as usize && self.num_classes > 1usize << self.k {
            return Err(Error::TooManyClasses {
                classes: self.num_classes,
                bits: self.k,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub train: EmbeddingSet,
    pub query: EmbeddingSet,
    pub database: EmbeddingSet,
    /// Class centers in `{-1, +1}^k`, before rotation.
    pub centers: Vec<Vec<f64>>,
    /// Planted orthogonal `Q`; points are `Q (center + noise)`.
    pub rotation: DMatrix<f64>,
}

/// Draws the planted rotation from `cfg.planted_rotation_seed` and samples
/// the three splits.
pub fn generate_rotated_hypercube(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let q = random_orthogonal(cfg.k, cfg.planted_rotation_seed);
    generate_with_rotation(cfg, q)
}

/// Like [`generate_rotated_hypercube`] with an explicit rotation.
pub fn generate_with_rotation(cfg: &SynthConfig, rotation: DMatrix<f64>) -> Result<SynthData> {
    cfg.validate()?;
    let k = cfg.k;
    if rotation.nrows() != k || rotation.ncols() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: rotation.nrows(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.sample_seed);
    let mut seen = HashSet::with_capacity(cfg.num_classes);
    let mut centers = Vec::with_capacity(cfg.num_classes);
    while centers.len() < cfg.num_classes {
        let c: Vec<bool> = (0..k).map(|_| rng.random::<bool>()).collect();
        if seen.insert(c.clone()) {
            centers.push(c.into_iter().map(|b| if b { 1.0 } else { -1.0 }).collect::<Vec<f64>>());
        }
    }

    let mut split = |per_class: usize| -> Result<EmbeddingSet> {
        let n = per_class * cfg.num_classes;
        let mut data = RowMatrix::zeros(n, k);
        let mut labels = Vec::with_capacity(n);
        let mut y = vec![0.0; k];
        let mut row = 0;
        for (class, center) in centers.iter().enumerate() {
            for _ in 0..per_class {
                for (yj, cj) in y.iter_mut().zip(center) {
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    *yj = cj + cfg.noise_sigma * noise;
                }
                let out = data.row_mut(row);
                for (r, o) in out.iter_mut().enumerate() {
                    *o = (0..k).map(|c| rotation[(r, c)] * y[c]).sum();
                }
                labels.push(vec![class as u32]);
                row += 1;
            }
        }
        EmbeddingSet::with_labels(data, labels)
    };
    let train = split(cfg.n_per_class)?;
    let query = split(cfg.query_per_class)?;
    let database = split(cfg.database_per_class)?;
    Ok(SynthData {
        train,
        query,
        database,
        centers,
        rotation,
    })
}
