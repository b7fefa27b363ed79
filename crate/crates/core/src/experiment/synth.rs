//! Two-class synthetic datasets of noisy low-rank matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::classifier::LabeledSample;
use crate::linalg::Matrix;
use crate::{Error, Result};

use super::manifest::Split;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub rows: usize,
    pub cols: usize,
    /// Latent rank of every clean matrix.
    pub rank: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    /// Standard deviation of the additive Gaussian noise.
    pub noise: f64,
    /// Spread of the per-sample mixing coefficients around the identity.
    pub spread: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            rows: 10,
            cols: 8,
            rank: 2,
            train_per_class: 50,
            test_per_class: 50,
            noise: 0.1,
            spread: 0.5,
            seed: 0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::param("rows and cols must be positive"));
        }
        if self.rank == 0 || self.rank > self.rows.min(self.cols) {
            return Err(Error::param(format!(
                "rank must be in 1..={}, got {}",
                self.rows.min(self.cols),
                self.rank
            )));
        }
        if self.train_per_class + self.test_per_class == 0 {
            return Err(Error::param("no samples requested"));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite() && self.spread >= 0.0) {
            return Err(Error::param("noise and spread must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthSample {
    /// Noise-free rank-`r` matrix.
    pub clean: Matrix,
    pub sample: LabeledSample,
    pub split: Split,
}

/// Each class `c` owns factors `U_c` (m×r) and `V_c` (n×r); a sample is
/// `U_c·G·V_cᵀ + σN` with `G = I + spread·N(0,1)`. Train samples come
/// first, classes alternate `+1, −1` within each split.
pub fn generate(p: &SynthParams) -> Result<Vec<SynthSample>> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let norm = 1.0 / (p.rank as f64).sqrt();
    let mut factors = Vec::new();
    for _ in 0..2 {
        let u = gaussian(p.rows, p.rank, &mut rng);
        let v = gaussian(p.cols, p.rank, &mut rng);
        factors.push((u, v));
    }
    let mut out = Vec::with_capacity(2 * (p.train_per_class + p.test_per_class));
    for (split, per_class) in [(Split::Train, p.train_per_class), (Split::Test, p.test_per_class)] {
        for _ in 0..per_class {
            for (class, (u, v)) in factors.iter().enumerate() {
                let mut g = gaussian(p.rank, p.rank, &mut rng) * p.spread;
                g += &Matrix::eye(p.rank);
                let clean = u.dot(&g).dot(&v.t()) * norm;
                let noisy = &clean + &(gaussian(p.rows, p.cols, &mut rng) * p.noise);
                let y = if class == 0 { 1.0 } else { -1.0 };
                out.push(SynthSample { clean, sample: LabeledSample::new(noisy, y)?, split });
            }
        }
    }
    Ok(out)
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_shape_fn((rows, cols), |_| rng.sample(StandardNormal))
}
