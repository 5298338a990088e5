//! Layerwise global depolarization and finite-shot kernel estimation.
//!
//! A depolarizing channel of rate `p~` after each of the `2L` noisy layers of
//! the kernel circuit composes into one global channel of rate
//! `p = 1 - (1 - p~)^{2L}`, which acts on a fidelity kernel as
//! `K~ = (1 - p) K + p / D`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::{KernelKind, KernelMatrix};

/// Global depolarization per layer, its layer count, and the composed rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    layer_rate: f64,
    noisy_layers: usize,
    composed_rate: f64,
}

impl NoiseModel {
    pub fn layer_rate(&self) -> f64 {
        self.layer_rate
    }

    pub fn noisy_layers(&self) -> usize {
        self.noisy_layers
    }

    /// Effective global rate `p` of the whole kernel circuit.
    pub fn composed_rate(&self) -> f64 {
        self.composed_rate
    }
}

/// Composes `2L` layers of rate `p~` into a single global rate.
pub fn compose_depolarization(layer_rate: f64, noisy_layers: usize) -> Result<NoiseModel> {
    if !(0.0..=1.0).contains(&layer_rate) {
        return Err(invalid(
            "layer_rate",
            format!("{layer_rate} is outside [0, 1]"),
        ));
    }
    if noisy_layers == 0 {
        return Err(invalid("noisy_layers", "L must be at least 1"));
    }
    // 1 - exp(2L log1p(-p~)), exact at both endpoints and free of underflow
    let log_survival = 2.0 * noisy_layers as f64 * (-layer_rate).ln_1p();
    let composed_rate = -log_survival.exp_m1();
    Ok(NoiseModel {
        layer_rate,
        noisy_layers,
        composed_rate,
    })
}

/// Noisy value of a single ideal kernel entry.
#[inline]
pub fn depolarize(value: f64, composed_rate: f64, dim: usize) -> f64 {
    (1.0 - composed_rate) * value + composed_rate / dim as f64
}

/// Applies the depolarizing transform to an arbitrary block of ideal values
/// (e.g. test-versus-train kernel rows).
pub fn depolarize_block(block: &DMatrix<f64>, noise: &NoiseModel, dim: usize) -> DMatrix<f64> {
    block.map(|v| depolarize(v, noise.composed_rate, dim))
}

/// `K~ = (1 - p) K + p K_bar`, entrywise.
pub fn apply_depolarization(ideal: &KernelMatrix, noise: &NoiseModel) -> Result<KernelMatrix> {
    ideal.expect_kind(KernelKind::Ideal)?;
    let entries = depolarize_block(ideal.entries(), noise, ideal.dim());
    Ok(KernelMatrix::from_parts(
        entries,
        KernelKind::Noisy,
        ideal.dim(),
        Some(*noise),
        None,
    ))
}

/// The fully depolarized kernel: every entry equals `1/D`.
pub fn worst_kernel(n: usize, dim: usize) -> Result<KernelMatrix> {
    if n == 0 {
        return Err(invalid("n", "at least one point is required"));
    }
    if dim < 2 {
        return Err(invalid("dim", format!("D must be at least 2, got {dim}")));
    }
    Ok(KernelMatrix::from_parts(
        DMatrix::from_element(n, n, 1.0 / dim as f64),
        KernelKind::Worst,
        dim,
        None,
        None,
    ))
}

/// Measurement shots per kernel entry and the seed of all shot streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotConfig {
    shots: u64,
    master_seed: u64,
}

impl ShotConfig {
    pub fn new(shots: u64, master_seed: u64) -> Result<Self> {
        if shots == 0 {
            return Err(invalid("shots", "at least one measurement shot is required"));
        }
        Ok(Self { shots, master_seed })
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }
}

/// Stream domain of the training Gram matrix.
pub const TRAIN_DOMAIN: u64 = 0;
/// Stream domain of test-versus-train kernel rows.
pub const TEST_DOMAIN: u64 = 1;

/// Independent random stream for kernel entry `(row, col)` within `domain`.
///
/// The ChaCha key is built from `(master_seed, domain)` and the stream id from
/// the entry coordinates, so every entry is reproducible on its own.
fn entry_stream(master_seed: u64, domain: u64, row: usize, col: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(((row as u64) << 32) | col as u64);
    rng
}

/// Mean of `m` Bernoulli(`mean`) outcomes, drawn as one binomial count.
fn sample_mean(mean: f64, shots: u64, rng: &mut ChaCha8Rng) -> Result<f64> {
    if !(0.0..=1.0).contains(&mean) {
        return Err(Error::KernelOutOfRange { value: mean });
    }
    let dist = Binomial::new(shots, mean).map_err(|e| invalid("mean", e.to_string()))?;
    Ok(dist.sample(rng) as f64 / shots as f64)
}

/// Shot-estimated kernel: each unordered pair `(i, j)`, `i <= j`, is sampled
/// once and mirrored. Diagonal entries are sampled too.
pub fn sample_estimated_kernel(noisy: &KernelMatrix, shots: &ShotConfig) -> Result<KernelMatrix> {
    noisy.expect_kind(KernelKind::Noisy)?;
    let n = noisy.n();
    let k = noisy.entries();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i..n)
                .map(|j| {
                    let mut rng = entry_stream(shots.master_seed, TRAIN_DOMAIN, i, j);
                    sample_mean(k[(i, j)], shots.shots, &mut rng)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut entries = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (offset, &v) in row.iter().enumerate() {
            let j = i + offset;
            entries[(i, j)] = v;
            entries[(j, i)] = v;
        }
    }
    Ok(KernelMatrix::from_parts(
        entries,
        KernelKind::Estimated,
        noisy.dim(),
        noisy.noise().copied(),
        Some(*shots),
    ))
}

/// Shot-estimates a rectangular block of noisy values (test rows against the
/// training set), one stream per entry within `domain`.
pub fn sample_estimated_block(
    noisy_block: &DMatrix<f64>,
    shots: &ShotConfig,
    domain: u64,
) -> Result<DMatrix<f64>> {
    let (r, c) = noisy_block.shape();
    let rows: Vec<Vec<f64>> = (0..r)
        .into_par_iter()
        .map(|i| {
            (0..c)
                .map(|j| {
                    let mut rng = entry_stream(shots.master_seed, domain, i, j);
                    sample_mean(noisy_block[(i, j)], shots.shots, &mut rng)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}
