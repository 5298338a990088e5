//! Principal component projection to circuit-ready features.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::statevector::FeatureVector;

pub const PCA_COMPONENTS: usize = 10;

/// Eigenvalues below this fraction of the total variance count as zero.
const RANK_TOL: f64 = 1e-12;

/// Top-k principal components of a training set, with per-component output
/// scaling so that every training projection lies in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjector {
    mean: DVector<f64>,
    /// `k x d`, orthonormal rows, sorted by decreasing variance.
    components: DMatrix<f64>,
    explained_variance: DVector<f64>,
    total_variance: f64,
    scale: DVector<f64>,
}

impl PcaProjector {
    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn components(&self) -> &DMatrix<f64> {
        &self.components
    }

    pub fn explained_variance(&self) -> &DVector<f64> {
        &self.explained_variance
    }

    pub fn total_variance(&self) -> f64 {
        self.total_variance
    }

    pub fn scale(&self) -> &DVector<f64> {
        &self.scale
    }

    pub fn num_components(&self) -> usize {
        self.components.nrows()
    }

    pub fn input_len(&self) -> usize {
        self.mean.len()
    }

    /// Component coefficients of the centered input, before rescaling.
    pub fn project_unscaled(&self, image: &[f64]) -> Result<DVector<f64>> {
        if image.len() != self.input_len() {
            return Err(Error::DimensionMismatch {
                expected: self.input_len(),
                actual: image.len(),
            });
        }
        let centered = DVector::from_column_slice(image) - &self.mean;
        Ok(&self.components * centered)
    }

    pub fn project(&self, image: &[f64]) -> Result<FeatureVector> {
        let coeffs = self.project_unscaled(image)?;
        Ok(FeatureVector::new(
            coeffs.component_div(&self.scale).iter().copied().collect(),
        ))
    }

    pub fn project_all(&self, images: &[Vec<f64>]) -> Result<Vec<FeatureVector>> {
        images.par_iter().map(|im| self.project(im)).collect()
    }

    /// Maps unscaled coefficients back to input space.
    pub fn reconstruct(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        self.components.tr_mul(coeffs) + &self.mean
    }
}

fn sorted_top(eigen: SymmetricEigen<f64, nalgebra::Dyn>, k: usize) -> (Vec<f64>, Vec<DVector<f64>>) {
    let mut order: Vec<usize> = (0..eigen.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));
    let all: Vec<f64> = order.iter().map(|&i| eigen.eigenvalues[i]).collect();
    let vecs = order
        .iter()
        .take(k)
        .map(|&i| eigen.eigenvectors.column(i).into_owned())
        .collect();
    (all, vecs)
}

/// Fits `k` components on the given training images (rows).
///
/// Uses the `n x n` Gram matrix when there are fewer images than pixels.
pub fn fit_pca(images: &[Vec<f64>], k: usize) -> Result<PcaProjector> {
    let n = images.len();
    if n < k || n == 0 {
        return Err(Error::InsufficientData {
            requested: k,
            available: n,
        });
    }
    let d = images[0].len();
    if let Some(bad) = images.iter().find(|im| im.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: bad.len(),
        });
    }
    let x = DMatrix::from_fn(n, d, |i, j| images[i][j]);
    let mean = DVector::from_fn(d, |j, _| x.column(j).mean());
    let mut centered = x;
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let denom = (n.max(2) - 1) as f64;
    let total_variance = centered.norm_squared() / denom;

    let (eigenvalues, directions) = if d <= n {
        let cov = centered.tr_mul(&centered) / denom;
        sorted_top(SymmetricEigen::new(cov), k)
    } else {
        let gram = &centered * centered.transpose() / denom;
        let (vals, us) = sorted_top(SymmetricEigen::new(gram), k);
        let dirs = us
            .iter()
            .zip(&vals)
            .map(|(u, &val)| {
                let v = centered.tr_mul(u);
                let norm = v.norm();
                if norm > 0.0 && val > 0.0 {
                    v / norm
                } else {
                    v
                }
            })
            .collect();
        (vals, dirs)
    };

    let found = eigenvalues
        .iter()
        .filter(|&&v| v > RANK_TOL * total_variance && total_variance > 0.0)
        .count();
    if found < k {
        return Err(Error::RankDeficient { required: k, found });
    }

    let mut components = DMatrix::zeros(k, d);
    for (r, dir) in directions.iter().enumerate() {
        // deterministic sign: largest-magnitude entry positive
        let pivot = dir.iamax();
        let sign = if dir[pivot] < 0.0 { -1.0 } else { 1.0 };
        components.set_row(r, &(dir * sign).transpose());
    }

    let coeffs = &centered * components.transpose();
    let scale = DVector::from_fn(k, |j, _| coeffs.column(j).amax());
    Ok(PcaProjector {
        mean,
        components,
        explained_variance: DVector::from_iterator(k, eigenvalues.into_iter().take(k)),
        total_variance,
        scale,
    })
}
