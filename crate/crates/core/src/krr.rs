//! Kernel ridge regression with clipped hypotheses.
//!
//! The optimum of `sum_i (h(x_i) - y_i)^2 + lambda <w, w>` is represented by
//! its dual coefficients `alpha = (K + lambda I)^{-1} Y`; predictions are
//! `clip(sum_i k(x, x_i) alpha_i)` with `clip(v) = min(1, max(-1, v))`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::{KernelKind, KernelMatrix};
use crate::linalg::{shifted, solve_symmetric};
use crate::statevector::FeatureVector;

/// Relative residual every successful fit must meet.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Training inputs with real labels in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    points: Vec<FeatureVector>,
    labels: Vec<f64>,
}

impl LabeledSample {
    pub fn new(points: Vec<FeatureVector>, labels: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("points", "sample must not be empty"));
        }
        if points.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                actual: labels.len(),
            });
        }
        for (index, &value) in labels.iter().enumerate() {
            if !(-1.0..=1.0).contains(&value) {
                return Err(Error::LabelOutOfRange { index, value });
            }
        }
        Ok(Self { points, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn points(&self) -> &[FeatureVector] {
        &self.points
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn label_sum(&self) -> f64 {
        self.labels.iter().sum()
    }

    fn label_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.labels)
    }
}

/// Raised instead of an error when an estimated kernel needed the
/// non-positive-definite fallback solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "warning", rename_all = "snake_case")]
pub enum FitWarning {
    IndefiniteSystem { min_eigenvalue: f64 },
}

/// Dual solution of the regularized least-squares problem for one kernel.
#[derive(Debug, Clone)]
pub struct RidgeModel {
    dual: DVector<f64>,
    lambda: f64,
    kind: KernelKind,
    train_points: Vec<FeatureVector>,
    warning: Option<FitWarning>,
}

impl RidgeModel {
    pub fn dual_coefficients(&self) -> &DVector<f64> {
        &self.dual
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn train_kernel_kind(&self) -> KernelKind {
        self.kind
    }

    pub fn train_points(&self) -> &[FeatureVector] {
        &self.train_points
    }

    pub fn warning(&self) -> Option<&FitWarning> {
        self.warning.as_ref()
    }

    pub fn n(&self) -> usize {
        self.dual.len()
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(invalid("lambda", format!("must be positive and finite, got {lambda}")))
    }
}

fn relative_residual(a: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let r = (a * x - b).norm();
    let scale = b.norm();
    if scale == 0.0 {
        r
    } else {
        r / scale
    }
}

/// Solves `(K + lambda I) alpha = Y`.
///
/// Cholesky is tried first. Only an estimated kernel may legitimately be
/// indefinite; it then falls back to an eigen-based solve and the model
/// carries a [`FitWarning`].
pub fn fit(kernel: &KernelMatrix, sample: &LabeledSample, lambda: f64) -> Result<RidgeModel> {
    check_lambda(lambda)?;
    if kernel.n() != sample.len() {
        return Err(Error::DimensionMismatch {
            expected: sample.len(),
            actual: kernel.n(),
        });
    }
    let a = shifted(kernel.entries(), lambda);
    let y = sample.label_vector();
    let solved = solve_symmetric(&a, &y)?;
    let mut dual = solved.solution;
    let mut residual = relative_residual(&a, &dual, &y);
    if residual > RESIDUAL_TOL {
        // one step of iterative refinement
        let correction = solve_symmetric(&a, &(&y - &a * &dual))?.solution;
        dual += correction;
        residual = relative_residual(&a, &dual, &y);
        if residual > RESIDUAL_TOL {
            return Err(Error::ResidualTooLarge { residual });
        }
    }
    let warning = solved
        .min_eigenvalue
        .map(|min_eigenvalue| FitWarning::IndefiniteSystem { min_eigenvalue });
    Ok(RidgeModel {
        dual,
        lambda,
        kind: kernel.kind(),
        train_points: sample.points().to_vec(),
        warning,
    })
}

#[inline]
pub fn clip(v: f64) -> f64 {
    v.clamp(-1.0, 1.0)
}

/// Clipped prediction from one kernel row `k(x, x_i)`, `i = 1..n`.
pub fn predict(model: &RidgeModel, k_row: &[f64]) -> Result<f64> {
    if k_row.len() != model.n() {
        return Err(Error::DimensionMismatch {
            expected: model.n(),
            actual: k_row.len(),
        });
    }
    let v: f64 = k_row.iter().zip(model.dual.iter()).map(|(k, a)| k * a).sum();
    Ok(clip(v))
}

/// Clipped predictions for every row of `rows` (one query point per row).
///
/// `kind` states how the rows were produced and must match the training kernel.
pub fn predict_rows(model: &RidgeModel, rows: &DMatrix<f64>, kind: KernelKind) -> Result<Vec<f64>> {
    if kind != model.kind {
        return Err(Error::WrongKernelKind {
            expected: model.kind,
            actual: kind,
        });
    }
    if rows.ncols() != model.n() {
        return Err(Error::DimensionMismatch {
            expected: model.n(),
            actual: rows.ncols(),
        });
    }
    Ok((rows * &model.dual).iter().map(|&v| clip(v)).collect())
}

/// Clipped predictions on the training points themselves.
pub fn fitted_values(model: &RidgeModel, kernel: &KernelMatrix) -> Result<Vec<f64>> {
    predict_rows(model, kernel.entries(), kernel.kind())
}

/// The constant hypothesis of the fully depolarized kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstHypothesis {
    pub constant_value: f64,
}

/// `h_bar = (sum_i y_i) / (D lambda + n)`.
pub fn worst_hypothesis(sample: &LabeledSample, lambda: f64, dim: usize) -> Result<WorstHypothesis> {
    check_lambda(lambda)?;
    let n = sample.len() as f64;
    Ok(WorstHypothesis {
        constant_value: sample.label_sum() / (dim as f64 * lambda + n),
    })
}

/// Mean absolute difference between two hypotheses evaluated on the same points.
pub fn empirical_difference(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.is_empty() {
        return Err(invalid("values", "cannot average an empty set"));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

/// Sign classifier; a zero hypothesis value predicts `+1`.
#[inline]
pub fn predicted_label(value: f64) -> f64 {
    if value >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Fraction of points whose predicted sign differs from the `±1` label.
pub fn misclassification_rate(values: &[f64], labels: &[f64]) -> Result<f64> {
    if values.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: values.len(),
            actual: labels.len(),
        });
    }
    if values.is_empty() {
        return Err(invalid("values", "cannot score an empty set"));
    }
    let mut wrong = 0usize;
    for (index, (&v, &y)) in values.iter().zip(labels).enumerate() {
        if y != 1.0 && y != -1.0 {
            return Err(Error::NonBinaryLabel { index, value: y });
        }
        if predicted_label(v) != y {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / values.len() as f64)
}

/// Feature-space norm of the optimal parameter,
/// `sqrt(Y^T (K + lambda I)^{-1} K (K + lambda I)^{-1} Y)`.
pub fn omega_star_norm(kernel: &KernelMatrix, sample: &LabeledSample, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if kernel.n() != sample.len() {
        return Err(Error::DimensionMismatch {
            expected: sample.len(),
            actual: kernel.n(),
        });
    }
    let a = shifted(kernel.entries(), lambda);
    let y = sample.label_vector();
    let left = solve_symmetric(&a, &y)?.solution;
    let right = solve_symmetric(&a, &(kernel.entries() * &left))?.solution;
    Ok(y.dot(&right).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::worst_kernel;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample(labels: Vec<f64>) -> LabeledSample {
        let points = vec![FeatureVector::zeros(1); labels.len()];
        LabeledSample::new(points, labels).unwrap()
    }

    fn kernel(entries: DMatrix<f64>, kind: KernelKind) -> KernelMatrix {
        KernelMatrix::from_parts(entries, kind, 4, None, None)
    }

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        &b * b.transpose() / n as f64 + DMatrix::identity(n, n) * 0.05
    }

    #[test]
    fn sample_validation() {
        assert!(LabeledSample::new(vec![], vec![]).is_err());
        assert!(LabeledSample::new(vec![FeatureVector::zeros(1)], vec![1.5]).is_err());
        assert!(LabeledSample::new(vec![FeatureVector::zeros(1)], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn identity_kernel_scales_labels() {
        let y = vec![0.5, -1.0, 0.25];
        let k = kernel(DMatrix::identity(3, 3), KernelKind::Ideal);
        let m = fit(&k, &sample(y.clone()), 0.5).unwrap();
        for (a, yi) in m.dual_coefficients().iter().zip(&y) {
            assert_abs_diff_eq!(*a, yi / 1.5, epsilon = 1e-15);
        }
        assert!(m.warning().is_none());
    }

    #[test]
    fn worst_kernel_fit_collapses_to_constant() {
        let y = vec![1.0, 1.0, -1.0, 1.0, -0.5];
        let s = sample(y.clone());
        let dim = 8;
        let k = worst_kernel(5, dim).unwrap();
        let lambda = 0.3;
        let m = fit(&k, &s, lambda).unwrap();
        let expected = y.iter().sum::<f64>() / (dim as f64 * lambda + 5.0);
        for v in fitted_values(&m, &k).unwrap() {
            assert_abs_diff_eq!(v, expected, epsilon = 1e-12);
        }
        let row = vec![1.0 / dim as f64; 5];
        assert_abs_diff_eq!(predict(&m, &row).unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(
            worst_hypothesis(&s, lambda, dim).unwrap().constant_value,
            expected,
            epsilon = 1e-15
        );
    }

    #[test]
    fn residual_invariant_on_random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [1, 2, 6, 20] {
            let k = kernel(random_spd(&mut rng, n), KernelKind::Noisy);
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let m = fit(&k, &sample(y.clone()), 0.1).unwrap();
            let a = shifted(k.entries(), 0.1);
            let yv = DVector::from_vec(y);
            assert!(relative_residual(&a, m.dual_coefficients(), &yv) <= RESIDUAL_TOL);
        }
    }

    #[test]
    fn indefinite_estimated_kernel_falls_back_with_warning() {
        // eigenvalues 1.5 and -0.5 -> shifted by 0.2 still indefinite
        let k = kernel(
            DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 1.0, 0.5]),
            KernelKind::Estimated,
        );
        let m = fit(&k, &sample(vec![1.0, -1.0]), 0.2).unwrap();
        match m.warning() {
            Some(FitWarning::IndefiniteSystem { min_eigenvalue }) => {
                assert_abs_diff_eq!(*min_eigenvalue, -0.3, epsilon = 1e-12)
            }
            None => panic!("expected a warning"),
        }
    }

    #[test]
    fn singular_estimated_kernel_is_an_error() {
        // eigenvalues 1.5 and -0.5, shifted by exactly 0.5 -> singular
        let k = kernel(
            DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 1.0, 0.5]),
            KernelKind::Estimated,
        );
        assert!(matches!(
            fit(&k, &sample(vec![1.0, -1.0]), 0.5),
            Err(Error::SingularSystem { .. })
        ));
    }

    #[test]
    fn fit_rejects_bad_inputs() {
        let k = kernel(DMatrix::identity(2, 2), KernelKind::Ideal);
        assert!(fit(&k, &sample(vec![1.0, 1.0]), 0.0).is_err());
        assert!(fit(&k, &sample(vec![1.0, 1.0]), f64::NAN).is_err());
        assert!(fit(&k, &sample(vec![1.0, 1.0, 1.0]), 0.5).is_err());
    }

    #[test]
    fn predict_examples() {
        let k = kernel(DMatrix::identity(2, 2), KernelKind::Ideal);
        let zero = fit(&k, &sample(vec![0.0, 0.0]), 1.0).unwrap();
        assert_eq!(predict(&zero, &[0.3, 0.9]).unwrap(), 0.0);
        let m = fit(&k, &sample(vec![1.0, 1.0]), 0.001).unwrap();
        // sum k_i alpha_i = 3.7 / 1.001, clipped to 1
        assert_eq!(predict(&m, &[1.85, 1.85]).unwrap(), 1.0);
        assert_eq!(predict(&m, &[-3.0, -3.0]).unwrap(), -1.0);
        assert!(predict(&m, &[1.0]).is_err());
        let rows = DMatrix::from_element(1, 2, 0.5);
        assert!(predict_rows(&m, &rows, KernelKind::Noisy).is_err());
    }

    #[test]
    fn worst_hypothesis_examples() {
        assert_eq!(
            worst_hypothesis(&sample(vec![1.0, -1.0]), 0.5, 4).unwrap().constant_value,
            0.0
        );
        assert_eq!(
            worst_hypothesis(&sample(vec![1.0, 1.0]), 0.5, 4).unwrap().constant_value,
            0.5
        );
        let mut y = vec![1.0; 240];
        y.extend(vec![-1.0; 260]);
        let h = worst_hypothesis(&sample(y), 0.5, 1024).unwrap();
        // -20 / 1012, exact rational
        assert_abs_diff_eq!(h.constant_value, -20.0 / 1012.0, epsilon = 1e-17);
        assert_abs_diff_eq!(h.constant_value, -0.019_762_845_849_802_37, epsilon = 1e-15);
    }

    #[test]
    fn empirical_difference_examples() {
        assert_eq!(empirical_difference(&[0.2, 0.4], &[0.2, 0.4]).unwrap(), 0.0);
        assert_eq!(empirical_difference(&[1.0, -1.0], &[-1.0, 1.0]).unwrap(), 2.0);
        assert!(empirical_difference(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn misclassification_examples() {
        let labels = [1.0, -1.0, 1.0, -1.0];
        assert_eq!(misclassification_rate(&labels, &labels).unwrap(), 0.0);
        let neg: Vec<f64> = labels.iter().map(|v| -v).collect();
        assert_eq!(misclassification_rate(&neg, &labels).unwrap(), 1.0);
        assert_eq!(misclassification_rate(&[0.3; 4], &labels).unwrap(), 0.5);
        // sign(0) counts as +1
        assert_eq!(misclassification_rate(&[0.0, 0.0], &[1.0, -1.0]).unwrap(), 0.5);
        assert!(matches!(
            misclassification_rate(&[0.1], &[0.5]),
            Err(Error::NonBinaryLabel { index: 0, .. })
        ));
    }

    #[test]
    fn omega_norm_examples() {
        let k = kernel(random_spd(&mut ChaCha8Rng::seed_from_u64(2), 4), KernelKind::Ideal);
        assert_eq!(omega_star_norm(&k, &sample(vec![0.0; 4]), 0.5).unwrap(), 0.0);

        let y = vec![1.0, 1.0, -1.0, 1.0, 1.0, -0.25];
        let sum: f64 = y.iter().sum();
        let dim = 16;
        let lambda = 0.5;
        let w = worst_kernel(6, dim).unwrap();
        let closed = (dim as f64).sqrt() / (dim as f64 * lambda + 6.0) * sum.abs();
        assert_abs_diff_eq!(
            omega_star_norm(&w, &sample(y), lambda).unwrap(),
            closed,
            epsilon = 1e-12
        );
    }

    #[test]
    fn omega_norm_matches_dense_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let kd = random_spd(&mut rng, 5);
        let y: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lambda = 0.7;
        let inv = shifted(&kd, lambda).try_inverse().unwrap();
        let yv = DVector::from_vec(y.clone());
        let oracle = (yv.transpose() * &inv * &kd * &inv * &yv)[(0, 0)].sqrt();
        let k = kernel(kd, KernelKind::Ideal);
        assert_abs_diff_eq!(
            omega_star_norm(&k, &sample(y), lambda).unwrap(),
            oracle,
            epsilon = 1e-9
        );
    }

    proptest! {
        #[test]
        fn predictions_are_clipped(row in proptest::collection::vec(-50.0f64..50.0, 3), ys in proptest::collection::vec(-1.0f64..=1.0, 3)) {
            let k = kernel(DMatrix::identity(3, 3), KernelKind::Ideal);
            let m = fit(&k, &sample(ys), 0.01).unwrap();
            let v = predict(&m, &row).unwrap();
            prop_assert!((-1.0..=1.0).contains(&v));
        }
    }
}
