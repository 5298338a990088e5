//! Synthetic feature vectors and quantum-concept labels
//! `y = <phi(x)| U^dag O U |phi(x)>` with `O = Z` on qubit 0.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::statevector::{embed_iqp, CircuitConfig, FeatureVector};

pub const DEFAULT_CONCEPT_LAYERS: usize = 3;

/// Layered circuit: per layer, `RZ(phi) RY(theta)` on every qubit followed by
/// a ring of CZ gates. The observable is Pauli-Z on qubit 0 (`‖O‖ = 1`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConceptCircuit {
    num_qubits: usize,
    /// `layers[l][q] = [theta, phi]`.
    layers: Vec<Vec<[f64; 2]>>,
    entangle: bool,
    seed: Option<u64>,
}

impl ConceptCircuit {
    pub fn random(num_qubits: usize, layers: usize, seed: u64) -> Result<Self> {
        if num_qubits == 0 {
            return Err(invalid("num_qubits", "must be at least 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tau = std::f64::consts::TAU;
        let layers = (0..layers)
            .map(|_| {
                (0..num_qubits)
                    .map(|_| [rng.random_range(0.0..tau), rng.random_range(0.0..tau)])
                    .collect()
            })
            .collect();
        Ok(Self {
            num_qubits,
            layers,
            entangle: true,
            seed: Some(seed),
        })
    }

    /// `U = I`, so labels are `<Z_0>` of the embedded state itself.
    pub fn identity(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            layers: Vec::new(),
            entangle: false,
            seed: None,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn layers(&self) -> &[Vec<[f64; 2]>] {
        &self.layers
    }

    /// CZ pairs of one entangling ring; a single pair for two qubits.
    pub fn ring(&self) -> Vec<(usize, usize)> {
        match self.num_qubits {
            0 | 1 => Vec::new(),
            2 => vec![(0, 1)],
            n => (0..n).map(|q| (q, (q + 1) % n)).collect(),
        }
    }

    pub fn apply(&self, amps: &mut [Complex64]) {
        let ring = self.ring();
        for layer in &self.layers {
            for (q, &[theta, phi]) in layer.iter().enumerate() {
                apply_ry(amps, q, theta);
                apply_rz(amps, q, phi);
            }
            if self.entangle {
                for &(a, b) in &ring {
                    apply_cz(amps, a, b);
                }
            }
        }
    }
}

fn apply_ry(amps: &mut [Complex64], qubit: usize, theta: f64) {
    let (s, c) = (theta / 2.0).sin_cos();
    let bit = 1usize << qubit;
    for i in 0..amps.len() {
        if i & bit == 0 {
            let a0 = amps[i];
            let a1 = amps[i | bit];
            amps[i] = a0 * c - a1 * s;
            amps[i | bit] = a0 * s + a1 * c;
        }
    }
}

fn apply_rz(amps: &mut [Complex64], qubit: usize, phi: f64) {
    let lo = Complex64::from_polar(1.0, -phi / 2.0);
    let hi = Complex64::from_polar(1.0, phi / 2.0);
    for (i, a) in amps.iter_mut().enumerate() {
        *a *= if (i >> qubit) & 1 == 0 { lo } else { hi };
    }
}

fn apply_cz(amps: &mut [Complex64], a: usize, b: usize) {
    let mask = (1usize << a) | (1usize << b);
    for (i, amp) in amps.iter_mut().enumerate() {
        if i & mask == mask {
            *amp = -*amp;
        }
    }
}

/// `<Z_0>` of a statevector.
pub fn z0_expectation(amps: &[Complex64]) -> f64 {
    amps.iter()
        .enumerate()
        .map(|(i, a)| if i & 1 == 0 { a.norm_sqr() } else { -a.norm_sqr() })
        .sum()
}

/// Real labels in `[-1, 1]`, one per point.
pub fn synthesize_concept_labels(
    points: &[FeatureVector],
    concept: &ConceptCircuit,
    cfg: &CircuitConfig,
) -> Result<Vec<f64>> {
    if concept.num_qubits() != cfg.num_qubits() {
        return Err(crate::error::Error::DimensionMismatch {
            expected: cfg.num_qubits(),
            actual: concept.num_qubits(),
        });
    }
    points
        .par_iter()
        .map(|x| {
            let state = embed_iqp(x, cfg)?;
            let mut amps = state.amplitudes().to_vec();
            concept.apply(&mut amps);
            Ok(z0_expectation(&amps).clamp(-1.0, 1.0))
        })
        .collect()
}

/// Classification labels by sign, with `sign(0) = +1`.
pub fn binarize_labels(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|&v| if v < 0.0 { -1.0 } else { 1.0 })
        .collect()
}

/// `count` points drawn uniformly from `[-1, 1]^N`.
pub fn synthetic_points(count: usize, num_qubits: usize, seed: u64) -> Vec<FeatureVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            FeatureVector::new(
                (0..num_qubits)
                    .map(|_| rng.random_range(-1.0..=1.0))
                    .collect(),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single(q: usize, gate: &DMatrix<Complex64>, n: usize) -> DMatrix<Complex64> {
        let id = DMatrix::<Complex64>::identity(2, 2);
        (0..n)
            .rev()
            .fold(DMatrix::identity(1, 1), |acc, k| {
                acc.kronecker(if k == q { gate } else { &id })
            })
    }

    fn dense_unitary(concept: &ConceptCircuit) -> DMatrix<Complex64> {
        let n = concept.num_qubits();
        let dim = 1 << n;
        let mut u = DMatrix::<Complex64>::identity(dim, dim);
        for layer in concept.layers() {
            for (q, &[theta, phi]) in layer.iter().enumerate() {
                let (s, co) = (theta / 2.0).sin_cos();
                let ry = DMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)]);
                let rz = DMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        Complex64::from_polar(1.0, -phi / 2.0),
                        c(0.0, 0.0),
                        c(0.0, 0.0),
                        Complex64::from_polar(1.0, phi / 2.0),
                    ],
                );
                u = single(q, &rz, n) * single(q, &ry, n) * u;
            }
            for (a, b) in concept.ring() {
                let cz = DMatrix::from_diagonal(&DVector::from_fn(dim, |i, _| {
                    if (i >> a) & 1 == 1 && (i >> b) & 1 == 1 {
                        c(-1.0, 0.0)
                    } else {
                        c(1.0, 0.0)
                    }
                }));
                u = cz * u;
            }
        }
        u
    }

    #[test]
    fn identity_concept_at_origin() {
        let cfg = CircuitConfig::new(3, 1).unwrap();
        let y = synthesize_concept_labels(
            &[FeatureVector::zeros(3)],
            &ConceptCircuit::identity(3),
            &cfg,
        )
        .unwrap();
        assert_abs_diff_eq!(y[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn labels_bounded() {
        let cfg = CircuitConfig::new(5, 1).unwrap();
        let concept = ConceptCircuit::random(5, 3, 11).unwrap();
        let points = synthetic_points(50, 5, 12);
        for y in synthesize_concept_labels(&points, &concept, &cfg).unwrap() {
            assert!(y.abs() <= 1.0);
        }
    }

    #[test]
    fn matches_dense_evaluation_two_qubits() {
        let cfg = CircuitConfig::new(2, 1).unwrap();
        let concept = ConceptCircuit::random(2, 3, 5).unwrap();
        let u = dense_unitary(&concept);
        let z0 = DMatrix::from_diagonal(&DVector::from_fn(4, |i, _| {
            c(if i & 1 == 0 { 1.0 } else { -1.0 }, 0.0)
        }));
        let obs = u.adjoint() * z0 * &u;
        let points = synthetic_points(10, 2, 6);
        let labels = synthesize_concept_labels(&points, &concept, &cfg).unwrap();
        for (x, y) in points.iter().zip(labels) {
            let phi = DVector::from_vec(
                crate::statevector::dense_oracle_embed(x, &cfg)
                    .unwrap()
                    .amplitudes()
                    .to_vec(),
            );
            let expect = (phi.adjoint() * &obs * &phi)[(0, 0)];
            assert_abs_diff_eq!(expect.im, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(y, expect.re, epsilon = 1e-12);
        }
    }

    #[test]
    fn invariant_under_global_phase() {
        let concept = ConceptCircuit::random(3, 3, 9).unwrap();
        let cfg = CircuitConfig::new(3, 1).unwrap();
        let x = &synthetic_points(1, 3, 10)[0];
        let amps = embed_iqp(x, &cfg).unwrap().amplitudes().to_vec();
        let mut a = amps.clone();
        let mut b: Vec<_> = amps.iter().map(|v| v * Complex64::from_polar(1.0, 0.77)).collect();
        concept.apply(&mut a);
        concept.apply(&mut b);
        assert_abs_diff_eq!(z0_expectation(&a), z0_expectation(&b), epsilon = 1e-13);
    }

    #[test]
    fn deterministic_generation() {
        assert_eq!(
            ConceptCircuit::random(4, 3, 1).unwrap(),
            ConceptCircuit::random(4, 3, 1).unwrap()
        );
        assert_eq!(synthetic_points(5, 4, 2), synthetic_points(5, 4, 2));
        assert_eq!(binarize_labels(&[0.0, -0.1, 0.2]), vec![1.0, -1.0, 1.0]);
    }
}
