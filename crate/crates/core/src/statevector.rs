//! IQP-embedded statevectors and ideal fidelity kernels.
//!
//! The embedding is `|phi(x)> = U_Z(x) H^N U_Z(x) H^N |0...0>` where `U_Z` is
//! the diagonal unitary `exp(i * theta(b))` with
//!
//! ```text
//! theta(b) = sum_i x_i s_i(b) + sum_i sum_j x_i x_j s_i(b) s_j(b),   s_i(b) = (-1)^{b_i}
//! ```
//!
//! The double sum runs over the full `N x N` grid, so with `u = sum_i x_i s_i`
//! the phase is simply `u + u^2`. Qubit `i` is bit `i` of the amplitude index
//! (little endian).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::{KernelKind, KernelMatrix};

pub const DEFAULT_MAX_QUBITS: usize = 20;
pub const DENSE_ORACLE_MAX_QUBITS: usize = 6;
pub const NORMALIZATION_TOL: f64 = 1e-10;
/// Rounding slack tolerated outside `[0, 1]` before a kernel value is an error.
pub const KERNEL_CLAMP_TOL: f64 = 1e-12;

/// Circuit width and the number of noise-afflicted encoding layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitConfig {
    num_qubits: usize,
    depth: usize,
    max_qubits: usize,
}

impl CircuitConfig {
    pub fn new(num_qubits: usize, depth: usize) -> Result<Self> {
        Self::with_max_qubits(num_qubits, depth, DEFAULT_MAX_QUBITS)
    }

    pub fn with_max_qubits(num_qubits: usize, depth: usize, max_qubits: usize) -> Result<Self> {
        if num_qubits == 0 {
            return Err(invalid("num_qubits", "at least one qubit is required"));
        }
        if num_qubits > max_qubits {
            return Err(Error::TooManyQubits {
                num_qubits,
                cap: max_qubits,
            });
        }
        if depth == 0 {
            return Err(invalid("depth", "at least one encoding layer is required"));
        }
        Ok(Self {
            num_qubits,
            depth,
            max_qubits,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Hilbert-space dimension `2^N`.
    pub fn dim(&self) -> usize {
        1usize << self.num_qubits
    }
}

/// A classical datum fed into the embedding circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(components: Vec<f64>) -> Self {
        Self(components)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for FeatureVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Normalized amplitude vector of an embedded data point.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedState {
    amplitudes: Vec<Complex64>,
    source: Option<FeatureVector>,
}

impl EncodedState {
    /// Wraps raw amplitudes, checking length is a power of two and the norm is 1.
    pub fn new(amplitudes: Vec<Complex64>, source: Option<FeatureVector>) -> Result<Self> {
        if amplitudes.is_empty() || !amplitudes.len().is_power_of_two() {
            return Err(invalid(
                "amplitudes",
                format!("length {} is not a power of two", amplitudes.len()),
            ));
        }
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(Self { amplitudes, source })
    }

    /// Computational basis state `|index>` on `num_qubits` qubits.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(invalid("index", format!("{index} >= 2^{num_qubits}")));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self {
            amplitudes,
            source: None,
        })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn source(&self) -> Option<&FeatureVector> {
        self.source.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn num_qubits(&self) -> usize {
        self.amplitudes.len().trailing_zeros() as usize
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &EncodedState) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .fold(Complex64::new(0.0, 0.0), |acc, (a, b)| acc + a.conj() * b))
    }
}

fn check_features(x: &FeatureVector, cfg: &CircuitConfig) -> Result<()> {
    if x.len() != cfg.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: cfg.num_qubits(),
            actual: x.len(),
        });
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(invalid("x", "feature vector contains a non-finite value"));
    }
    Ok(())
}

/// Diagonal phases `theta(b)` of `U_Z(x)` for every basis index.
fn iqp_phases(x: &[f64]) -> Vec<f64> {
    let dim = 1usize << x.len();
    (0..dim)
        .map(|b| {
            let u: f64 = x
                .iter()
                .enumerate()
                .map(|(i, xi)| if (b >> i) & 1 == 0 { *xi } else { -*xi })
                .sum();
            u + u * u
        })
        .collect()
}

/// In-place normalized Walsh-Hadamard transform, i.e. `H^N` on a statevector.
fn walsh_hadamard(amps: &mut [Complex64]) {
    let n = amps.len();
    let mut half = 1;
    while half < n {
        for block in (0..n).step_by(2 * half) {
            for k in block..block + half {
                let a = amps[k];
                let b = amps[k + half];
                amps[k] = a + b;
                amps[k + half] = a - b;
            }
        }
        half *= 2;
    }
    let scale = (n as f64).sqrt().recip();
    for a in amps.iter_mut() {
        *a *= scale;
    }
}

fn apply_phases(amps: &mut [Complex64], phases: &[f64]) {
    for (a, &theta) in amps.iter_mut().zip(phases) {
        *a *= Complex64::from_polar(1.0, theta);
    }
}

/// IQP embedding via Walsh-Hadamard transforms and diagonal phases, `O(N 2^N)`.
pub fn embed_iqp(x: &FeatureVector, cfg: &CircuitConfig) -> Result<EncodedState> {
    check_features(x, cfg)?;
    let phases = iqp_phases(x.as_slice());
    let mut amps = vec![Complex64::new(0.0, 0.0); cfg.dim()];
    amps[0] = Complex64::new(1.0, 0.0);
    for _ in 0..2 {
        walsh_hadamard(&mut amps);
        apply_phases(&mut amps, &phases);
    }
    Ok(EncodedState {
        amplitudes: amps,
        source: Some(x.clone()),
    })
}

fn pauli_z_on(qubit: usize, num_qubits: usize) -> DMatrix<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let id = DMatrix::from_row_slice(2, 2, &[one, zero, zero, one]);
    let z = DMatrix::from_row_slice(2, 2, &[one, zero, zero, -one]);
    // leftmost Kronecker factor carries the most significant bit
    (0..num_qubits)
        .rev()
        .fold(DMatrix::identity(1, 1), |acc, k| {
            acc.kronecker(if k == qubit { &z } else { &id })
        })
}

/// Dense-matrix construction of the same embedding, for cross-checking.
///
/// Builds `H^N` by iterated Kronecker products and `U_Z` by exponentiating the
/// diagonal of the explicit Hamiltonian `sum x_i Z_i + sum x_i x_j Z_i Z_j`.
pub fn dense_oracle_embed(x: &FeatureVector, cfg: &CircuitConfig) -> Result<EncodedState> {
    check_features(x, cfg)?;
    let n = cfg.num_qubits();
    if n > DENSE_ORACLE_MAX_QUBITS {
        return Err(Error::TooManyQubits {
            num_qubits: n,
            cap: DENSE_ORACLE_MAX_QUBITS,
        });
    }
    let dim = cfg.dim();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let h1 = DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(h, 0.0),
            Complex64::new(h, 0.0),
            Complex64::new(h, 0.0),
            Complex64::new(-h, 0.0),
        ],
    );
    let hn = (0..n).fold(DMatrix::identity(1, 1), |acc: DMatrix<Complex64>, _| {
        acc.kronecker(&h1)
    });

    let zs: Vec<_> = (0..n).map(|i| pauli_z_on(i, n)).collect();
    let xs = x.as_slice();
    let mut hamiltonian = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..n {
        hamiltonian += &zs[i] * Complex64::new(xs[i], 0.0);
        for j in 0..n {
            hamiltonian += (&zs[i] * &zs[j]) * Complex64::new(xs[i] * xs[j], 0.0);
        }
    }
    let uz = DMatrix::from_diagonal(&DVector::from_fn(dim, |b, _| {
        (Complex64::new(0.0, 1.0) * hamiltonian[(b, b)]).exp()
    }));

    let mut zero = DVector::<Complex64>::zeros(dim);
    zero[0] = Complex64::new(1.0, 0.0);
    let state = &uz * &hn * &uz * &hn * zero;
    Ok(EncodedState {
        amplitudes: state.iter().copied().collect(),
        source: Some(x.clone()),
    })
}

/// Clamps rounding noise just outside `[0, 1]`; larger excursions are errors.
pub(crate) fn clamp_unit(value: f64) -> Result<f64> {
    if !(-KERNEL_CLAMP_TOL..=1.0 + KERNEL_CLAMP_TOL).contains(&value) || value.is_nan() {
        return Err(Error::KernelOutOfRange { value });
    }
    Ok(value.clamp(0.0, 1.0))
}

/// Fidelity kernel `|<a|b>|^2`.
pub fn ideal_kernel(a: &EncodedState, b: &EncodedState) -> Result<f64> {
    let overlap = a.inner(b)?;
    clamp_unit(overlap.norm_sqr())
}

/// Embeds every point once, in parallel. Output order matches input order.
pub fn embed_all(points: &[FeatureVector], cfg: &CircuitConfig) -> Result<Vec<EncodedState>> {
    points.par_iter().map(|x| embed_iqp(x, cfg)).collect()
}

/// Ideal Gram matrix of already-embedded states; the diagonal is exactly 1.
pub fn gram_from_states(states: &[EncodedState]) -> Result<KernelMatrix> {
    let n = states.len();
    if n == 0 {
        return Err(invalid("points", "at least one point is required"));
    }
    let dim = states[0].dim();
    if let Some(bad) = states.iter().find(|s| s.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: bad.dim(),
        });
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..i)
                .map(|j| ideal_kernel(&states[i], &states[j]))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut entries = DMatrix::<f64>::identity(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            entries[(i, j)] = v;
            entries[(j, i)] = v;
        }
    }
    Ok(KernelMatrix::from_parts(
        entries,
        KernelKind::Ideal,
        dim,
        None,
        None,
    ))
}

/// Ideal Gram matrix `K_ij = |<phi(x_i)|phi(x_j)>|^2`.
pub fn gram_matrix(points: &[FeatureVector], cfg: &CircuitConfig) -> Result<KernelMatrix> {
    if points.is_empty() {
        return Err(invalid("points", "at least one point is required"));
    }
    gram_from_states(&embed_all(points, cfg)?)
}

/// Rectangular ideal kernel block, `rows.len() x cols.len()`.
///
/// Used for test-time kernel rows against the training states.
pub fn cross_kernel(rows: &[EncodedState], cols: &[EncodedState]) -> Result<DMatrix<f64>> {
    let values: Vec<Vec<f64>> = rows
        .par_iter()
        .map(|r| cols.iter().map(|c| ideal_kernel(r, c)).collect())
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(rows.len(), cols.len(), |i, j| values[i][j]))
}
