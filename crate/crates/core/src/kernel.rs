//! Kernel matrices tagged with how they were produced.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::noise::{NoiseModel, ShotConfig};

/// Provenance of a kernel matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// Exact fidelities of noiseless states.
    Ideal,
    /// Analytic global-depolarizing transform of an ideal kernel.
    Noisy,
    /// Finite-shot Bernoulli estimate of a noisy kernel.
    Estimated,
    /// Fully depolarized kernel, every entry `1/D`.
    Worst,
}

impl KernelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelKind::Ideal => "ideal",
            KernelKind::Noisy => "noisy",
            KernelKind::Estimated => "estimated",
            KernelKind::Worst => "worst",
        }
    }
}

impl std::fmt::Display for KernelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Symmetric `n x n` kernel matrix with its provenance.
///
/// `dim` is the Hilbert-space dimension `D = 2^N` of the states behind the
/// kernel; the noisy transform and the worst kernel both depend on it.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    entries: DMatrix<f64>,
    kind: KernelKind,
    dim: usize,
    noise: Option<NoiseModel>,
    shots: Option<ShotConfig>,
}

impl KernelMatrix {
    pub(crate) fn from_parts(
        entries: DMatrix<f64>,
        kind: KernelKind,
        dim: usize,
        noise: Option<NoiseModel>,
        shots: Option<ShotConfig>,
    ) -> Self {
        debug_assert!(entries.is_square());
        Self {
            entries,
            kind,
            dim,
            noise,
            shots,
        }
    }

    /// Wraps externally supplied entries (e.g. read back from disk).
    ///
    /// Entries must be square, exactly symmetric and lie in `[0, 1]`; a
    /// `Worst` matrix must hold `1/D` everywhere.
    pub fn from_entries(entries: DMatrix<f64>, kind: KernelKind, dim: usize) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                actual: entries.ncols(),
            });
        }
        if dim < 2 {
            return Err(invalid("dim", format!("D must be at least 2, got {dim}")));
        }
        let n = entries.nrows();
        for i in 0..n {
            for j in 0..n {
                let v = entries[(i, j)];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::KernelOutOfRange { value: v });
                }
                if v != entries[(j, i)] {
                    return Err(invalid(
                        "entries",
                        format!("matrix is not symmetric at ({i}, {j})"),
                    ));
                }
            }
        }
        if kind == KernelKind::Worst {
            let w = 1.0 / dim as f64;
            if entries.iter().any(|&v| v != w) {
                return Err(invalid("entries", "worst kernel entries must all equal 1/D"));
            }
        }
        Ok(Self::from_parts(entries, kind, dim, None, None))
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.noise = Some(noise);
        self
    }

    pub fn with_shots(mut self, shots: ShotConfig) -> Self {
        self.shots = Some(shots);
        self
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn noise(&self) -> Option<&NoiseModel> {
        self.noise.as_ref()
    }

    pub fn shots(&self) -> Option<&ShotConfig> {
        self.shots.as_ref()
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.n();
        (0..n).all(|i| (0..i).all(|j| self.entries[(i, j)] == self.entries[(j, i)]))
    }

    pub(crate) fn expect_kind(&self, expected: KernelKind) -> Result<()> {
        if self.kind == expected {
            Ok(())
        } else {
            Err(Error::WrongKernelKind {
                expected,
                actual: self.kind,
            })
        }
    }
}
