//! Fidelity-kernel simulation under global depolarizing noise and finite
//! shots, clipped kernel ridge regression, and the concentration bounds that
//! predict when noisy kernel methods collapse to a constant hypothesis.

pub mod bounds;
pub mod data;
pub mod error;
pub mod kernel;
pub mod krr;
pub mod linalg;
pub mod noise;
pub mod statevector;

pub use error::{Error, Result};
pub use kernel::{KernelKind, KernelMatrix};
pub use krr::{LabeledSample, RidgeModel, WorstHypothesis};
pub use noise::{NoiseModel, ShotConfig};
pub use statevector::{CircuitConfig, EncodedState, FeatureVector};
