use std::path::PathBuf;

use thiserror::Error;

use crate::kernel::KernelKind;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("{num_qubits} qubits exceeds the configured cap of {cap}")]
    TooManyQubits { num_qubits: usize, cap: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("expected a {expected:?} kernel matrix, got {actual:?}")]
    WrongKernelKind {
        expected: KernelKind,
        actual: KernelKind,
    },

    #[error("kernel value {value} lies outside [0, 1] beyond rounding tolerance")]
    KernelOutOfRange { value: f64 },

    #[error("state is not normalized: squared norm {norm_sqr}")]
    NotNormalized { norm_sqr: f64 },

    #[error(
        "regularized kernel system is numerically singular (minimum eigenvalue {min_eigenvalue:e}); \
         too few measurement shots for this lambda"
    )]
    SingularSystem { min_eigenvalue: f64 },

    #[error("linear solve residual {residual:e} exceeds tolerance")]
    ResidualTooLarge { residual: f64 },

    #[error("eigen-decomposition did not converge")]
    EigenNoConvergence,

    #[error("label {value} at index {index} is not in {{-1, +1}}")]
    NonBinaryLabel { index: usize, value: f64 },

    #[error("label {value} at index {index} lies outside [-1, 1]")]
    LabelOutOfRange { index: usize, value: f64 },

    #[error("IDX file has bad magic number {found:#010x} (expected {expected:#010x})")]
    BadMagic { expected: u32, found: u32 },

    #[error("IDX data truncated: need {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },

    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("no samples remain after filtering to classes {class_a} and {class_b}")]
    EmptySelection { class_a: u8, class_b: u8 },

    #[error("PCA needs rank {required} but the training data has rank {found}")]
    RankDeficient { required: usize, found: usize },

    #[error("not enough data: requested {requested}, available {available}")]
    InsufficientData { requested: usize, available: usize },

    #[error("balanced split needs even sizes, got n_train={n_train}, n_test={n_test}")]
    OddBalancedSplit { n_train: usize, n_test: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
