//! Dataset ingestion and preparation: IDX archives, PCA features, synthetic
//! points with quantum-concept labels, seeded splits and the feature cache.

pub mod cache;
pub mod concept;
pub mod idx;
pub mod pca;
pub mod split;

pub use cache::{format_float, read_feature_csv, write_feature_csv, FeatureTable};
pub use concept::{
    binarize_labels, synthesize_concept_labels, synthetic_points, ConceptCircuit,
};
pub use idx::{filter_binary, load_idx, BinarySelection, RawImageSet};
pub use pca::{fit_pca, PcaProjector, PCA_COMPONENTS};
pub use split::{split, split_indices};

/// Fashion-MNIST class index of "dress".
pub const DRESS: u8 = 3;
/// Fashion-MNIST class index of "shirt".
pub const SHIRT: u8 = 6;
