//! Experiment configuration: one JSON document, versioned, unknown keys rejected.

use std::path::{Path, PathBuf};

use qkernel_core::data::{DRESS, SHIRT};
use qkernel_core::statevector::DEFAULT_MAX_QUBITS;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    /// Uniform points in `[-1, 1]^N` labelled by the sign of a seeded
    /// quantum concept.
    Synthetic {
        #[serde(default = "default_concept_layers")]
        concept_layers: usize,
        /// Defaults to the experiment seed.
        #[serde(default)]
        concept_seed: Option<u64>,
    },
    /// IDX image and label archives, optionally gzipped.
    FashionMnist {
        images: PathBuf,
        labels: PathBuf,
        #[serde(default = "default_class_a")]
        class_a: u8,
        #[serde(default = "default_class_b")]
        class_b: u8,
    },
}

fn default_concept_layers() -> usize {
    qkernel_core::data::concept::DEFAULT_CONCEPT_LAYERS
}

fn default_class_a() -> u8 {
    DRESS
}

fn default_class_b() -> u8 {
    SHIRT
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec::Synthetic {
            concept_layers: default_concept_layers(),
            concept_seed: None,
        }
    }
}

/// Noisy-layer counts, as an explicit list or an inclusive stepped range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LayerSpec {
    List(Vec<usize>),
    Range {
        start: usize,
        end: usize,
        #[serde(default = "one")]
        step: usize,
    },
}

fn one() -> usize {
    1
}

impl LayerSpec {
    pub fn values(&self) -> Vec<usize> {
        match self {
            LayerSpec::List(v) => v.clone(),
            LayerSpec::Range { start, end, step } => {
                (*start..=*end).step_by((*step).max(1)).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub dataset: DatasetSpec,
    pub num_qubits: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Enforce equal `±1` counts in each split.
    pub balance: bool,
    pub layer_rate: f64,
    pub layers: LayerSpec,
    pub lambda: f64,
    pub delta: f64,
    /// Shots per kernel entry for the estimated-kernel columns of the sweep.
    pub shots: Option<u64>,
    /// Shot counts of the bounds grid.
    pub bound_shots: Vec<u64>,
    /// Sample sizes of the region map.
    pub region_sizes: Vec<usize>,
    /// Layer counts of the region map.
    pub region_layers: LayerSpec,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            dataset: DatasetSpec::default(),
            num_qubits: 10,
            n_train: 500,
            n_test: 500,
            balance: false,
            layer_rate: 0.1,
            layers: LayerSpec::List(vec![8, 16, 24, 32, 40]),
            lambda: 0.5,
            delta: 0.01,
            shots: None,
            bound_shots: vec![1_000_000, 1_000_000_000, 1_000_000_000_000],
            region_sizes: vec![10, 100, 500, 1000, 10_000, 100_000, 1_000_000],
            region_layers: LayerSpec::Range {
                start: 1,
                end: 100,
                step: 1,
            },
            seed: 7,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn layer_values(&self) -> Vec<usize> {
        self.layers.values()
    }

    /// Checks every module precondition up front.
    pub fn validate(&self) -> CliResult<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.num_qubits == 0 || self.num_qubits > DEFAULT_MAX_QUBITS {
            return Err(bad(format!(
                "num_qubits must lie in 1..={DEFAULT_MAX_QUBITS}, got {}",
                self.num_qubits
            )));
        }
        if self.n_train < 2 || self.n_test == 0 {
            return Err(bad("need n_train >= 2 and n_test >= 1"));
        }
        if self.balance && (!self.n_train.is_multiple_of(2) || !self.n_test.is_multiple_of(2)) {
            return Err(bad(format!(
                "balanced splits need even sizes, got n_train={} n_test={}",
                self.n_train, self.n_test
            )));
        }
        if !(0.0..=1.0).contains(&self.layer_rate) {
            return Err(bad(format!(
                "layer_rate must lie in [0, 1], got {}",
                self.layer_rate
            )));
        }
        let layers = self.layer_values();
        if layers.is_empty() {
            return Err(bad("layers is empty"));
        }
        if layers.contains(&0) {
            return Err(bad("layers must all be >= 1 (L=0 is not a noisy circuit)"));
        }
        let mut sorted = layers.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != layers.len() {
            return Err(bad("layers contains duplicates"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(bad(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(bad(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.shots == Some(0) || self.bound_shots.contains(&0) {
            return Err(bad("shot counts must be >= 1"));
        }
        if self.region_sizes.iter().any(|&n| n < 2) {
            return Err(bad("region_sizes entries must be >= 2"));
        }
        if self.region_layers.values().contains(&0) {
            return Err(bad("region_layers must all be >= 1"));
        }
        if let DatasetSpec::FashionMnist {
            class_a, class_b, ..
        } = &self.dataset
        {
            if class_a == class_b || *class_a > 9 || *class_b > 9 {
                return Err(bad("class_a and class_b must be distinct indices 0..=9"));
            }
            if self.num_qubits > qkernel_core::data::PCA_COMPONENTS {
                return Err(bad(format!(
                    "image features have {} PCA components; num_qubits must not exceed that",
                    qkernel_core::data::PCA_COMPONENTS
                )));
            }
        }
        Ok(())
    }
}
