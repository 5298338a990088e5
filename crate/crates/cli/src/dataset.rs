//! Turns a dataset spec into train/test samples and the feature cache.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use qkernel_core::data::{
    self, binarize_labels, filter_binary, fit_pca, load_idx, split_indices,
    synthesize_concept_labels, synthetic_points, ConceptCircuit, FeatureTable,
};
use qkernel_core::{CircuitConfig, FeatureVector, LabeledSample};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{DatasetSpec, ExperimentConfig, SCHEMA_VERSION};
use crate::error::{CliError, CliResult};

pub const TRAIN_FEATURES: &str = "train_features.csv";
pub const TEST_FEATURES: &str = "test_features.csv";
pub const DATA_MANIFEST: &str = "data_manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct ClassMapping {
    pub positive: u8,
    pub negative: u8,
}

#[derive(Debug, Clone, Serialize)]
pub struct DataManifest {
    pub schema_version: u32,
    pub dataset: &'static str,
    pub seed: u64,
    pub split_seed: u64,
    pub num_qubits: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub balance: bool,
    pub train_label_sum: f64,
    pub test_label_sum: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class_mapping: Option<ClassMapping>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pca_scale: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pca_explained_variance: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concept: Option<ConceptCircuit>,
}

#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: LabeledSample,
    pub test: LabeledSample,
    pub train_ids: Vec<u64>,
    pub test_ids: Vec<u64>,
    pub manifest: DataManifest,
}

/// Independent sub-seeds for point generation, the concept and the split.
fn sub_seeds(seed: u64) -> [u64; 3] {
    use rand::{RngCore, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    [rng.next_u64(), rng.next_u64(), rng.next_u64()]
}

fn pick<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}

pub fn prepare(cfg: &ExperimentConfig) -> CliResult<PreparedData> {
    let [points_seed, concept_seed, split_seed] = sub_seeds(cfg.seed);
    let n = cfg.num_qubits;
    let mut manifest = DataManifest {
        schema_version: SCHEMA_VERSION,
        dataset: "synthetic",
        seed: cfg.seed,
        split_seed,
        num_qubits: n,
        n_train: cfg.n_train,
        n_test: cfg.n_test,
        balance: cfg.balance,
        train_label_sum: 0.0,
        test_label_sum: 0.0,
        class_mapping: None,
        pca_scale: None,
        pca_explained_variance: None,
        concept: None,
    };

    let (train, test, train_ids, test_ids) = match &cfg.dataset {
        DatasetSpec::Synthetic {
            concept_layers,
            concept_seed: explicit,
        } => {
            let circuit = CircuitConfig::new(n, 1)?;
            let concept =
                ConceptCircuit::random(n, *concept_layers, explicit.unwrap_or(concept_seed))?;
            let pool = synthetic_points(cfg.n_train + cfg.n_test, n, points_seed);
            let labels = binarize_labels(&synthesize_concept_labels(&pool, &concept, &circuit)?);
            let (tr, te) = split_indices(&labels, cfg.n_train, cfg.n_test, split_seed, cfg.balance)?;
            manifest.concept = Some(concept);
            (
                LabeledSample::new(pick(&pool, &tr), pick(&labels, &tr))?,
                LabeledSample::new(pick(&pool, &te), pick(&labels, &te))?,
                tr.iter().map(|&i| i as u64).collect(),
                te.iter().map(|&i| i as u64).collect(),
            )
        }
        DatasetSpec::FashionMnist {
            images,
            labels,
            class_a,
            class_b,
        } => {
            manifest.dataset = "fashion_mnist";
            let raw = load_idx(images, labels)?;
            let sel = filter_binary(&raw, *class_a, *class_b)?;
            let (tr, te) =
                split_indices(&sel.labels, cfg.n_train, cfg.n_test, split_seed, cfg.balance)?;
            let pca = fit_pca(&pick(&sel.images, &tr), n)?;
            let project = |idx: &[usize]| -> CliResult<Vec<FeatureVector>> {
                Ok(pca.project_all(&pick(&sel.images, idx))?)
            };
            let train_points = project(&tr)?;
            let test_points = project(&te)?;
            manifest.class_mapping = Some(ClassMapping {
                positive: *class_a,
                negative: *class_b,
            });
            manifest.pca_scale = Some(pca.scale().iter().copied().collect());
            manifest.pca_explained_variance =
                Some(pca.explained_variance().iter().copied().collect());
            let ids = |idx: &[usize]| idx.iter().map(|&i| sel.source_indices[i] as u64).collect();
            (
                LabeledSample::new(train_points, pick(&sel.labels, &tr))?,
                LabeledSample::new(test_points, pick(&sel.labels, &te))?,
                ids(&tr),
                ids(&te),
            )
        }
    };
    manifest.train_label_sum = train.label_sum();
    manifest.test_label_sum = test.label_sum();
    Ok(PreparedData {
        train,
        test,
        train_ids,
        test_ids,
        manifest,
    })
}

pub(crate) fn create_out_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::output(dir, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::output(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::output(path, e))
}

fn write_table(path: &Path, sample: &LabeledSample, ids: &[u64]) -> CliResult<()> {
    let table = FeatureTable {
        ids: ids.to_vec(),
        labels: sample.labels().to_vec(),
        points: sample.points().to_vec(),
    };
    let file = File::create(path).map_err(|e| CliError::output(path, e))?;
    data::write_feature_csv(BufWriter::new(file), &table)
        .map_err(|e| CliError::output(path, e))
}

/// `data` subcommand: writes both feature caches and the manifest.
pub fn cmd_data(cfg: &ExperimentConfig) -> CliResult<PreparedData> {
    let prepared = prepare(cfg)?;
    create_out_dir(&cfg.out_dir)?;
    write_table(&cfg.out_dir.join(TRAIN_FEATURES), &prepared.train, &prepared.train_ids)?;
    write_table(&cfg.out_dir.join(TEST_FEATURES), &prepared.test, &prepared.test_ids)?;
    write_json(&cfg.out_dir.join(DATA_MANIFEST), &prepared.manifest)?;
    Ok(prepared)
}

fn read_table(path: &Path) -> CliResult<(LabeledSample, Vec<u64>)> {
    let file = File::open(path).map_err(|e| {
        CliError::Data(qkernel_core::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })?;
    let table = data::read_feature_csv(std::io::BufReader::new(file)).map_err(|e| {
        CliError::Output {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    })?;
    Ok((LabeledSample::new(table.points, table.labels)?, table.ids))
}

/// Reads the caches written by [`cmd_data`].
pub fn read_cache(dir: &Path) -> CliResult<(LabeledSample, LabeledSample)> {
    let (train, _) = read_table(&dir.join(TRAIN_FEATURES))?;
    let (test, _) = read_table(&dir.join(TEST_FEATURES))?;
    Ok((train, test))
}

/// Every point must have one feature per qubit.
pub(crate) fn check_width(sample: &LabeledSample, n: usize) -> CliResult<()> {
    if let Some(bad) = sample.points().par_iter().find_any(|p| p.len() != n) {
        return Err(CliError::Config(format!(
            "feature width {} does not match num_qubits {n}",
            bad.len()
        )));
    }
    Ok(())
}
