//! `kernel` subcommand and the kernel-matrix CSV format (no header, one
//! matrix row per line, 17 significant digits).

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use qkernel_core::data::format_float;
use qkernel_core::noise::{apply_depolarization, compose_depolarization, sample_estimated_kernel};
use qkernel_core::statevector::gram_matrix;
use qkernel_core::{CircuitConfig, KernelMatrix, ShotConfig};
use serde::Serialize;

use crate::config::{ExperimentConfig, SCHEMA_VERSION};
use crate::dataset::{check_width, create_out_dir, read_cache, write_json};
use crate::error::{CliError, CliResult};

pub fn write_kernel_csv<W: Write>(out: W, m: &DMatrix<f64>) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in m.row_iter() {
        w.write_record(row.iter().map(|&v| format_float(v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_kernel_csv<R: Read>(input: R) -> Result<DMatrix<f64>, String> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        let row = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| format!("row {i}: bad number {f:?}")))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err("ragged kernel matrix".into());
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelHeader {
    pub schema_version: u32,
    pub kind: &'static str,
    pub n: usize,
    pub dim: usize,
    pub num_qubits: usize,
    pub layer_rate: Option<f64>,
    pub layers: Option<usize>,
    pub p: Option<f64>,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
}

fn save(dir: &Path, stem: &str, kernel: &KernelMatrix, cfg: &ExperimentConfig) -> CliResult<()> {
    let csv_path = dir.join(format!("{stem}.csv"));
    let file = File::create(&csv_path).map_err(|e| CliError::output(&csv_path, e))?;
    write_kernel_csv(BufWriter::new(file), kernel.entries())
        .map_err(|e| CliError::output(&csv_path, e))?;
    let header = KernelHeader {
        schema_version: SCHEMA_VERSION,
        kind: kernel.kind().as_str(),
        n: kernel.n(),
        dim: kernel.dim(),
        num_qubits: cfg.num_qubits,
        layer_rate: kernel.noise().map(|nm| nm.layer_rate()),
        layers: kernel.noise().map(|nm| nm.noisy_layers()),
        p: kernel.noise().map(|nm| nm.composed_rate()),
        shots: kernel.shots().map(|s| s.shots()),
        seed: kernel.shots().map(|s| s.master_seed()),
    };
    write_json(&dir.join(format!("{stem}.json")), &header)
}

/// Writes `kernel_ideal`, `kernel_noisy_L{L}` and, with shots,
/// `kernel_estimated_L{L}` for the cached training features.
pub fn cmd_kernel(cfg: &ExperimentConfig) -> CliResult<Vec<String>> {
    let (train, _) = read_cache(&cfg.out_dir)?;
    check_width(&train, cfg.num_qubits)?;
    create_out_dir(&cfg.out_dir)?;
    let circuit = CircuitConfig::new(cfg.num_qubits, 1)?;
    let ideal = gram_matrix(train.points(), &circuit)?;
    let mut written = vec!["kernel_ideal".to_string()];
    save(&cfg.out_dir, "kernel_ideal", &ideal, cfg)?;
    for layers in cfg.layer_values() {
        let ctx = CliError::at_layers(layers);
        let noise = compose_depolarization(cfg.layer_rate, layers).map_err(&ctx)?;
        let noisy = apply_depolarization(&ideal, &noise).map_err(&ctx)?;
        let stem = format!("kernel_noisy_L{layers}");
        save(&cfg.out_dir, &stem, &noisy, cfg)?;
        written.push(stem);
        if let Some(m) = cfg.shots {
            let shots = ShotConfig::new(m, cfg.seed).map_err(&ctx)?;
            let est = sample_estimated_kernel(&noisy, &shots).map_err(&ctx)?;
            let stem = format!("kernel_estimated_L{layers}");
            save(&cfg.out_dir, &stem, &est, cfg)?;
            written.push(stem);
        }
    }
    Ok(written)
}
