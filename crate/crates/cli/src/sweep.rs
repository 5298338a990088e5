//! `sweep` subcommand: per noisy-layer count, fit the noisy hypothesis and
//! compare it against the constant worst-case hypothesis and every bound.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use qkernel_core::bounds::{
    corollary1_bound, demarcation_layers, lemma2_from_norm, theorem1_bound, theorem2_bound,
    geometric_difference_exact, BoundInputs, BoundValue,
};
use qkernel_core::data::format_float;
use qkernel_core::krr::{
    empirical_difference, fit, fitted_values, misclassification_rate, predict_rows,
    worst_hypothesis,
};
use qkernel_core::noise::{
    apply_depolarization, compose_depolarization, depolarize_block, sample_estimated_block,
    sample_estimated_kernel, worst_kernel, TEST_DOMAIN,
};
use qkernel_core::statevector::{cross_kernel, embed_all, gram_from_states};
use qkernel_core::{CircuitConfig, KernelKind, KernelMatrix, LabeledSample, ShotConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, SCHEMA_VERSION};
use crate::dataset::{check_width, create_out_dir, prepare, write_json};
use crate::error::{CliError, CliResult};

pub const SWEEP_CSV: &str = "sweep.csv";
pub const HISTOGRAM_CSV: &str = "sweep_histogram.csv";
pub const SUMMARY_JSON: &str = "sweep_summary.json";

pub const HISTOGRAM_BINS: usize = 20;

/// Column order of `sweep.csv`; `wall_time` is always last.
pub const SWEEP_COLUMNS: &[&str] = &[
    "L",
    "p",
    "train_error",
    "test_error",
    "hbar",
    "hbar_train_error",
    "hbar_test_error",
    "h_mean",
    "h_max",
    "h_min",
    "empirical_difference",
    "test_mean_abs_diff",
    "test_max_abs_diff",
    "geometric_difference",
    "lemma2_bound",
    "theorem1_bound",
    "corollary1_bound",
    "theorem2_bound",
    "est_train_error",
    "est_test_error",
    "est_h_mean",
    "est_indefinite",
    "wall_time",
];

/// Results for the shot-estimated kernel at one `L`.
#[derive(Debug, Clone, Serialize)]
pub struct EstimatedColumns {
    pub train_error: f64,
    pub test_error: f64,
    pub h_mean: f64,
    /// The regularized estimated Gram matrix was indefinite.
    pub indefinite: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub layers: usize,
    pub p: f64,
    pub train_error: f64,
    pub test_error: f64,
    pub hbar: f64,
    pub hbar_train_error: f64,
    pub hbar_test_error: f64,
    pub h_mean: f64,
    pub h_max: f64,
    pub h_min: f64,
    /// Training-set mean `|h~ - h_bar|`.
    pub empirical_difference: f64,
    pub test_mean_abs_diff: f64,
    pub test_max_abs_diff: f64,
    /// Exact `‖(K~ + lambda I)^{-1} - (K_bar + lambda I)^{-1}‖_2`.
    pub geometric_difference: f64,
    pub lemma2_bound: f64,
    pub theorem1_bound: BoundValue,
    pub corollary1_bound: BoundValue,
    pub theorem2_bound: Option<BoundValue>,
    pub estimated: Option<EstimatedColumns>,
    /// Test-set values of `h~`.
    #[serde(skip)]
    pub test_values: Vec<f64>,
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub schema_version: u32,
    pub layers: Vec<usize>,
    pub layer_rate: f64,
    pub lambda: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub num_qubits: usize,
    pub seed: u64,
    pub shots: Option<u64>,
    pub train_label_sum: f64,
    pub hbar: f64,
    /// `ln n / (-2 ln(1 - p~))` with `n = n_train`; absent for `p~` of 0 or 1.
    pub demarcation_layers: Option<f64>,
    /// First `L` whose training error exceeds the midpoint between the
    /// smallest training error of the sweep and the training error of `h_bar`.
    pub phase_transition_layer: Option<usize>,
    pub phase_transition_threshold: f64,
    pub indefinite_estimated_fits: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub records: Vec<SweepRecord>,
    pub summary: SweepSummary,
}

/// Everything that does not depend on `L`.
struct Shared {
    train: LabeledSample,
    test: LabeledSample,
    ideal_train: KernelMatrix,
    ideal_test: DMatrix<f64>,
    dim: usize,
}

fn stats(values: &[f64]) -> (f64, f64, f64) {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    (mean, max, min)
}

fn sweep_one(shared: &Shared, cfg: &ExperimentConfig, layers: usize) -> CliResult<SweepRecord> {
    let start = Instant::now();
    let ctx = CliError::at_layers(layers);
    let Shared {
        train,
        test,
        ideal_train,
        ideal_test,
        dim,
    } = shared;
    let dim = *dim;
    let noise = compose_depolarization(cfg.layer_rate, layers).map_err(&ctx)?;
    let noisy = apply_depolarization(ideal_train, &noise).map_err(&ctx)?;
    let noisy_test = depolarize_block(ideal_test, &noise, dim);

    let model = fit(&noisy, train, cfg.lambda).map_err(&ctx)?;
    let train_values = fitted_values(&model, &noisy).map_err(&ctx)?;
    let test_values = predict_rows(&model, &noisy_test, KernelKind::Noisy).map_err(&ctx)?;
    let hbar = worst_hypothesis(train, cfg.lambda, dim)
        .map_err(&ctx)?
        .constant_value;
    let hbar_train = vec![hbar; train.len()];
    let hbar_test = vec![hbar; test.len()];

    let (h_mean, h_max, h_min) = stats(&test_values);
    let test_max_abs_diff = test_values
        .iter()
        .map(|v| (v - hbar).abs())
        .fold(0.0, f64::max);

    let worst = worst_kernel(train.len(), dim).map_err(&ctx)?;
    let m_norm = geometric_difference_exact(&noisy, &worst, cfg.lambda).map_err(&ctx)?;
    let inputs =
        BoundInputs::new(train.len(), cfg.lambda, noise, dim, cfg.delta).map_err(&ctx)?;
    let lemma2 = lemma2_from_norm(m_norm, &inputs);
    let theorem2 = match cfg.shots {
        Some(m) => Some(
            theorem2_bound(&inputs.with_shots(m).map_err(&ctx)?)
                .map_err(&ctx)?
                .bound,
        ),
        None => None,
    };

    let estimated = match cfg.shots {
        Some(m) => {
            let shots = ShotConfig::new(m, cfg.seed).map_err(&ctx)?;
            let est = sample_estimated_kernel(&noisy, &shots).map_err(&ctx)?;
            let est_test = sample_estimated_block(&noisy_test, &shots, TEST_DOMAIN).map_err(&ctx)?;
            let est_model = fit(&est, train, cfg.lambda).map_err(&ctx)?;
            let est_train = fitted_values(&est_model, &est).map_err(&ctx)?;
            let est_values =
                predict_rows(&est_model, &est_test, KernelKind::Estimated).map_err(&ctx)?;
            Some(EstimatedColumns {
                train_error: misclassification_rate(&est_train, train.labels()).map_err(&ctx)?,
                test_error: misclassification_rate(&est_values, test.labels()).map_err(&ctx)?,
                h_mean: stats(&est_values).0,
                indefinite: est_model.warning().is_some(),
            })
        }
        None => None,
    };

    Ok(SweepRecord {
        layers,
        p: noise.composed_rate(),
        train_error: misclassification_rate(&train_values, train.labels()).map_err(&ctx)?,
        test_error: misclassification_rate(&test_values, test.labels()).map_err(&ctx)?,
        hbar,
        hbar_train_error: misclassification_rate(&hbar_train, train.labels()).map_err(&ctx)?,
        hbar_test_error: misclassification_rate(&hbar_test, test.labels()).map_err(&ctx)?,
        h_mean,
        h_max,
        h_min,
        empirical_difference: empirical_difference(&train_values, &hbar_train).map_err(&ctx)?,
        test_mean_abs_diff: empirical_difference(&test_values, &hbar_test).map_err(&ctx)?,
        test_max_abs_diff,
        geometric_difference: m_norm,
        lemma2_bound: lemma2.bound.value().expect("exact refinement is always finite"),
        theorem1_bound: theorem1_bound(&inputs).bound,
        corollary1_bound: corollary1_bound(&inputs).bound,
        theorem2_bound: theorem2,
        estimated,
        test_values,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Midpoint-crossing rule on the training error, over records sorted by `L`.
pub fn detect_phase_transition(records: &[SweepRecord]) -> (Option<usize>, f64) {
    let Some(first) = records.first() else {
        return (None, f64::NAN);
    };
    let floor = records
        .iter()
        .map(|r| r.train_error)
        .fold(f64::INFINITY, f64::min);
    let threshold = 0.5 * (floor + first.hbar_train_error);
    let layer = records
        .iter()
        .find(|r| r.train_error > threshold)
        .map(|r| r.layers);
    (layer, threshold)
}

/// Runs the sweep in memory on already prepared samples.
pub fn run_sweep_on(
    cfg: &ExperimentConfig,
    train: LabeledSample,
    test: LabeledSample,
) -> CliResult<SweepOutput> {
    check_width(&train, cfg.num_qubits)?;
    check_width(&test, cfg.num_qubits)?;
    let circuit = CircuitConfig::new(cfg.num_qubits, 1)?;
    let train_states = embed_all(train.points(), &circuit)?;
    let test_states = embed_all(test.points(), &circuit)?;
    let shared = Shared {
        ideal_train: gram_from_states(&train_states)?,
        ideal_test: cross_kernel(&test_states, &train_states)?,
        train,
        test,
        dim: circuit.dim(),
    };
    let mut layers = cfg.layer_values();
    layers.sort_unstable();
    let records = layers
        .par_iter()
        .map(|&l| sweep_one(&shared, cfg, l))
        .collect::<CliResult<Vec<_>>>()?;
    let (phase_transition_layer, phase_transition_threshold) = detect_phase_transition(&records);
    let summary = SweepSummary {
        schema_version: SCHEMA_VERSION,
        layers,
        layer_rate: cfg.layer_rate,
        lambda: cfg.lambda,
        n_train: shared.train.len(),
        n_test: shared.test.len(),
        num_qubits: cfg.num_qubits,
        seed: cfg.seed,
        shots: cfg.shots,
        train_label_sum: shared.train.label_sum(),
        hbar: records[0].hbar,
        demarcation_layers: demarcation_layers(shared.train.len(), cfg.layer_rate).ok(),
        phase_transition_layer,
        phase_transition_threshold,
        indefinite_estimated_fits: records
            .iter()
            .filter(|r| r.estimated.as_ref().is_some_and(|e| e.indefinite))
            .map(|r| r.layers)
            .collect(),
    };
    Ok(SweepOutput { records, summary })
}

fn bound_cell(v: &BoundValue) -> String {
    match v {
        BoundValue::Finite(x) => format_float(*x),
        BoundValue::Uninformative => "uninformative".to_string(),
    }
}

pub fn sweep_csv(records: &[SweepRecord]) -> String {
    let mut out = SWEEP_COLUMNS.join(",");
    out.push('\n');
    for r in records {
        let est = r.estimated.as_ref();
        let opt = |v: Option<f64>| v.map(format_float).unwrap_or_default();
        let cells = [
            r.layers.to_string(),
            format_float(r.p),
            format_float(r.train_error),
            format_float(r.test_error),
            format_float(r.hbar),
            format_float(r.hbar_train_error),
            format_float(r.hbar_test_error),
            format_float(r.h_mean),
            format_float(r.h_max),
            format_float(r.h_min),
            format_float(r.empirical_difference),
            format_float(r.test_mean_abs_diff),
            format_float(r.test_max_abs_diff),
            format_float(r.geometric_difference),
            format_float(r.lemma2_bound),
            bound_cell(&r.theorem1_bound),
            bound_cell(&r.corollary1_bound),
            r.theorem2_bound.as_ref().map(bound_cell).unwrap_or_default(),
            opt(est.map(|e| e.train_error)),
            opt(est.map(|e| e.test_error)),
            opt(est.map(|e| e.h_mean)),
            est.map(|e| e.indefinite.to_string()).unwrap_or_default(),
            format!("{:.6}", r.wall_time),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Fixed bins on `[-1, 1]`; `1.0` lands in the last bin.
pub fn histogram(values: &[f64]) -> [usize; HISTOGRAM_BINS] {
    let mut counts = [0; HISTOGRAM_BINS];
    let width = 2.0 / HISTOGRAM_BINS as f64;
    for &v in values {
        let bin = (((v + 1.0) / width).floor() as isize).clamp(0, HISTOGRAM_BINS as isize - 1);
        counts[bin as usize] += 1;
    }
    counts
}

pub fn histogram_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from("L,bin_lo,bin_hi,count,relative_frequency\n");
    let width = 2.0 / HISTOGRAM_BINS as f64;
    for r in records {
        let total = r.test_values.len() as f64;
        for (b, count) in histogram(&r.test_values).iter().enumerate() {
            let lo = -1.0 + b as f64 * width;
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.layers,
                format_float(lo),
                format_float(lo + width),
                count,
                format_float(*count as f64 / total)
            );
        }
    }
    out
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::output(path, e))
}

/// `sweep` subcommand.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> CliResult<SweepOutput> {
    let prepared = prepare(cfg)?;
    let output = run_sweep_on(cfg, prepared.train, prepared.test)?;
    create_out_dir(&cfg.out_dir)?;
    write_text(&cfg.out_dir.join(SWEEP_CSV), &sweep_csv(&output.records))?;
    write_text(&cfg.out_dir.join(HISTOGRAM_CSV), &histogram_csv(&output.records))?;
    write_json(&cfg.out_dir.join(SUMMARY_JSON), &output.summary)?;
    Ok(output)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_edges() {
        let h = histogram(&[-1.0, -0.85, 0.0, 0.999, 1.0]);
        assert_eq!(h[0], 1);
        assert_eq!(h[1], 1);
        assert_eq!(h[10], 1);
        assert_eq!(h[19], 2);
    }

    #[test]
    fn header_is_pinned() {
        assert_eq!(
            sweep_csv(&[]),
            "L,p,train_error,test_error,hbar,hbar_train_error,hbar_test_error,h_mean,h_max,h_min,\
             empirical_difference,test_mean_abs_diff,test_max_abs_diff,geometric_difference,\
             lemma2_bound,theorem1_bound,corollary1_bound,theorem2_bound,est_train_error,\
             est_test_error,est_h_mean,est_indefinite,wall_time\n"
        );
    }
}
