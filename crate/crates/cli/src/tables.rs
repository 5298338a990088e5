//! `bounds` and `regions` subcommands.

use qkernel_core::bounds::{
    classify_region, corollary1_bound, geometric_difference_bound, theorem1_bound,
    theorem2_bound, BoundInputs, BoundReport, BoundValue,
};
use qkernel_core::data::format_float;
use qkernel_core::noise::compose_depolarization;
use qkernel_core::NoiseModel;

use crate::config::ExperimentConfig;
use crate::dataset::create_out_dir;
use crate::error::{CliError, CliResult};

pub const BOUNDS_CSV: &str = "bounds.csv";
pub const REGIONS_CSV: &str = "regions.csv";

pub const BOUNDS_COLUMNS: &[&str] = &[
    "layer_rate",
    "L",
    "p",
    "m",
    "z",
    "theorem1_bound",
    "theorem1_informative",
    "theorem1_dimension_term",
    "theorem1_confidence_term",
    "corollary1_bound",
    "corollary1_informative",
    "corollary1_dimension_term",
    "corollary1_confidence_term",
    "geometric_bound",
    "theorem2_z",
    "theorem2_bound",
    "theorem2_informative",
    "shot_term",
    "probability_deficit",
    "success_probability",
];

pub const REGIONS_COLUMNS: &[&str] = &[
    "n",
    "L",
    "layer_rate",
    "num_qubits",
    "threshold_layers",
    "verdict",
    "regime",
    "always_fails",
];

fn cell(v: BoundValue) -> String {
    match v {
        BoundValue::Finite(x) => format_float(x),
        BoundValue::Uninformative => "uninformative".to_string(),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

/// One bounds row per `(noise, m)`.
#[derive(Debug, Clone)]
pub struct BoundsRow {
    pub noise: NoiseModel,
    pub shots: u64,
    pub theorem1: BoundReport,
    pub corollary1: BoundReport,
    pub theorem2: BoundReport,
    pub geometric: BoundValue,
}

impl BoundsRow {
    fn cells(&self) -> Vec<String> {
        vec![
            format_float(self.noise.layer_rate()),
            self.noise.noisy_layers().to_string(),
            format_float(self.noise.composed_rate()),
            self.shots.to_string(),
            format_float(self.theorem1.z),
            cell(self.theorem1.bound),
            self.theorem1.informative.to_string(),
            format_float(self.theorem1.terms.dimension_term),
            format_float(self.theorem1.terms.confidence_term),
            cell(self.corollary1.bound),
            self.corollary1.informative.to_string(),
            format_float(self.corollary1.terms.dimension_term),
            format_float(self.corollary1.terms.confidence_term),
            cell(self.geometric),
            format_float(self.theorem2.z),
            cell(self.theorem2.bound),
            self.theorem2.informative.to_string(),
            opt(self.theorem2.terms.shot_term),
            opt(self.theorem2.terms.probability_deficit),
            opt(self.theorem2.terms.success_probability),
        ]
    }
}

/// Grid over the configured `L` values plus the fully depolarized endpoint
/// (`p~ = 1`, `L = 1`), crossed with every shot count.
pub fn bounds_grid(cfg: &ExperimentConfig) -> CliResult<Vec<BoundsRow>> {
    let mut noises = cfg
        .layer_values()
        .into_iter()
        .map(|l| compose_depolarization(cfg.layer_rate, l))
        .collect::<Result<Vec<_>, _>>()?;
    noises.push(compose_depolarization(1.0, 1)?);
    let mut rows = Vec::new();
    for noise in noises {
        let inputs = BoundInputs::new(cfg.n_train, cfg.lambda, noise, cfg.dim(), cfg.delta)?;
        for &m in &cfg.bound_shots {
            rows.push(BoundsRow {
                noise,
                shots: m,
                theorem1: theorem1_bound(&inputs),
                corollary1: corollary1_bound(&inputs),
                theorem2: theorem2_bound(&inputs.with_shots(m)?)?,
                geometric: geometric_difference_bound(&inputs),
            });
        }
    }
    Ok(rows)
}

pub fn bounds_csv(rows: &[BoundsRow]) -> String {
    let mut out = BOUNDS_COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.cells().join(","));
        out.push('\n');
    }
    out
}

pub fn cmd_bounds(cfg: &ExperimentConfig) -> CliResult<Vec<BoundsRow>> {
    let rows = bounds_grid(cfg)?;
    create_out_dir(&cfg.out_dir)?;
    let path = cfg.out_dir.join(BOUNDS_CSV);
    std::fs::write(&path, bounds_csv(&rows)).map_err(|e| CliError::output(&path, e))?;
    Ok(rows)
}

pub fn regions_csv(cfg: &ExperimentConfig) -> CliResult<String> {
    if !(cfg.layer_rate > 0.0 && cfg.layer_rate < 1.0) {
        return Err(CliError::Config(format!(
            "the region map needs 0 < layer_rate < 1, got {}",
            cfg.layer_rate
        )));
    }
    let mut out = REGIONS_COLUMNS.join(",");
    out.push('\n');
    for &n in &cfg.region_sizes {
        for l in cfg.region_layers.values() {
            let v = classify_region(n, cfg.num_qubits, cfg.layer_rate, l)?;
            out.push_str(
                &[
                    n.to_string(),
                    l.to_string(),
                    format_float(cfg.layer_rate),
                    cfg.num_qubits.to_string(),
                    format_float(v.threshold_layers),
                    v.verdict.as_str().to_string(),
                    v.regime.as_str().to_string(),
                    v.always_fails.to_string(),
                ]
                .join(","),
            );
            out.push('\n');
        }
    }
    Ok(out)
}

pub fn cmd_regions(cfg: &ExperimentConfig) -> CliResult<String> {
    let text = regions_csv(cfg)?;
    create_out_dir(&cfg.out_dir)?;
    let path = cfg.out_dir.join(REGIONS_CSV);
    std::fs::write(&path, &text).map_err(|e| CliError::output(&path, e))?;
    Ok(text)
}
