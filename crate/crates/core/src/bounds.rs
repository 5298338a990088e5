//! Closed-form concentration bounds on `E|h~(x) - h_bar(x)|` and the
//! fail/uninformative region map.
//!
//! All bounds share
//!
//! ```text
//! z    = (n / lambda)(1 - p)(1 + 1/D)
//! f(z) = (z + 8 sqrt(z / lambda)) / (1 - z)        (vacuous for z >= 1)
//! ```
//!
//! Logs are natural throughout.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::KernelMatrix;
use crate::linalg::{inverse_symmetric, shifted, spectral_norm_symmetric};
use crate::noise::{worst_kernel, NoiseModel};

/// The hypotheses compared by every bound live in `[-1, 1]`, so their
/// difference never exceeds this.
pub const TRIVIAL_BOUND: f64 = 2.0;

/// Breakpoint multiplier `c` for the sample-size regime labels.
pub const DEFAULT_REGIME_FACTOR: f64 = 2.0;

/// A bound's value, or the marker that its closed form has no finite value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundValue {
    Finite(f64),
    Uninformative,
}

impl BoundValue {
    pub fn value(self) -> Option<f64> {
        match self {
            BoundValue::Finite(v) => Some(v),
            BoundValue::Uninformative => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, BoundValue::Finite(_))
    }

    fn map(self, f: impl FnOnce(f64) -> f64) -> Self {
        match self {
            BoundValue::Finite(v) => BoundValue::Finite(f(v)),
            BoundValue::Uninformative => BoundValue::Uninformative,
        }
    }
}

impl fmt::Display for BoundValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundValue::Finite(v) => write!(f, "{v}"),
            BoundValue::Uninformative => f.write_str("uninformative"),
        }
    }
}

impl Serialize for BoundValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            BoundValue::Finite(v) => s.serialize_f64(*v),
            BoundValue::Uninformative => s.serialize_str("uninformative"),
        }
    }
}

/// Everything the closed-form bounds depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundInputs {
    n: usize,
    lambda: f64,
    noise: NoiseModel,
    dim: usize,
    delta: f64,
    shots: Option<u64>,
}

impl BoundInputs {
    pub fn new(n: usize, lambda: f64, noise: NoiseModel, dim: usize, delta: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "sample size must be at least 1"));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid("lambda", format!("must be positive, got {lambda}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid("delta", format!("must lie in (0, 1), got {delta}")));
        }
        if dim < 2 {
            return Err(invalid("dim", format!("D must be at least 2, got {dim}")));
        }
        Ok(Self {
            n,
            lambda,
            noise,
            dim,
            delta,
            shots: None,
        })
    }

    pub fn with_shots(mut self, shots: u64) -> Result<Self> {
        if shots == 0 {
            return Err(invalid("shots", "at least one shot is required"));
        }
        self.shots = Some(shots);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn shots(&self) -> Option<u64> {
        self.shots
    }

    /// `(n / lambda)(1 - p)(1 + 1/D)`.
    pub fn z(&self) -> f64 {
        let p = self.noise.composed_rate();
        (self.n as f64 / self.lambda) * (1.0 - p) * (1.0 + 1.0 / self.dim as f64)
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }

    fn df(&self) -> f64 {
        self.dim as f64
    }

    /// `8 sqrt(D n) / (D lambda + n)`.
    fn dimension_term(&self) -> f64 {
        8.0 * (self.df() * self.nf()).sqrt() / (self.df() * self.lambda + self.nf())
    }

    /// `6 sqrt(log(c / delta) / (2n))`.
    fn confidence_term(&self, c: f64) -> f64 {
        6.0 * ((c / self.delta).ln() / (2.0 * self.nf())).sqrt()
    }

    /// `(n / lambda) sqrt(log(4 n^2 / delta) / (2m))`.
    fn shot_term(&self, shots: u64) -> f64 {
        let n = self.nf();
        (n / self.lambda) * ((4.0 * n * n / self.delta).ln() / (2.0 * shots as f64)).sqrt()
    }
}

/// Named contributions of a bound.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct TermBreakdown {
    /// `f(z)`, or the `‖M‖`-based pair for the exact refinement.
    pub f_term: Option<f64>,
    pub dimension_term: f64,
    pub confidence_term: f64,
    /// Finite-shot contribution added to `z`.
    pub shot_term: Option<f64>,
    /// `n exp(-lambda^2 m / 4n)`, subtracted from the success probability.
    pub probability_deficit: Option<f64>,
    /// `1 - delta - deficit`.
    pub success_probability: Option<f64>,
    /// Exact `‖(K~ + lambda I)^{-1} - (K_bar + lambda I)^{-1}‖_2`.
    pub geometric_difference: Option<f64>,
}

/// An evaluated bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub bound: BoundValue,
    /// Argument of `f`; for the exact refinement, `lambda ‖M‖_2`.
    pub z: f64,
    /// Finite, nonnegative and at most [`TRIVIAL_BOUND`].
    pub informative: bool,
    pub exact_geometric: bool,
    pub terms: TermBreakdown,
}

impl BoundReport {
    /// Success probability of the statement is nonpositive.
    pub fn near_certain_failure(&self) -> bool {
        self.terms
            .success_probability
            .is_some_and(|p| p <= 0.0)
    }
}

fn finish(z: f64, f_term: BoundValue, terms: TermBreakdown, exact: bool) -> BoundReport {
    let bound = f_term.map(|f| f + terms.dimension_term + terms.confidence_term);
    let informative = matches!(bound, BoundValue::Finite(b) if (0.0..=TRIVIAL_BOUND).contains(&b));
    BoundReport {
        bound,
        z,
        informative,
        exact_geometric: exact,
        terms: TermBreakdown {
            f_term: f_term.value(),
            ..terms
        },
    }
}

/// `f(z) = (z + 8 sqrt(z / lambda)) / (1 - z)`; uninformative once `z >= 1`.
pub fn f_of_z(z: f64, lambda: f64) -> Result<BoundValue> {
    if z.is_nan() || z < 0.0 {
        return Err(invalid("z", format!("must be nonnegative, got {z}")));
    }
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(invalid("lambda", format!("must be positive, got {lambda}")));
    }
    if z >= 1.0 {
        return Ok(BoundValue::Uninformative);
    }
    Ok(BoundValue::Finite((z + 8.0 * (z / lambda).sqrt()) / (1.0 - z)))
}

/// Bound for the noisy kernel with exact expectations.
pub fn theorem1_bound(inputs: &BoundInputs) -> BoundReport {
    let z = inputs.z();
    let f = f_of_z(z, inputs.lambda).expect("z and lambda validated by BoundInputs");
    let terms = TermBreakdown {
        dimension_term: inputs.dimension_term(),
        confidence_term: inputs.confidence_term(4.0),
        ..Default::default()
    };
    finish(z, f, terms, false)
}

/// Tightened bound for balanced labels.
pub fn corollary1_bound(inputs: &BoundInputs) -> BoundReport {
    let z = inputs.z();
    let f = f_of_z(z, inputs.lambda).expect("z and lambda validated by BoundInputs");
    let d = inputs.df();
    let terms = TermBreakdown {
        dimension_term: 8.0 * (2.0 * d * (4.0 / inputs.delta).ln()).sqrt()
            / (d * inputs.lambda + inputs.nf()),
        confidence_term: inputs.confidence_term(8.0),
        ..Default::default()
    };
    finish(z, f, terms, false)
}

/// Bound for the shot-estimated kernel with `m` measurements per entry.
pub fn theorem2_bound(inputs: &BoundInputs) -> Result<BoundReport> {
    let shots = inputs
        .shots
        .ok_or_else(|| invalid("shots", "theorem 2 needs a shot count"))?;
    let shot_term = inputs.shot_term(shots);
    let z = inputs.z() + shot_term;
    let f = f_of_z(z, inputs.lambda)?;
    let n = inputs.nf();
    let deficit = n * (-(inputs.lambda * inputs.lambda) * shots as f64 / (4.0 * n)).exp();
    let terms = TermBreakdown {
        dimension_term: inputs.dimension_term(),
        confidence_term: inputs.confidence_term(8.0),
        shot_term: Some(shot_term),
        probability_deficit: Some(deficit),
        success_probability: Some(1.0 - inputs.delta - deficit),
        ..Default::default()
    };
    Ok(finish(z, f, terms, false))
}

/// Exact `‖(K~ + lambda I)^{-1} - (K_bar + lambda I)^{-1}‖_2`.
pub fn geometric_difference_exact(
    noisy: &KernelMatrix,
    worst: &KernelMatrix,
    lambda: f64,
) -> Result<f64> {
    if noisy.n() != worst.n() {
        return Err(Error::DimensionMismatch {
            expected: noisy.n(),
            actual: worst.n(),
        });
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda", format!("must be positive, got {lambda}")));
    }
    let a = inverse_symmetric(&shifted(noisy.entries(), lambda))?;
    let b = inverse_symmetric(&shifted(worst.entries(), lambda))?;
    let mut diff = a - b;
    crate::linalg::symmetrize(&mut diff);
    spectral_norm_symmetric(&diff)
}

/// Closed-form bound `(z / lambda) / (1 - z)` on the geometric difference.
pub fn geometric_difference_bound(inputs: &BoundInputs) -> BoundValue {
    let z = inputs.z();
    if z >= 1.0 {
        BoundValue::Uninformative
    } else {
        BoundValue::Finite(z / inputs.lambda / (1.0 - z))
    }
}

/// The refinement with the exact geometric difference `‖M‖_2`:
/// `lambda ‖M‖ + 8 sqrt((1 + lambda ‖M‖) ‖M‖) + 8 sqrt(Dn)/(D lambda + n) + 6 sqrt(log(4/delta)/2n)`.
pub fn lemma2_bound(noisy: &KernelMatrix, inputs: &BoundInputs) -> Result<BoundReport> {
    if noisy.n() != inputs.n {
        return Err(Error::DimensionMismatch {
            expected: inputs.n,
            actual: noisy.n(),
        });
    }
    let worst = worst_kernel(inputs.n, inputs.dim)?;
    let m = geometric_difference_exact(noisy, &worst, inputs.lambda)?;
    Ok(lemma2_from_norm(m, inputs))
}

/// [`lemma2_bound`] for an already computed `‖M‖_2`.
pub fn lemma2_from_norm(geometric_difference: f64, inputs: &BoundInputs) -> BoundReport {
    let lm = inputs.lambda * geometric_difference;
    let f = lm + 8.0 * ((1.0 + lm) * geometric_difference).sqrt();
    let terms = TermBreakdown {
        dimension_term: inputs.dimension_term(),
        confidence_term: inputs.confidence_term(4.0),
        geometric_difference: Some(geometric_difference),
        ..Default::default()
    };
    finish(lm, BoundValue::Finite(f), terms, true)
}

/// Noisy-layer count beyond which predictions collapse:
/// `L* = log n / log((1 - p~)^{-2}) = ln n / (-2 ln(1 - p~))`.
pub fn demarcation_layers(n: usize, layer_rate: f64) -> Result<f64> {
    if n < 2 {
        return Err(invalid("n", format!("need n >= 2, got {n}")));
    }
    if !(layer_rate > 0.0 && layer_rate < 1.0) {
        return Err(invalid(
            "layer_rate",
            format!("threshold is undefined for p~ = {layer_rate}; need 0 < p~ < 1"),
        ));
    }
    Ok((n as f64).ln() / (-2.0 * (-layer_rate).ln_1p()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Beyond the demarcation line: the noisy hypothesis concentrates.
    FailRed,
    /// The bound says nothing here.
    UninformativeYellow,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::FailRed => "fail_red",
            Verdict::UninformativeYellow => "uninformative_yellow",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleRegime {
    Logarithmic,
    Polynomial,
    Exponential,
}

impl SampleRegime {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleRegime::Logarithmic => "logarithmic",
            SampleRegime::Polynomial => "polynomial",
            SampleRegime::Exponential => "exponential",
        }
    }
}

/// Region of a `(n, N, p~, L)` configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionVerdict {
    pub threshold_layers: f64,
    pub verdict: Verdict,
    pub regime: SampleRegime,
    /// `L* < 1`: every circuit with at least one noisy layer fails.
    pub always_fails: bool,
}

/// Presentation label for the sample size relative to the qubit count.
pub fn sample_regime(n: usize, num_qubits: usize, factor: f64) -> SampleRegime {
    let ln_n = (n as f64).ln();
    if (n as f64) <= factor * (num_qubits as f64).log2() {
        SampleRegime::Logarithmic
    } else if ln_n >= factor * num_qubits as f64 * std::f64::consts::LN_2 {
        SampleRegime::Exponential
    } else {
        SampleRegime::Polynomial
    }
}

/// Classifies a configuration; only `L` versus `L*` decides the verdict.
pub fn classify_region(
    n: usize,
    num_qubits: usize,
    layer_rate: f64,
    layers: usize,
) -> Result<RegionVerdict> {
    let threshold = demarcation_layers(n, layer_rate)?;
    let verdict = if layers as f64 > threshold {
        Verdict::FailRed
    } else {
        Verdict::UninformativeYellow
    };
    Ok(RegionVerdict {
        threshold_layers: threshold,
        verdict,
        regime: sample_regime(n, num_qubits, DEFAULT_REGIME_FACTOR),
        always_fails: threshold < 1.0,
    })
}
