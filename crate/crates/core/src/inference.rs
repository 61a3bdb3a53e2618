//! Bias detection and reversal: the normal-approximation test of "no
//! participation bias" and the Bayesian posterior over the true evaluation
//! mean.
//!
//! The posterior is
//!
//! ```text
//! P(μ | h, t) ∝ e(μ)^h · (1 − e(μ))^t · μ^(α−1) · (1 − μ)^(β−1)
//! ```
//!
//! with `e(μ) = m·μ + (1 − m)·p_train`. Outside the endpoints `m = 1`
//! (Beta conjugacy) and `m = 0` (posterior equals prior) there is no
//! conjugate form, so the density is evaluated on a uniform grid in log
//! space, stabilised by subtracting the grid maximum, and normalised by
//! composite trapezoid quadrature.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::calibration::{calibrate_threshold, confusion, predict_at, ScoredDataset};
use crate::error::{Error, Result};
use crate::noise_model::{noise_from_mcc, BinaryCounts, MccCaution, NoiseModel};

/// Beta prior over the true evaluation mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaPrior {
    alpha: f64,
    beta: f64,
}

impl BetaPrior {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() || !beta.is_finite() || alpha <= 0.0 || beta <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "Beta prior parameters must be finite and positive, got ({alpha}, {beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// The uniform prior Beta(1, 1).
    pub fn flat() -> Self {
        Self { alpha: 1.0, beta: 1.0 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Unnormalised log density `(α−1)·ln μ + (β−1)·ln(1−μ)`. Exponents that
    /// are exactly zero contribute nothing even at the endpoints.
    fn log_kernel(&self, mu: f64) -> f64 {
        let mut v = 0.0;
        if self.alpha != 1.0 {
            v += (self.alpha - 1.0) * mu.ln();
        }
        if self.beta != 1.0 {
            v += (self.beta - 1.0) * (1.0 - mu).ln();
        }
        v
    }
}

pub const DEFAULT_GRID_POINTS: usize = 4097;
const MIN_GRID_POINTS: usize = 129;

/// Discretised posterior density over the true mean, on a uniform grid
/// spanning `[0, 1]`.
#[derive(Debug, Clone)]
pub struct PosteriorGrid {
    grid: Vec<f64>,
    log_density: Vec<f64>,
    density: Vec<f64>,
    cdf: Vec<f64>,
}

impl PosteriorGrid {
    /// Grid of μ values, strictly increasing from 0 to 1.
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Unnormalised log posterior at each grid point.
    pub fn log_density(&self) -> &[f64] {
        &self.log_density
    }

    /// Normalised density at each grid point.
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// Cumulative distribution at each grid point; `cdf[0] = 0` and the
    /// final entry is exactly 1.
    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    /// Inverse CDF by linear interpolation of the grid CDF.
    pub fn quantile(&self, p: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&p));
        if p <= 0.0 {
            return self.grid[0];
        }
        if p >= 1.0 {
            return *self.grid.last().unwrap();
        }
        let i = self.cdf.partition_point(|&c| c < p);
        if i == 0 {
            return self.grid[0];
        }
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let (g0, g1) = (self.grid[i - 1], self.grid[i]);
        if c1 == c0 {
            g1
        } else {
            g0 + (p - c0) / (c1 - c0) * (g1 - g0)
        }
    }

    /// Equal-tailed credible interval holding `mass` posterior probability:
    /// `[CDF⁻¹((1−mass)/2), CDF⁻¹(1−(1−mass)/2)]`.
    pub fn credible_interval(&self, mass: f64) -> Result<CredibleInterval> {
        if !mass.is_finite() || mass <= 0.0 || mass >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "interval mass must lie strictly between 0 and 1, got {mass}"
            )));
        }
        let tail = (1.0 - mass) / 2.0;
        Ok(CredibleInterval { lo: self.quantile(tail), hi: self.quantile(1.0 - tail), mass })
    }

    /// MAP estimate (grid argmax; ties resolve to the lowest μ) and the
    /// posterior mean by trapezoid quadrature of `μ·density`.
    pub fn summaries(&self) -> PosteriorSummaries {
        let mut map_idx = 0;
        for (i, &d) in self.density.iter().enumerate() {
            if d > self.density[map_idx] {
                map_idx = i;
            }
        }
        let mut mean = 0.0;
        for i in 1..self.grid.len() {
            let dx = self.grid[i] - self.grid[i - 1];
            let f0 = self.grid[i - 1] * self.density[i - 1];
            let f1 = self.grid[i] * self.density[i];
            mean += (f0 + f1) / 2.0 * dx;
        }
        PosteriorSummaries { map: self.grid[map_idx], mean }
    }
}

/// Equal-tailed credible interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CredibleInterval {
    pub lo: f64,
    pub hi: f64,
    pub mass: f64,
}

/// Point summaries of a posterior grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorSummaries {
    pub map: f64,
    pub mean: f64,
}

/// Compute the posterior over the true evaluation mean on a uniform grid of
/// `grid_points` points (at least 129).
///
/// For `m = 1` the result matches `Beta(α+h, β+t)`; for `m = 0` the
/// likelihood is constant in μ and the result is the prior. When a prior
/// with `α < 1` or `β < 1` diverges at an endpoint, the endpoint value is
/// evaluated half a grid step inside so the integrable spike stays finite.
pub fn posterior(
    model: &NoiseModel,
    counts: BinaryCounts,
    prior: &BetaPrior,
    grid_points: usize,
) -> Result<PosteriorGrid> {
    if grid_points < MIN_GRID_POINTS {
        return Err(Error::InvalidParameter(format!(
            "grid_points must be at least {MIN_GRID_POINTS}, got {grid_points}"
        )));
    }

    let n = grid_points;
    let step = 1.0 / (n - 1) as f64;
    let mut grid: Vec<f64> = (0..n).map(|i| i as f64 * step).collect();
    grid[n - 1] = 1.0;

    let log_post = |mu: f64| model.log_likelihood(counts, mu, false) + prior.log_kernel(mu);
    let mut log_density: Vec<f64> = grid.iter().map(|&mu| log_post(mu)).collect();
    if log_density[0] == f64::INFINITY {
        log_density[0] = log_post(step / 2.0);
    }
    if log_density[n - 1] == f64::INFINITY {
        log_density[n - 1] = log_post(1.0 - step / 2.0);
    }

    let max = log_density.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Numerical(
            "posterior is degenerate: log density is -inf on the whole grid".into(),
        ));
    }

    let unnorm: Vec<f64> = log_density.iter().map(|&l| (l - max).exp()).collect();

    // Cumulative trapezoid over the unnormalised density; the final entry is
    // the normalising constant, so density and CDF stay mutually consistent
    // and cdf ends at exactly 1.
    let mut cum = vec![0.0f64; n];
    for i in 1..n {
        let dx = grid[i] - grid[i - 1];
        cum[i] = cum[i - 1] + (unnorm[i - 1] + unnorm[i]) / 2.0 * dx;
    }
    let z = cum[n - 1];
    if !z.is_finite() || z <= 0.0 {
        return Err(Error::Numerical(format!(
            "posterior normalisation failed: integral = {z}"
        )));
    }

    let density: Vec<f64> = unnorm.iter().map(|&u| u / z).collect();
    let cdf: Vec<f64> = cum.iter().map(|&c| c / z).collect();

    Ok(PosteriorGrid { grid, log_density, density, cdf })
}

/// Outcome of the "no participation bias" test.
///
/// Under the null hypothesis the evaluation and training means are
/// identical, so `E[μ̂] = p_train` regardless of `m`, and the z statistic is
/// `(μ̂ − p_train) / SE(p_train, n)` with a two-sided normal p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasTestResult {
    pub mu_hat: f64,
    pub expected_under_null: f64,
    pub standard_error: f64,
    pub z: f64,
    pub p_value: f64,
    /// `n < 30`: the normal approximation is doubtful but the numbers are
    /// still computed.
    pub small_sample: bool,
}

/// Test whether the observed prediction counts are consistent with
/// μ = p_train.
///
/// When the standard error is exactly zero (e.g. `m = 1`), z becomes a
/// ±infinity sentinel and the p-value 0, unless the observed mean equals
/// the expectation exactly (then z = 0 and p = 1).
pub fn bias_test(model: &NoiseModel, counts: BinaryCounts) -> BiasTestResult {
    let n = counts.total();
    let mu_hat = counts.predicted_mean();
    let expected = model.expected_prediction_mean(model.p_train());
    let se = model.standard_error(model.p_train(), n);

    let (z, p_value) = if se == 0.0 {
        if mu_hat == expected {
            (0.0, 1.0)
        } else {
            (f64::INFINITY * (mu_hat - expected).signum(), 0.0)
        }
    } else {
        let z = (mu_hat - expected) / se;
        (z, erfc(z.abs() / std::f64::consts::SQRT_2))
    };

    BiasTestResult {
        mu_hat,
        expected_under_null: expected,
        standard_error: se,
        z,
        p_value,
        small_sample: n < 30,
    }
}

/// Options for [`estimate_pipeline`].
#[derive(Debug, Clone, Copy)]
pub struct PipelineOptions {
    pub prior: BetaPrior,
    pub mass: f64,
    pub grid_points: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self { prior: BetaPrior::flat(), mass: 0.95, grid_points: DEFAULT_GRID_POINTS }
    }
}

/// Full output of the estimation pipeline. Serialises to a flat key/value
/// document; numeric fields survive a JSON round trip losslessly.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BiasReport {
    pub threshold: f64,
    pub p_train: f64,
    pub validation_mcc: f64,
    pub m: f64,
    pub h: u64,
    pub t: u64,
    pub mu_hat: f64,
    pub z: f64,
    pub p_value: f64,
    pub map: f64,
    pub posterior_mean: f64,
    pub interval_lo: f64,
    pub interval_hi: f64,
    pub mass: f64,
    pub prior_alpha: f64,
    pub prior_beta: f64,
    /// Mean of evaluation labels when every evaluation record carries one;
    /// ignored by the inference itself, useful for scoring runs against a
    /// known ground truth.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eval_label_mean: Option<f64>,
    pub warnings: Vec<String>,
}

/// Run the whole protocol: calibrate the threshold on the training split,
/// estimate the accuracy parameter from the validation MCC, count
/// predictions on the evaluation split, and assemble test + posterior +
/// interval into a [`BiasReport`].
///
/// An uninformative model (validation MCC ≤ 0) still produces a report: the
/// posterior equals the prior and a warning is attached.
pub fn estimate_pipeline(
    train: &ScoredDataset,
    validation: &ScoredDataset,
    evaluation: &ScoredDataset,
    options: &PipelineOptions,
) -> Result<BiasReport> {
    let train_labels = train
        .labels()
        .ok_or(Error::MissingLabels { split: "train" })?;
    let val_labels = validation
        .labels()
        .ok_or(Error::MissingLabels { split: "validation" })?;

    let p_train = train_labels.iter().filter(|&&l| l).count() as f64 / train_labels.len() as f64;
    let threshold = calibrate_threshold(&train.scores(), p_train)?;

    let val_preds = predict_at(&validation.scores(), threshold);
    let validation_mcc = confusion(&val_preds, &val_labels)?.mcc();
    let estimate = noise_from_mcc(validation_mcc)?;
    let model = NoiseModel::new(estimate.m, p_train)?;

    let eval_preds = predict_at(&evaluation.scores(), threshold);
    let counts = BinaryCounts::from_predictions(&eval_preds)?;

    let test = bias_test(&model, counts);
    let post = posterior(&model, counts, &options.prior, options.grid_points)?;
    let interval = post.credible_interval(options.mass)?;
    let summaries = post.summaries();

    let mut warnings = Vec::new();
    if test.small_sample {
        warnings.push(format!(
            "evaluation set has only {} predictions; the normal-approximation test assumes roughly 30 or more",
            counts.total()
        ));
    }
    match estimate.caution {
        Some(MccCaution::Uninformative) => warnings.push(format!(
            "uninformative model: validation MCC {validation_mcc:.6} is not positive; m clamped to 0 and the posterior equals the prior"
        )),
        Some(MccCaution::Perfect) => warnings
            .push("validation MCC is exactly 1; treating the classifier as noise-free".into()),
        None => {}
    }

    Ok(BiasReport {
        threshold,
        p_train,
        validation_mcc,
        m: estimate.m,
        h: counts.positives(),
        t: counts.negatives(),
        mu_hat: test.mu_hat,
        z: test.z,
        p_value: test.p_value,
        map: summaries.map,
        posterior_mean: summaries.mean,
        interval_lo: interval.lo,
        interval_hi: interval.hi,
        mass: options.mass,
        prior_alpha: options.prior.alpha(),
        prior_beta: options.prior.beta(),
        eval_label_mean: evaluation.label_mean(),
        warnings,
    })
}
