//! Monte Carlo harness for validating the noise model end to end: the
//! MCC-noise relationship, predicted-mean drift with confidence bands,
//! posterior recovery, and a synthetic-classifier analog of the full
//! estimation protocol.
//!
//! Every trial draws from its own random stream derived from
//! `(seed, scenario, cell, trial)`, so results are bit-identical whatever
//! the worker-thread count, and any single trial can be replayed in
//! isolation.
//!
//! Two label conventions are used deliberately. Experiments that validate
//! the conditional moments (`bias_drift`) or the test's null calibration
//! treat the evaluation set as a fixed population and give it an exact
//! label composition; only the prediction noise is redrawn. Experiments
//! that validate the marginal likelihood (`mcc_noise`,
//! `posterior_recovery`) redraw labels from Bernoulli(μ) each trial.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::calibration::{calibrate_threshold, confusion, predict_at, sigmoid, ScoredDataset, ScoredRecord, Split};
use crate::error::{Error, Result};
use crate::inference::{estimate_pipeline, BetaPrior, PipelineOptions, DEFAULT_GRID_POINTS};
use crate::noise_model::NoiseModel;

/// Which validation experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    MccNoise,
    BiasDrift,
    PosteriorRecovery,
    ClassifierEndToEnd,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::MccNoise,
        Scenario::BiasDrift,
        Scenario::PosteriorRecovery,
        Scenario::ClassifierEndToEnd,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::MccNoise => "mcc_noise",
            Scenario::BiasDrift => "bias_drift",
            Scenario::PosteriorRecovery => "posterior_recovery",
            Scenario::ClassifierEndToEnd => "classifier_end_to_end",
        }
    }

    fn id(&self) -> u64 {
        match self {
            Scenario::MccNoise => 1,
            Scenario::BiasDrift => 2,
            Scenario::PosteriorRecovery => 3,
            Scenario::ClassifierEndToEnd => 4,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .iter()
            .find(|sc| sc.name() == s)
            .copied()
            .ok_or_else(|| {
                let names: Vec<&str> = Scenario::ALL.iter().map(|sc| sc.name()).collect();
                Error::InvalidParameter(format!(
                    "unknown scenario `{s}`; valid scenarios are: {}",
                    names.join(", ")
                ))
            })
    }
}

/// Synthetic-classifier settings for the end-to-end scenario.
///
/// Two-class data are 2-D Gaussians with class-conditional means `(0, 0)`
/// and `(d, d)` and unit covariance. When `separation` is `None`, `d` is
/// tuned by bisection so the fitted classifier's validation MCC lands on
/// `target_mcc`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierConfig {
    pub n_train: usize,
    pub n_val: usize,
    pub target_mcc: f64,
    pub separation: Option<f64>,
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            n_train: 2_000,
            n_val: 2_000,
            target_mcc: 0.79,
            separation: None,
            learning_rate: 0.5,
            epochs: 200,
        }
    }
}

/// Experiment configuration. `p_eval` and `m_grid` are sweep lists; cells
/// are their (cartesian, where applicable) combinations.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scenario: Scenario,
    /// Examples per trial (the evaluation-set size).
    pub n: usize,
    /// Trials per cell.
    pub trials: usize,
    pub p_train: f64,
    pub p_eval: Vec<f64>,
    pub m_grid: Vec<f64>,
    pub seed: u64,
    pub classifier: ClassifierConfig,
}

impl SimConfig {
    /// Paper-matched defaults per scenario.
    pub fn defaults(scenario: Scenario) -> Self {
        let step_grid = || (0..=20).map(|i| i as f64 / 20.0).collect::<Vec<f64>>();
        match scenario {
            Scenario::MccNoise => Self {
                scenario,
                n: 10_000,
                trials: 1_000,
                p_train: 0.5,
                p_eval: vec![0.5],
                m_grid: step_grid(),
                seed: 42,
                classifier: ClassifierConfig::default(),
            },
            Scenario::BiasDrift => Self {
                scenario,
                n: 1_000,
                trials: 1_000,
                p_train: 0.8,
                p_eval: vec![0.6],
                m_grid: step_grid(),
                seed: 42,
                classifier: ClassifierConfig::default(),
            },
            Scenario::PosteriorRecovery => Self {
                scenario,
                n: 1_000,
                trials: 500,
                p_train: 0.25,
                p_eval: vec![0.3, 0.6, 0.9],
                m_grid: vec![0.5, 0.79, 1.0],
                seed: 42,
                classifier: ClassifierConfig::default(),
            },
            Scenario::ClassifierEndToEnd => Self {
                scenario,
                n: 2_000,
                trials: 17,
                p_train: 0.25,
                p_eval: (1..=12).map(|i| i as f64 * 0.05).collect(),
                m_grid: vec![],
                seed: 42,
                classifier: ClassifierConfig::default(),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.p_train) {
            return Err(Error::InvalidParameter(format!(
                "p_train must lie in [0, 1], got {}",
                self.p_train
            )));
        }
        if self.p_eval.is_empty() {
            return Err(Error::Empty("p_eval"));
        }
        for &p in &self.p_eval {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!(
                    "p_eval values must lie in [0, 1], got {p}"
                )));
            }
        }
        if self.scenario != Scenario::ClassifierEndToEnd {
            if self.m_grid.is_empty() {
                return Err(Error::Empty("m_grid"));
            }
            for &m in &self.m_grid {
                if !(0.0..=1.0).contains(&m) {
                    return Err(Error::InvalidParameter(format!(
                        "m_grid values must lie in [0, 1], got {m}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Per-cell aggregate statistics. Carries the seed and every parameter
/// needed to reproduce the cell exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResultRow {
    pub scenario: Scenario,
    pub seed: u64,
    pub cell: usize,
    /// Configured accuracy parameter; `None` for the end-to-end scenario,
    /// where m is estimated per trial instead.
    pub m: Option<f64>,
    pub p_train: f64,
    pub p_eval: f64,
    pub n: usize,
    pub trials: usize,
    pub stats: Vec<(&'static str, f64)>,
}

impl SimResultRow {
    pub fn stat(&self, name: &str) -> Option<f64> {
        self.stats.iter().find(|(k, _)| *k == name).map(|(_, v)| *v)
    }
}

/// Per-trial statistics, emitted with `--raw`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub scenario: Scenario,
    pub seed: u64,
    pub cell: usize,
    pub m: Option<f64>,
    pub p_train: f64,
    pub p_eval: f64,
    pub n: usize,
    pub trial: usize,
    pub stats: Vec<(&'static str, f64)>,
}

/// Full output of a scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub cells: Vec<SimResultRow>,
    pub trials: Vec<TrialRow>,
}

/// Independent random stream for one trial. ChaCha treats distinct seeds as
/// unrelated keys, so laying the coordinates out in the seed bytes is
/// enough for stream independence.
fn trial_stream(seed: u64, scenario: Scenario, cell: u64, trial: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[0..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&scenario.id().to_le_bytes());
    bytes[16..24].copy_from_slice(&cell.to_le_bytes());
    bytes[24..32].copy_from_slice(&trial.to_le_bytes());
    ChaCha8Rng::from_seed(bytes)
}

const TUNING_CELL: u64 = u64::MAX;

/// Draw noisy predictions for the given labels: each prediction equals its
/// label with probability `m`, otherwise it is an independent
/// `Bernoulli(p_train)` draw.
pub fn simulate_noisy_predictions<R: Rng>(
    rng: &mut R,
    model: &NoiseModel,
    labels: &[bool],
) -> Vec<bool> {
    labels
        .iter()
        .map(|&y| {
            if rng.random::<f64>() < model.m() {
                y
            } else {
                rng.random::<f64>() < model.p_train()
            }
        })
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss = xs.iter().map(|&x| (x - m) * (x - m)).sum::<f64>();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Empirical quantile with linear interpolation between order statistics.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Label vector with an exact positive count `round(n·prevalence)`.
fn exact_composition_labels(n: usize, prevalence: f64) -> Vec<bool> {
    let n_pos = (n as f64 * prevalence).round() as usize;
    (0..n).map(|i| i < n_pos).collect()
}

/// Run the configured scenario, producing both aggregate and per-trial rows.
pub fn run_scenario(config: &SimConfig) -> Result<SimRun> {
    config.validate()?;
    match config.scenario {
        Scenario::MccNoise => run_mcc_noise(config),
        Scenario::BiasDrift => run_bias_drift(config),
        Scenario::PosteriorRecovery => run_posterior_recovery_impl(config),
        Scenario::ClassifierEndToEnd => run_end_to_end(config),
    }
}

/// MCC-vs-noise linearity experiment (aggregate rows only).
pub fn run_mcc_noise_experiment(config: &SimConfig) -> Result<Vec<SimResultRow>> {
    expect_scenario(config, Scenario::MccNoise)?;
    run_scenario(config).map(|r| r.cells)
}

/// Predicted-mean drift experiment (aggregate rows only).
pub fn run_bias_experiment(config: &SimConfig) -> Result<Vec<SimResultRow>> {
    expect_scenario(config, Scenario::BiasDrift)?;
    run_scenario(config).map(|r| r.cells)
}

/// Credible-interval coverage experiment (aggregate rows only).
pub fn run_posterior_recovery(config: &SimConfig) -> Result<Vec<SimResultRow>> {
    expect_scenario(config, Scenario::PosteriorRecovery)?;
    run_scenario(config).map(|r| r.cells)
}

/// Synthetic-classifier end-to-end experiment (aggregate rows only).
pub fn run_classifier_end_to_end(config: &SimConfig) -> Result<Vec<SimResultRow>> {
    expect_scenario(config, Scenario::ClassifierEndToEnd)?;
    run_scenario(config).map(|r| r.cells)
}

fn expect_scenario(config: &SimConfig, want: Scenario) -> Result<()> {
    if config.scenario != want {
        return Err(Error::InvalidParameter(format!(
            "config is for scenario `{}`, expected `{}`",
            config.scenario, want
        )));
    }
    Ok(())
}

fn run_mcc_noise(config: &SimConfig) -> Result<SimRun> {
    let p_eval = config.p_eval[0];
    let mut cells = Vec::with_capacity(config.m_grid.len());
    let mut trials = Vec::new();

    for (cell, &m) in config.m_grid.iter().enumerate() {
        let model = NoiseModel::new(m, config.p_train)?;
        let mccs: Vec<f64> = (0..config.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = trial_stream(config.seed, config.scenario, cell as u64, trial as u64);
                let labels: Vec<bool> =
                    (0..config.n).map(|_| rng.random::<f64>() < p_eval).collect();
                let preds = simulate_noisy_predictions(&mut rng, &model, &labels);
                confusion(&preds, &labels).expect("non-empty by construction").mcc()
            })
            .collect();

        for (trial, &mcc) in mccs.iter().enumerate() {
            trials.push(TrialRow {
                scenario: config.scenario,
                seed: config.seed,
                cell,
                m: Some(m),
                p_train: config.p_train,
                p_eval,
                n: config.n,
                trial,
                stats: vec![("mcc", mcc)],
            });
        }
        cells.push(SimResultRow {
            scenario: config.scenario,
            seed: config.seed,
            cell,
            m: Some(m),
            p_train: config.p_train,
            p_eval,
            n: config.n,
            trials: config.trials,
            stats: vec![("mcc_mean", mean(&mccs)), ("mcc_std", sample_std(&mccs))],
        });
    }

    Ok(SimRun { cells, trials })
}

fn run_bias_drift(config: &SimConfig) -> Result<SimRun> {
    let p_eval = config.p_eval[0];
    // Fixed population: exact label composition, shared by every trial in a
    // cell. Only the prediction noise varies, which is what the conditional
    // variance formula describes.
    let labels = exact_composition_labels(config.n, p_eval);
    let mu_realized = labels.iter().filter(|&&l| l).count() as f64 / config.n as f64;

    let mut cells = Vec::with_capacity(config.m_grid.len());
    let mut trials = Vec::new();

    for (cell, &m) in config.m_grid.iter().enumerate() {
        let model = NoiseModel::new(m, config.p_train)?;
        let expected = model.expected_prediction_mean(mu_realized);
        let se = model.standard_error(mu_realized, config.n as u64);

        let mu_hats: Vec<f64> = (0..config.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = trial_stream(config.seed, config.scenario, cell as u64, trial as u64);
                let preds = simulate_noisy_predictions(&mut rng, &model, &labels);
                preds.iter().filter(|&&p| p).count() as f64 / config.n as f64
            })
            .collect();

        let covered = mu_hats
            .iter()
            .filter(|&&x| (x - expected).abs() <= 1.96 * se)
            .count() as f64
            / config.trials as f64;

        let mut sorted = mu_hats.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

        for (trial, &mu_hat) in mu_hats.iter().enumerate() {
            trials.push(TrialRow {
                scenario: config.scenario,
                seed: config.seed,
                cell,
                m: Some(m),
                p_train: config.p_train,
                p_eval,
                n: config.n,
                trial,
                stats: vec![("mu_hat", mu_hat)],
            });
        }
        cells.push(SimResultRow {
            scenario: config.scenario,
            seed: config.seed,
            cell,
            m: Some(m),
            p_train: config.p_train,
            p_eval,
            n: config.n,
            trials: config.trials,
            stats: vec![
                ("mu_hat_mean", mean(&mu_hats)),
                ("mu_hat_std", sample_std(&mu_hats)),
                ("q025", quantile_sorted(&sorted, 0.025)),
                ("q975", quantile_sorted(&sorted, 0.975)),
                ("expected", expected),
                ("se", se),
                ("band_coverage", covered),
            ],
        });
    }

    Ok(SimRun { cells, trials })
}

fn run_posterior_recovery_impl(config: &SimConfig) -> Result<SimRun> {
    let prior = BetaPrior::flat();
    let mut cells = Vec::new();
    let mut trials = Vec::new();

    for (mi, &m) in config.m_grid.iter().enumerate() {
        let model = NoiseModel::new(m, config.p_train)?;
        for (pi, &mu) in config.p_eval.iter().enumerate() {
            let cell = mi * config.p_eval.len() + pi;

            let per_trial: Vec<(f64, f64, f64)> = (0..config.trials)
                .into_par_iter()
                .map(|trial| {
                    let mut rng =
                        trial_stream(config.seed, config.scenario, cell as u64, trial as u64);
                    // Labels are redrawn each trial: the posterior's
                    // likelihood marginalises over them.
                    let labels: Vec<bool> =
                        (0..config.n).map(|_| rng.random::<f64>() < mu).collect();
                    let preds = simulate_noisy_predictions(&mut rng, &model, &labels);
                    let h = preds.iter().filter(|&&p| p).count() as u64;
                    let counts =
                        crate::noise_model::BinaryCounts::new(h, config.n as u64 - h).unwrap();
                    let post =
                        crate::inference::posterior(&model, counts, &prior, DEFAULT_GRID_POINTS)
                            .expect("posterior on valid inputs");
                    let iv = post.credible_interval(0.95).expect("valid mass");
                    (iv.lo, iv.hi, iv.hi - iv.lo)
                })
                .collect();

            let contained: Vec<f64> = per_trial
                .iter()
                .map(|&(lo, hi, _)| f64::from(u8::from(lo <= mu && mu <= hi)))
                .collect();
            let widths: Vec<f64> = per_trial.iter().map(|&(_, _, w)| w).collect();

            for (trial, ((lo, hi, w), c)) in
                per_trial.iter().zip(&contained).enumerate()
            {
                trials.push(TrialRow {
                    scenario: config.scenario,
                    seed: config.seed,
                    cell,
                    m: Some(m),
                    p_train: config.p_train,
                    p_eval: mu,
                    n: config.n,
                    trial,
                    stats: vec![
                        ("interval_lo", *lo),
                        ("interval_hi", *hi),
                        ("width", *w),
                        ("contained", *c),
                    ],
                });
            }
            cells.push(SimResultRow {
                scenario: config.scenario,
                seed: config.seed,
                cell,
                m: Some(m),
                p_train: config.p_train,
                p_eval: mu,
                n: config.n,
                trials: config.trials,
                stats: vec![("coverage", mean(&contained)), ("width_mean", mean(&widths))],
            });
        }
    }

    Ok(SimRun { cells, trials })
}

/// Linear classifier over 2-D features, fitted by full-batch gradient
/// descent from zero initialisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticModel {
    pub weights: [f64; 2],
    pub bias: f64,
}

impl LogisticModel {
    /// Predicted probability `sigmoid(w·x + b)`.
    pub fn score(&self, x: [f64; 2]) -> f64 {
        sigmoid(self.weights[0] * x[0] + self.weights[1] * x[1] + self.bias)
    }
}

/// Fit logistic-regression weights minimising mean logistic loss.
/// Deterministic: weights start at zero, so zero epochs means zero weights
/// and every score is 0.5.
pub fn fit_logistic(
    features: &[[f64; 2]],
    labels: &[bool],
    learning_rate: f64,
    epochs: usize,
) -> Result<LogisticModel> {
    if features.len() != labels.len() {
        return Err(Error::LengthMismatch { left: features.len(), right: labels.len() });
    }
    if features.is_empty() {
        return Err(Error::Empty("features"));
    }
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(Error::SingleClass);
    }

    let n = features.len() as f64;
    let mut w = [0.0f64; 2];
    let mut b = 0.0f64;
    for _ in 0..epochs {
        let mut gw = [0.0f64; 2];
        let mut gb = 0.0f64;
        for (x, &y) in features.iter().zip(labels) {
            let p = sigmoid(w[0] * x[0] + w[1] * x[1] + b);
            let r = p - f64::from(u8::from(y));
            gw[0] += r * x[0];
            gw[1] += r * x[1];
            gb += r;
        }
        w[0] -= learning_rate * gw[0] / n;
        w[1] -= learning_rate * gw[1] / n;
        b -= learning_rate * gb / n;
    }
    Ok(LogisticModel { weights: w, bias: b })
}

/// Two-class 2-D Gaussian sample with an exact positive count
/// `round(n·prevalence)`: class-conditional means `(0,0)` and `(d,d)`,
/// unit covariance.
fn gaussian_split<R: Rng>(
    rng: &mut R,
    n: usize,
    prevalence: f64,
    separation: f64,
) -> (Vec<[f64; 2]>, Vec<bool>) {
    let labels = exact_composition_labels(n, prevalence);
    let features = labels
        .iter()
        .map(|&y| {
            let base = if y { separation } else { 0.0 };
            let z0: f64 = StandardNormal.sample(rng);
            let z1: f64 = StandardNormal.sample(rng);
            [base + z0, base + z1]
        })
        .collect();
    (features, labels)
}

/// Validation MCC of a classifier trained at separation `d`, on fresh
/// train/validation splits drawn from `rng`.
fn validation_mcc_at(config: &SimConfig, d: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
    let cc = &config.classifier;
    let (train_x, train_y) = gaussian_split(rng, cc.n_train, config.p_train, d);
    let (val_x, val_y) = gaussian_split(rng, cc.n_val, config.p_train, d);
    let model = fit_logistic(&train_x, &train_y, cc.learning_rate, cc.epochs)?;

    let train_scores: Vec<f64> = train_x.iter().map(|&x| model.score(x)).collect();
    let p_train = train_y.iter().filter(|&&l| l).count() as f64 / train_y.len() as f64;
    let theta = calibrate_threshold(&train_scores, p_train)?;

    let val_scores: Vec<f64> = val_x.iter().map(|&x| model.score(x)).collect();
    let preds = predict_at(&val_scores, theta);
    Ok(confusion(&preds, &val_y)?.mcc())
}

/// Bisection on the class separation `d` to reach the target validation
/// MCC. Every evaluation reuses the same random stream (common random
/// numbers), making MCC a deterministic, effectively monotone function
/// of `d`.
fn tune_separation(config: &SimConfig) -> Result<f64> {
    let target = config.classifier.target_mcc;
    let mut lo = 0.05f64;
    let mut hi = 8.0f64;
    let eval = |d: f64| -> Result<f64> {
        let mut rng = trial_stream(config.seed, config.scenario, TUNING_CELL, 0);
        validation_mcc_at(config, d, &mut rng)
    };
    if eval(lo)? >= target {
        return Ok(lo);
    }
    if eval(hi)? <= target {
        return Ok(hi);
    }
    for _ in 0..40 {
        let mid = (lo + hi) / 2.0;
        let mcc = eval(mid)?;
        if (mcc - target).abs() < 0.002 {
            return Ok(mid);
        }
        if mcc < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / 2.0)
}

fn run_end_to_end(config: &SimConfig) -> Result<SimRun> {
    let cc = config.classifier;
    let d = match cc.separation {
        Some(d) => d,
        None => tune_separation(config)?,
    };
    let options = PipelineOptions::default();

    let mut cells = Vec::new();
    let mut trials = Vec::new();

    for (cell, &p_eval) in config.p_eval.iter().enumerate() {
        let per_trial: Vec<Result<Vec<(&'static str, f64)>>> = (0..config.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng =
                    trial_stream(config.seed, config.scenario, cell as u64, trial as u64);
                let (train_x, train_y) = gaussian_split(&mut rng, cc.n_train, config.p_train, d);
                let (val_x, val_y) = gaussian_split(&mut rng, cc.n_val, config.p_train, d);
                let (eval_x, eval_y) = gaussian_split(&mut rng, config.n, p_eval, d);
                let mu_true =
                    eval_y.iter().filter(|&&l| l).count() as f64 / eval_y.len() as f64;

                let model = fit_logistic(&train_x, &train_y, cc.learning_rate, cc.epochs)?;
                let to_dataset = |xs: &[[f64; 2]], ys: Option<&[bool]>, split: Split| {
                    let records: Vec<ScoredRecord> = xs
                        .iter()
                        .enumerate()
                        .map(|(i, &x)| ScoredRecord {
                            score: model.score(x),
                            label: ys.map(|l| l[i]),
                        })
                        .collect();
                    ScoredDataset::new(split, records)
                };
                let train = to_dataset(&train_x, Some(&train_y), Split::Train)?;
                let val = to_dataset(&val_x, Some(&val_y), Split::Validation)?;
                let eval = to_dataset(&eval_x, None, Split::Evaluation)?;

                let report = estimate_pipeline(&train, &val, &eval, &options)?;
                let map_err = (report.map - mu_true).abs();
                let raw_err = (report.mu_hat - mu_true).abs();
                let contained =
                    report.interval_lo <= mu_true && mu_true <= report.interval_hi;

                Ok(vec![
                    ("mu_true", mu_true),
                    ("mu_hat", report.mu_hat),
                    ("map", report.map),
                    ("validation_mcc", report.validation_mcc),
                    ("m", report.m),
                    ("p_value", report.p_value),
                    ("interval_lo", report.interval_lo),
                    ("interval_hi", report.interval_hi),
                    ("contained", f64::from(u8::from(contained))),
                    ("corrected_closer", f64::from(u8::from(map_err < raw_err))),
                ])
            })
            .collect();

        let per_trial: Vec<Vec<(&'static str, f64)>> =
            per_trial.into_iter().collect::<Result<_>>()?;

        let stat = |name: &str| -> Vec<f64> {
            per_trial
                .iter()
                .map(|stats| {
                    stats
                        .iter()
                        .find(|(k, _)| *k == name)
                        .map(|(_, v)| *v)
                        .expect("stat present")
                })
                .collect()
        };
        let reject_rate = stat("p_value").iter().filter(|&&p| p < 0.05).count() as f64
            / config.trials as f64;

        for (trial, stats) in per_trial.iter().enumerate() {
            trials.push(TrialRow {
                scenario: config.scenario,
                seed: config.seed,
                cell,
                m: None,
                p_train: config.p_train,
                p_eval,
                n: config.n,
                trial,
                stats: stats.clone(),
            });
        }
        cells.push(SimResultRow {
            scenario: config.scenario,
            seed: config.seed,
            cell,
            m: None,
            p_train: config.p_train,
            p_eval,
            n: config.n,
            trials: config.trials,
            stats: vec![
                ("separation", d),
                ("mu_true_mean", mean(&stat("mu_true"))),
                ("mu_hat_mean", mean(&stat("mu_hat"))),
                ("map_mean", mean(&stat("map"))),
                ("validation_mcc_mean", mean(&stat("validation_mcc"))),
                ("coverage", mean(&stat("contained"))),
                ("corrected_closer_rate", mean(&stat("corrected_closer"))),
                ("reject_rate_05", reject_rate),
            ],
        });
    }

    Ok(SimRun { cells, trials })
}
