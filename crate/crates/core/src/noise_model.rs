//! Closed-form mathematics of the prediction noise model.
//!
//! A binary classifier with accuracy parameter `m` echoes the true label
//! with probability `m`; the rest of the time it draws from the noise
//! distribution `Bernoulli(p_train)`, centred on its training-set positive
//! rate. A single prediction therefore lands positive with probability
//!
//! ```text
//! P(Ŷ = 1 | Y = y) = m·y + (1 − m)·p_train
//! ```
//!
//! and `h` positive out of `h + t` predictions follow a plain Binomial in
//! `e(μ) = m·μ + (1 − m)·p_train`, which is everything the hypothesis test
//! and the posterior need.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Noise model parameters: accuracy `m` and training-set positive rate
/// `p_train`, both in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    m: f64,
    p_train: f64,
}

impl NoiseModel {
    pub fn new(m: f64, p_train: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&m) {
            return Err(Error::InvalidParameter(format!(
                "accuracy parameter m must lie in [0, 1], got {m}"
            )));
        }
        if !(0.0..=1.0).contains(&p_train) {
            return Err(Error::InvalidParameter(format!(
                "p_train must lie in [0, 1], got {p_train}"
            )));
        }
        Ok(Self { m, p_train })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn p_train(&self) -> f64 {
        self.p_train
    }

    /// `P(Ŷ = 1 | Y = y) = m·y + (1 − m)·p_train`.
    pub fn predictive_prob(&self, y: bool) -> f64 {
        self.m * f64::from(u8::from(y)) + (1.0 - self.m) * self.p_train
    }

    /// Expected predicted positive rate given a true rate `mu`:
    /// `E[μ̂ | μ] = m·μ + (1 − m)·p_train`.
    ///
    /// Affine in `mu`, with `expected_prediction_mean(p_train) = p_train`
    /// for every `m` (the no-bias fixed point).
    pub fn expected_prediction_mean(&self, mu: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&mu));
        self.m * mu + (1.0 - self.m) * self.p_train
    }

    /// Per-example prediction variance conditional on the label mix:
    /// `μ·e₁(1 − e₁) + (1 − μ)·e₀(1 − e₀)` with `e_y = P(Ŷ=1 | Y=y)`.
    ///
    /// This conditions on the evaluation set's labels (a fixed population
    /// with positive fraction `mu`); the label-sampling term `m²·μ(1 − μ)`
    /// is deliberately not included.
    pub fn prediction_variance(&self, mu: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&mu));
        let e1 = self.predictive_prob(true);
        let e0 = self.predictive_prob(false);
        mu * e1 * (1.0 - e1) + (1.0 - mu) * e0 * (1.0 - e0)
    }

    /// Standard error of the predicted mean over `n` examples:
    /// `sqrt(prediction_variance(mu) / n)`.
    pub fn standard_error(&self, mu: f64, n: u64) -> f64 {
        debug_assert!(n >= 1);
        (self.prediction_variance(mu) / n as f64).sqrt()
    }

    /// Log-likelihood of observing `counts` given the true mean `mu`:
    ///
    /// ```text
    /// log P(h, t | μ) = log C(h+t, h) + h·log e(μ) + t·log(1 − e(μ))
    /// ```
    ///
    /// Evaluated entirely in log space (log-gamma for the binomial
    /// coefficient), so counts up to at least 10⁷ stay finite. With
    /// `include_combinatorial` off the constant `log C(h+t, h)` is omitted,
    /// which is sufficient for posterior work where it cancels.
    ///
    /// Returns `f64::NEG_INFINITY` when a factor is exactly zero and its
    /// exponent is positive.
    pub fn log_likelihood(
        &self,
        counts: BinaryCounts,
        mu: f64,
        include_combinatorial: bool,
    ) -> f64 {
        debug_assert!((0.0..=1.0).contains(&mu));
        let e = self.expected_prediction_mean(mu);
        let h = counts.positives() as f64;
        let t = counts.negatives() as f64;

        let mut log_lik = 0.0;
        if counts.positives() > 0 {
            if e == 0.0 {
                return f64::NEG_INFINITY;
            }
            log_lik += h * e.ln();
        }
        if counts.negatives() > 0 {
            if e == 1.0 {
                return f64::NEG_INFINITY;
            }
            log_lik += t * (1.0 - e).ln();
        }
        if include_combinatorial {
            log_lik += ln_gamma(h + t + 1.0) - ln_gamma(h + 1.0) - ln_gamma(t + 1.0);
        }
        log_lik
    }
}

/// Counts of positive ("heads") and negative ("tails") predictions on an
/// evaluation set. At least one prediction is required.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinaryCounts {
    positives: u64,
    negatives: u64,
}

impl BinaryCounts {
    pub fn new(positives: u64, negatives: u64) -> Result<Self> {
        if positives + negatives == 0 {
            return Err(Error::Empty("prediction counts"));
        }
        Ok(Self { positives, negatives })
    }

    pub fn positives(&self) -> u64 {
        self.positives
    }

    pub fn negatives(&self) -> u64 {
        self.negatives
    }

    pub fn total(&self) -> u64 {
        self.positives + self.negatives
    }

    /// Predicted mean `μ̂ = h / (h + t)`.
    pub fn predicted_mean(&self) -> f64 {
        self.positives as f64 / self.total() as f64
    }

    /// Counts from a vector of binary predictions.
    pub fn from_predictions(predictions: &[bool]) -> Result<Self> {
        let positives = predictions.iter().filter(|&&p| p).count() as u64;
        Self::new(positives, predictions.len() as u64 - positives)
    }
}

/// Caution raised by [`noise_from_mcc`] when the estimate is degenerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MccCaution {
    /// MCC ≤ 0: the model carries no usable signal; inference collapses to
    /// the prior.
    Uninformative,
    /// MCC is exactly 1, which finite validation sets rarely justify.
    Perfect,
}

/// Accuracy parameter estimated from a validation MCC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseEstimate {
    pub m: f64,
    pub caution: Option<MccCaution>,
}

/// Estimate the accuracy parameter as `clamp(validation_mcc, 0, 1)`.
///
/// The MCC-noise relationship is close to linear but not exact; no
/// correction term is applied. Non-finite input is rejected.
pub fn noise_from_mcc(validation_mcc: f64) -> Result<NoiseEstimate> {
    if !validation_mcc.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "validation MCC must be finite, got {validation_mcc}"
        )));
    }
    let m = validation_mcc.clamp(0.0, 1.0);
    let caution = if validation_mcc <= 0.0 {
        Some(MccCaution::Uninformative)
    } else if validation_mcc == 1.0 {
        Some(MccCaution::Perfect)
    } else {
        None
    };
    Ok(NoiseEstimate { m, caution })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn model(m: f64, p_train: f64) -> NoiseModel {
        NoiseModel::new(m, p_train).unwrap()
    }

    #[test]
    fn construction_enforces_domains() {
        assert!(NoiseModel::new(-0.1, 0.5).is_err());
        assert!(NoiseModel::new(1.1, 0.5).is_err());
        assert!(NoiseModel::new(0.5, -0.1).is_err());
        assert!(NoiseModel::new(0.5, 1.1).is_err());
        assert!(NoiseModel::new(f64::NAN, 0.5).is_err());
        assert!(NoiseModel::new(0.0, 0.0).is_ok());
        assert!(NoiseModel::new(1.0, 1.0).is_ok());
    }

    #[test]
    fn counts_require_at_least_one_prediction() {
        assert!(BinaryCounts::new(0, 0).is_err());
        let c = BinaryCounts::new(3, 1).unwrap();
        assert_eq!(c.total(), 4);
        assert!(approx_eq(c.predicted_mean(), 0.75, 1e-15));
    }

    #[test]
    fn predictive_prob_known_values() {
        // Perfect model returns the label.
        assert_eq!(model(1.0, 0.3).predictive_prob(true), 1.0);
        // Pure noise returns the training mean.
        assert_eq!(model(0.0, 0.3).predictive_prob(true), 0.3);
        // Direct substitution: 0.5·0 + 0.5·0.8.
        assert!(approx_eq(model(0.5, 0.8).predictive_prob(false), 0.4, 1e-15));
    }

    #[test]
    fn expected_mean_known_values() {
        assert!(approx_eq(model(1.0, 0.8).expected_prediction_mean(0.6), 0.6, 1e-15));
        assert!(approx_eq(model(0.0, 0.8).expected_prediction_mean(0.6), 0.8, 1e-15));
        assert!(approx_eq(model(0.5, 0.8).expected_prediction_mean(0.6), 0.7, 1e-15));
    }

    #[test]
    fn expected_mean_is_affine_with_null_fixed_point() {
        for &m in &[0.0, 0.25, 0.5, 0.79, 1.0] {
            for &p in &[0.0, 0.1, 0.5, 0.9, 1.0] {
                let nm = model(m, p);
                // Fixed point at mu = p_train for every m.
                assert!(approx_eq(nm.expected_prediction_mean(p), p, 1e-12));
                // Slope m, intercept (1 − m)·p_train.
                let f0 = nm.expected_prediction_mean(0.0);
                let f1 = nm.expected_prediction_mean(1.0);
                assert!(approx_eq(f1 - f0, m, 1e-12));
                assert!(approx_eq(f0, (1.0 - m) * p, 1e-12));
            }
        }
    }

    #[test]
    fn variance_known_values() {
        assert_eq!(model(1.0, 0.3).prediction_variance(0.5), 0.0);
        assert_eq!(model(1.0, 0.9).prediction_variance(0.5), 0.0);
        // Bernoulli(0.5) variance regardless of mu.
        assert!(approx_eq(model(0.0, 0.5).prediction_variance(0.3), 0.25, 1e-15));
        // e1 = 0.75, e0 = 0.25.
        assert!(approx_eq(model(0.5, 0.5).prediction_variance(0.5), 0.1875, 1e-15));
    }

    #[test]
    fn standard_error_known_values() {
        assert_eq!(model(1.0, 0.3).standard_error(0.5, 100), 0.0);
        assert!(approx_eq(model(0.0, 0.5).standard_error(0.5, 100), 0.05, 1e-15));
        assert!(approx_eq(
            model(0.5, 0.5).standard_error(0.5, 1000),
            (0.1875f64 / 1000.0).sqrt(),
            1e-15
        ));
    }

    /// Monte Carlo check of the conditional moments: labels fixed with
    /// exact positive fraction mu, noise redrawn per example. The variance
    /// oracle is the label-group mixture of within-group sample variances,
    /// matching the conditional definition.
    #[test]
    fn monte_carlo_agrees_with_moments() {
        let nm = model(0.5, 0.5);
        let mu = 0.5;
        let n = 100_000usize;
        let n_pos = (n as f64 * mu).round() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(1234);

        let mut sum = 0.0;
        let mut group_sum = [0.0f64; 2];
        let mut group_sq = [0.0f64; 2];
        let mut group_n = [0usize; 2];
        for i in 0..n {
            let y = i < n_pos;
            let p = nm.predictive_prob(y);
            let pred = if rng.random::<f64>() < p { 1.0 } else { 0.0 };
            sum += pred;
            let g = usize::from(y);
            group_sum[g] += pred;
            group_sq[g] += pred * pred;
            group_n[g] += 1;
        }

        let mean = sum / n as f64;
        let expected = nm.expected_prediction_mean(mu);
        let se = nm.standard_error(mu, n as u64);
        assert!(
            (mean - expected).abs() <= 4.0 * se,
            "mean {mean} off expectation {expected} by more than 4 SE"
        );

        let mut var = 0.0;
        for g in 0..2 {
            let ng = group_n[g] as f64;
            let gm = group_sum[g] / ng;
            let gv = group_sq[g] / ng - gm * gm;
            let weight = if g == 1 { mu } else { 1.0 - mu };
            var += weight * gv;
        }
        let theory = nm.prediction_variance(mu);
        assert!(
            (var - theory).abs() / theory < 0.05,
            "sample variance {var} not within 5% of {theory}"
        );
    }

    #[test]
    fn log_likelihood_known_values() {
        // Symmetric single flip: P(Ŷ=1) = 0.5.
        let nm = model(0.5, 0.5);
        let c = BinaryCounts::new(1, 0).unwrap();
        assert!(approx_eq(nm.log_likelihood(c, 0.5, true), 0.5f64.ln(), 1e-12));

        // Pure Binomial(3, 0.5) at m = 1: C(3,2)·0.5³ = 0.375.
        let nm = model(1.0, 0.9);
        let c = BinaryCounts::new(2, 1).unwrap();
        assert!(approx_eq(nm.log_likelihood(c, 0.5, true), 0.375f64.ln(), 1e-12));
        assert!(approx_eq(
            nm.log_likelihood(c, 0.5, false),
            0.125f64.ln(),
            1e-12
        ));
    }

    /// Frozen values from an arbitrary-precision evaluation of
    /// log C(h+t, h) + h·log e + t·log(1 − e).
    #[test]
    fn log_likelihood_large_counts_match_high_precision_oracle() {
        let nm = model(0.8, 0.25);
        let c = BinaryCounts::new(100_000, 300_000).unwrap();
        let on = nm.log_likelihood(c, 0.3, true);
        let off = nm.log_likelihood(c, 0.3, false);
        assert!(on.is_finite() && off.is_finite());
        assert!(
            approx_eq(on, -1607.0019978034197, 1e-7),
            "got {on}"
        );
        assert!(
            approx_eq(off, -226_534.52828419452, 1e-4),
            "got {off}"
        );

        // n = 10⁷ stays finite in fixed precision.
        let nm = model(0.5, 0.5);
        let c = BinaryCounts::new(7_000_000, 3_000_000).unwrap();
        let on = nm.log_likelihood(c, 0.3, true);
        let off = nm.log_likelihood(c, 0.3, false);
        assert!(approx_eq(on, -1_837_877.1715306388, 0.01), "got {on}");
        assert!(approx_eq(off, -7_946_511.994417058, 0.05), "got {off}");
    }

    #[test]
    fn log_likelihood_zero_factor_sentinels() {
        // m = 1, mu = 0: positive predictions are impossible.
        let nm = model(1.0, 0.5);
        let c = BinaryCounts::new(1, 9).unwrap();
        assert_eq!(nm.log_likelihood(c, 0.0, true), f64::NEG_INFINITY);
        // m = 1, mu = 1: negative predictions are impossible.
        assert_eq!(nm.log_likelihood(c, 1.0, true), f64::NEG_INFINITY);
        // Zero exponent on a zero factor contributes nothing.
        let all_neg = BinaryCounts::new(0, 10).unwrap();
        assert!(nm.log_likelihood(all_neg, 0.0, true).is_finite());
        assert!(approx_eq(nm.log_likelihood(all_neg, 0.0, true), 0.0, 1e-12));
    }

    #[test]
    fn likelihood_sums_to_one_over_outcomes() {
        for &(m, p, mu) in &[
            (0.5, 0.5, 0.5),
            (0.8, 0.25, 0.3),
            (0.0, 0.7, 0.2),
            (1.0, 0.1, 0.6),
            (0.3, 0.9, 0.05),
        ] {
            let nm = model(m, p);
            for &n in &[1u64, 7, 50, 200] {
                let mut total = 0.0;
                for h in 0..=n {
                    let c = BinaryCounts::new(h, n - h).unwrap();
                    total += nm.log_likelihood(c, mu, true).exp();
                }
                assert!(
                    approx_eq(total, 1.0, 1e-9),
                    "sum {total} for m={m} p={p} mu={mu} n={n}"
                );
            }
        }
    }

    #[test]
    fn noise_from_mcc_clamps_and_flags() {
        let e = noise_from_mcc(1.0).unwrap();
        assert_eq!(e.m, 1.0);
        assert_eq!(e.caution, Some(MccCaution::Perfect));

        let e = noise_from_mcc(0.0).unwrap();
        assert_eq!(e.m, 0.0);
        assert_eq!(e.caution, Some(MccCaution::Uninformative));

        let e = noise_from_mcc(-0.2).unwrap();
        assert_eq!(e.m, 0.0);
        assert_eq!(e.caution, Some(MccCaution::Uninformative));

        let e = noise_from_mcc(0.79).unwrap();
        assert_eq!(e.m, 0.79);
        assert_eq!(e.caution, None);

        assert!(noise_from_mcc(f64::NAN).is_err());
        assert!(noise_from_mcc(f64::INFINITY).is_err());
    }
}
