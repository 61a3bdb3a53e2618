//! Classifier-output bookkeeping: threshold calibration, confusion-matrix
//! metrics, Expected Calibration Error, Platt scaling, and dropout-ensemble
//! uncertainty.
//!
//! Threshold calibration here means choosing a decision boundary on raw
//! scores so that the predicted positive rate matches a target (the
//! training-set label mean), not adjusting probabilities. Probability
//! calibration is measured by ECE over equal-width bins and repaired, when
//! requested, by fitting a one-dimensional logistic map on held-out logits.

use crate::error::{Error, Result};

/// Which part of the train/validation/evaluation partition a dataset is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Validation,
    Evaluation,
}

impl Split {
    pub fn name(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Evaluation => "evaluation",
        }
    }
}

/// One classifier output: a raw score plus an optional binary label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredRecord {
    pub score: f64,
    pub label: Option<bool>,
}

/// Per-split scored data. Train and validation splits must carry a label on
/// every record; evaluation may be fully unlabeled.
#[derive(Debug, Clone)]
pub struct ScoredDataset {
    split: Split,
    records: Vec<ScoredRecord>,
}

impl ScoredDataset {
    pub fn new(split: Split, records: Vec<ScoredRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Empty("records"));
        }
        for (index, r) in records.iter().enumerate() {
            if !r.score.is_finite() {
                return Err(Error::NonFiniteScore { index });
            }
        }
        if matches!(split, Split::Train | Split::Validation)
            && records.iter().any(|r| r.label.is_none())
        {
            return Err(Error::MissingLabels { split: split.name() });
        }
        Ok(Self { split, records })
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[ScoredRecord] {
        &self.records
    }

    pub fn scores(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.score).collect()
    }

    /// All labels, or `None` if any record is unlabeled.
    pub fn labels(&self) -> Option<Vec<bool>> {
        self.records.iter().map(|r| r.label).collect()
    }

    /// Fraction of positive labels, or `None` if any record is unlabeled.
    pub fn label_mean(&self) -> Option<f64> {
        let labels = self.labels()?;
        let positives = labels.iter().filter(|&&l| l).count();
        Some(positives as f64 / labels.len() as f64)
    }
}

/// Choose a decision threshold so the fraction of scores at or above it is
/// the achievable fraction closest to `target_mean`.
///
/// The threshold is the midpoint between the two adjacent order statistics
/// it separates; at the extremes it is `min − 1` (everything positive) or
/// `max + 1` (nothing positive). With duplicate scores only splits between
/// distinct values are achievable; exact ties on the achievable rate break
/// toward the higher positive rate.
pub fn calibrate_threshold(scores: &[f64], target_mean: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::Empty("scores"));
    }
    if !(0.0..=1.0).contains(&target_mean) {
        return Err(Error::InvalidParameter(format!(
            "target_mean must lie in [0, 1], got {target_mean}"
        )));
    }
    for (index, s) in scores.iter().enumerate() {
        if !s.is_finite() {
            return Err(Error::NonFiniteScore { index });
        }
    }

    let mut sorted = scores.to_vec();
    // Descending: sorted[..k] are the k highest scores.
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let n = sorted.len();

    let mut best_k = 0usize;
    let mut best_diff = f64::INFINITY;
    for k in 0..=n {
        let achievable = k == 0 || k == n || sorted[k - 1] > sorted[k];
        if !achievable {
            continue;
        }
        let diff = (k as f64 / n as f64 - target_mean).abs();
        if diff < best_diff || (diff == best_diff && k > best_k) {
            best_diff = diff;
            best_k = k;
        }
    }

    Ok(if best_k == 0 {
        sorted[0] + 1.0
    } else if best_k == n {
        sorted[n - 1] - 1.0
    } else {
        (sorted[best_k - 1] + sorted[best_k]) / 2.0
    })
}

/// Binary predictions from raw scores at a threshold (`score >= threshold`).
pub fn predict_at(scores: &[f64], threshold: f64) -> Vec<bool> {
    scores.iter().map(|&s| s >= threshold).collect()
}

/// Confusion-matrix counts for binary predictions against binary labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
}

impl ConfusionMatrix {
    pub fn new(true_pos: u64, false_pos: u64, true_neg: u64, false_neg: u64) -> Result<Self> {
        if true_pos + false_pos + true_neg + false_neg == 0 {
            return Err(Error::Empty("confusion matrix counts"));
        }
        Ok(Self { true_pos, false_pos, true_neg, false_neg })
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }

    pub fn accuracy(&self) -> f64 {
        (self.true_pos + self.true_neg) as f64 / self.total() as f64
    }

    /// Matthews correlation coefficient:
    /// `(tp·tn − fp·fn) / sqrt((tp+fp)(tp+fn)(tn+fp)(tn+fn))`.
    ///
    /// Returns 0 when any denominator factor is 0 (the "no information"
    /// convention), which keeps the downstream noise estimate well-defined.
    pub fn mcc(&self) -> f64 {
        let tp = self.true_pos as f64;
        let fp = self.false_pos as f64;
        let tn = self.true_neg as f64;
        let fn_ = self.false_neg as f64;
        let denom = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
        if denom == 0.0 {
            return 0.0;
        }
        (tp * tn - fp * fn_) / denom.sqrt()
    }
}

/// Count tp/fp/tn/fn for equal-length prediction and label vectors.
pub fn confusion(predictions: &[bool], labels: &[bool]) -> Result<ConfusionMatrix> {
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch { left: predictions.len(), right: labels.len() });
    }
    if predictions.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    let mut m = ConfusionMatrix { true_pos: 0, false_pos: 0, true_neg: 0, false_neg: 0 };
    for (&p, &l) in predictions.iter().zip(labels) {
        match (p, l) {
            (true, true) => m.true_pos += 1,
            (true, false) => m.false_pos += 1,
            (false, false) => m.true_neg += 1,
            (false, true) => m.false_neg += 1,
        }
    }
    Ok(m)
}

/// One reliability-diagram bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReliabilityBin {
    pub count: usize,
    pub mean_confidence: f64,
    pub accuracy: f64,
}

/// Equal-width reliability bins over `[0, 1]`; the final bin is closed on
/// the right so a score of exactly 1 belongs to it.
#[derive(Debug, Clone)]
pub struct ReliabilityBins {
    n_bins: usize,
    total: usize,
    bins: Vec<ReliabilityBin>,
}

impl ReliabilityBins {
    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn bins(&self) -> &[ReliabilityBin] {
        &self.bins
    }

    /// Expected Calibration Error:
    /// `Σ (bin_count / N) · |bin_accuracy − bin_mean_confidence|`.
    pub fn ece(&self) -> f64 {
        self.bins
            .iter()
            .filter(|b| b.count > 0)
            .map(|b| b.count as f64 / self.total as f64 * (b.accuracy - b.mean_confidence).abs())
            .sum()
    }
}

/// Bin scores (probabilities in `[0, 1]`) against labels.
pub fn reliability(scores: &[f64], labels: &[bool], n_bins: usize) -> Result<ReliabilityBins> {
    if n_bins == 0 {
        return Err(Error::InvalidParameter("n_bins must be at least 1".into()));
    }
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch { left: scores.len(), right: labels.len() });
    }
    if scores.is_empty() {
        return Err(Error::Empty("scores"));
    }
    for (index, s) in scores.iter().enumerate() {
        if !s.is_finite() || !(0.0..=1.0).contains(s) {
            return Err(Error::InvalidParameter(format!(
                "score at index {index} must be a probability in [0, 1], got {s}"
            )));
        }
    }

    let mut count = vec![0usize; n_bins];
    let mut conf_sum = vec![0.0f64; n_bins];
    let mut correct = vec![0usize; n_bins];
    for (&s, &l) in scores.iter().zip(labels) {
        let bin = ((s * n_bins as f64) as usize).min(n_bins - 1);
        count[bin] += 1;
        conf_sum[bin] += s;
        if l {
            correct[bin] += 1;
        }
    }

    let bins = (0..n_bins)
        .map(|i| {
            if count[i] == 0 {
                ReliabilityBin { count: 0, mean_confidence: 0.0, accuracy: 0.0 }
            } else {
                ReliabilityBin {
                    count: count[i],
                    mean_confidence: conf_sum[i] / count[i] as f64,
                    accuracy: correct[i] as f64 / count[i] as f64,
                }
            }
        })
        .collect();

    Ok(ReliabilityBins { n_bins, total: scores.len(), bins })
}

/// Expected Calibration Error over `n_bins` equal-width bins.
pub fn ece(scores: &[f64], labels: &[bool], n_bins: usize) -> Result<f64> {
    reliability(scores, labels, n_bins).map(|r| r.ece())
}

/// Fitted Platt-scaling parameters: `p = sigmoid(slope·logit + intercept)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlattParams {
    pub slope: f64,
    pub intercept: f64,
}

/// Result of [`platt_fit`], including convergence status. On separable data
/// the loss has no minimiser and the fit stops at the iteration cap with
/// `converged = false`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlattFit {
    pub params: PlattParams,
    pub converged: bool,
    pub iterations: usize,
}

const PLATT_MAX_ITERATIONS: usize = 100;
const PLATT_GRAD_TOLERANCE: f64 = 1e-8;

/// Fit `(slope, intercept)` minimising mean logistic loss of
/// `sigmoid(slope·logit + intercept)` against the labels, by damped Newton
/// iteration starting from the identity transform.
///
/// Each Newton step is backtracked until the loss does not increase, so the
/// fit never ends up worse than the identity `(1, 0)`. Requires both classes
/// to be present; otherwise the loss is unbounded in the intercept.
pub fn platt_fit(logits: &[f64], labels: &[bool]) -> Result<PlattFit> {
    if logits.len() != labels.len() {
        return Err(Error::LengthMismatch { left: logits.len(), right: labels.len() });
    }
    if logits.len() < 2 {
        return Err(Error::InvalidParameter(
            "platt_fit requires at least 2 examples".into(),
        ));
    }
    for (index, x) in logits.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFiniteScore { index });
        }
    }
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(Error::SingleClass);
    }

    let n = logits.len() as f64;
    let loss_at = |a: f64, b: f64| -> f64 {
        logits
            .iter()
            .zip(labels)
            .map(|(&x, &y)| {
                let z = a * x + b;
                // ln(1 + exp(-z)) for y = 1, ln(1 + exp(z)) for y = 0,
                // evaluated without overflow.
                let s = if y { z } else { -z };
                if s >= 0.0 { (-s).exp().ln_1p() } else { -s + s.exp().ln_1p() }
            })
            .sum::<f64>()
            / n
    };

    let mut a = 1.0f64;
    let mut b = 0.0f64;
    let mut loss = loss_at(a, b);
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=PLATT_MAX_ITERATIONS {
        iterations = iter;
        let mut ga = 0.0;
        let mut gb = 0.0;
        let mut haa = 0.0;
        let mut hab = 0.0;
        let mut hbb = 0.0;
        for (&x, &y) in logits.iter().zip(labels) {
            let p = sigmoid(a * x + b);
            let r = p - f64::from(u8::from(y));
            let w = p * (1.0 - p);
            ga += r * x;
            gb += r;
            haa += w * x * x;
            hab += w * x;
            hbb += w;
        }
        ga /= n;
        gb /= n;
        haa /= n;
        hab /= n;
        hbb /= n;
        let det = haa * hbb - hab * hab;

        if (ga * ga + gb * gb).sqrt() < PLATT_GRAD_TOLERANCE {
            // A vanishing gradient only marks a minimiser if the curvature
            // has not collapsed. On separable data every p·(1−p) weight
            // decays to zero as the slope grows, so the Hessian determinant
            // goes to zero too and the "solution" is the saturated tail,
            // not a minimum.
            converged = det > 1e-12;
            break;
        }

        // Newton direction; near-singular Hessian (separable tail) falls
        // back to plain gradient descent.
        let (mut da, mut db) = if det.abs() > 1e-300 {
            ((hbb * ga - hab * gb) / det, (haa * gb - hab * ga) / det)
        } else {
            (ga, gb)
        };

        // Backtracking: halve the step until the loss does not increase.
        let mut step = 1.0;
        loop {
            let next = loss_at(a - step * da, b - step * db);
            if next <= loss {
                a -= step * da;
                b -= step * db;
                loss = next;
                break;
            }
            step /= 2.0;
            if step < 1e-12 {
                da = 0.0;
                db = 0.0;
                break;
            }
        }
        if da == 0.0 && db == 0.0 {
            break;
        }
    }

    Ok(PlattFit { params: PlattParams { slope: a, intercept: b }, converged, iterations })
}

/// Apply fitted Platt parameters: `sigmoid(slope·logit + intercept)`.
pub fn platt_apply(params: &PlattParams, logit: f64) -> f64 {
    sigmoid(params.slope * logit + params.intercept)
}

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Per-example mean and population standard deviation across `S` stochastic
/// forward passes (rows of `samples`), the dropout-at-test-time uncertainty
/// proxy. The std divides by `S`: it describes the spread of the predictive
/// distribution itself, not an estimate of a larger population.
pub fn dropout_uncertainty(samples: &[Vec<f64>]) -> Result<Vec<(f64, f64)>> {
    if samples.len() < 2 {
        return Err(Error::InvalidParameter(
            "dropout_uncertainty requires at least 2 passes".into(),
        ));
    }
    let n = samples[0].len();
    if n == 0 {
        return Err(Error::Empty("samples"));
    }
    for row in samples {
        if row.len() != n {
            return Err(Error::LengthMismatch { left: n, right: row.len() });
        }
    }

    let s = samples.len() as f64;
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let mut sum = 0.0;
        let mut sq = 0.0;
        for row in samples {
            sum += row[j];
            sq += row[j] * row[j];
        }
        let mean = sum / s;
        let var = (sq / s - mean * mean).max(0.0);
        out.push((mean, var.sqrt()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn dataset_split_label_rules() {
        let labeled = vec![ScoredRecord { score: 0.3, label: Some(true) }];
        let unlabeled = vec![ScoredRecord { score: 0.3, label: None }];
        assert!(ScoredDataset::new(Split::Train, labeled.clone()).is_ok());
        assert!(ScoredDataset::new(Split::Train, unlabeled.clone()).is_err());
        assert!(ScoredDataset::new(Split::Validation, unlabeled.clone()).is_err());
        assert!(ScoredDataset::new(Split::Evaluation, unlabeled).is_ok());
        assert!(ScoredDataset::new(Split::Evaluation, vec![]).is_err());
        let bad = vec![ScoredRecord { score: f64::NAN, label: Some(false) }];
        assert!(ScoredDataset::new(Split::Evaluation, bad).is_err());
    }

    #[test]
    fn threshold_known_values() {
        let scores = [0.1, 0.4, 0.6, 0.9];
        let theta = calibrate_threshold(&scores, 0.5).unwrap();
        assert!(approx_eq(theta, 0.5, 1e-15));
        assert_eq!(predict_at(&scores, theta).iter().filter(|&&p| p).count(), 2);

        let theta = calibrate_threshold(&scores, 0.25).unwrap();
        assert!(approx_eq(theta, 0.75, 1e-15));
        assert_eq!(predict_at(&scores, theta).iter().filter(|&&p| p).count(), 1);

        let theta = calibrate_threshold(&scores, 1.0).unwrap();
        assert!(theta < 0.1);
        assert_eq!(predict_at(&scores, theta).iter().filter(|&&p| p).count(), 4);

        let theta = calibrate_threshold(&scores, 0.0).unwrap();
        assert!(theta > 0.9);
        assert_eq!(predict_at(&scores, theta).iter().filter(|&&p| p).count(), 0);

        assert!(calibrate_threshold(&[], 0.5).is_err());
        assert!(calibrate_threshold(&scores, 1.5).is_err());
    }

    #[test]
    fn threshold_duplicate_scores_pick_closest_rate() {
        // Only splits between distinct values are achievable: rates 0, 0.75, 1.
        let scores = [0.2, 0.7, 0.7, 0.7];
        let theta = calibrate_threshold(&scores, 0.5).unwrap();
        let rate = predict_at(&scores, theta).iter().filter(|&&p| p).count() as f64 / 4.0;
        assert!(approx_eq(rate, 0.75, 1e-15));

        // Exact tie between rates 0.75 and 1 at target 0.875: prefer higher.
        let theta = calibrate_threshold(&scores, 0.875).unwrap();
        let rate = predict_at(&scores, theta).iter().filter(|&&p| p).count() as f64 / 4.0;
        assert!(approx_eq(rate, 1.0, 1e-15));
    }

    #[test]
    fn confusion_known_values() {
        let m = confusion(&[true, true], &[true, true]).unwrap();
        assert_eq!((m.true_pos, m.false_pos, m.true_neg, m.false_neg), (2, 0, 0, 0));

        let m = confusion(&[false, true], &[true, false]).unwrap();
        assert_eq!((m.true_pos, m.false_pos, m.true_neg, m.false_neg), (0, 1, 0, 1));

        let m = confusion(&[true, false, true, false], &[true, true, false, false]).unwrap();
        assert_eq!((m.true_pos, m.false_pos, m.true_neg, m.false_neg), (1, 1, 1, 1));
        assert_eq!(m.total(), 4);

        assert!(confusion(&[true], &[]).is_err());
        assert!(confusion(&[], &[]).is_err());
    }

    #[test]
    fn mcc_known_values() {
        let m = ConfusionMatrix::new(5, 0, 5, 0).unwrap();
        assert!(approx_eq(m.mcc(), 1.0, 1e-15));

        let m = ConfusionMatrix::new(0, 5, 0, 5).unwrap();
        assert!(approx_eq(m.mcc(), -1.0, 1e-15));

        // 16 / sqrt(1120)
        let m = ConfusionMatrix::new(6, 1, 3, 2).unwrap();
        assert!(approx_eq(m.mcc(), 0.47809144373375745, 1e-15));

        // Zero-denominator convention.
        let m = ConfusionMatrix::new(5, 5, 0, 0).unwrap();
        assert_eq!(m.mcc(), 0.0);
    }

    fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let mut cov = 0.0;
        let mut vx = 0.0;
        let mut vy = 0.0;
        for (&x, &y) in xs.iter().zip(ys) {
            cov += (x - mx) * (y - my);
            vx += (x - mx) * (x - mx);
            vy += (y - my) * (y - my);
        }
        if vx == 0.0 || vy == 0.0 {
            return None;
        }
        Some(cov / (vx * vy).sqrt())
    }

    #[test]
    fn mcc_matches_pearson_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let n = rng.random_range(2..40);
            let preds: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
            let labels: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
            let xs: Vec<f64> = preds.iter().map(|&p| f64::from(u8::from(p))).collect();
            let ys: Vec<f64> = labels.iter().map(|&l| f64::from(u8::from(l))).collect();
            if let Some(r) = pearson(&xs, &ys) {
                let mcc = confusion(&preds, &labels).unwrap().mcc();
                assert!(
                    approx_eq(mcc, r, 1e-12),
                    "mcc {mcc} vs pearson {r} on n={n}"
                );
            }
        }
    }

    #[test]
    fn mcc_label_flip_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let tp = rng.random_range(0..20u64);
            let fp = rng.random_range(0..20u64);
            let tn = rng.random_range(0..20u64);
            let fn_ = rng.random_range(0..20u64);
            if tp + fp + tn + fn_ == 0 {
                continue;
            }
            let m = ConfusionMatrix::new(tp, fp, tn, fn_).unwrap();
            let flipped = ConfusionMatrix::new(tn, fn_, tp, fp).unwrap();
            assert!(approx_eq(m.mcc(), flipped.mcc(), 1e-12));
        }
    }

    #[test]
    fn ece_known_values() {
        // All scores 0.8, 60% positive, one bin: |0.6 - 0.8|.
        let scores = vec![0.8; 10];
        let labels: Vec<bool> = (0..10).map(|i| i < 6).collect();
        assert!(approx_eq(ece(&scores, &labels, 1).unwrap(), 0.2, 1e-12));

        // Scores equal to labels exactly: perfectly calibrated.
        let scores = [0.0, 1.0, 1.0, 0.0];
        let labels = [false, true, true, false];
        for bins in [1, 2, 5, 15] {
            assert!(approx_eq(ece(&scores, &labels, bins).unwrap(), 0.0, 1e-15));
        }

        // Hand-evaluated two-bin case.
        let scores = [0.2, 0.2, 0.9, 0.9];
        let labels = [false, false, true, false];
        assert!(approx_eq(ece(&scores, &labels, 2).unwrap(), 0.3, 1e-12));

        assert!(ece(&scores, &labels, 0).is_err());
        assert!(ece(&[1.5], &[true], 2).is_err());
    }

    #[test]
    fn reliability_counts_sum_to_total() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let scores: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
        let labels: Vec<bool> = (0..500).map(|_| rng.random::<bool>()).collect();
        let r = reliability(&scores, &labels, 15).unwrap();
        assert_eq!(r.bins().iter().map(|b| b.count).sum::<usize>(), 500);
        assert_eq!(r.bins().len(), 15);
    }

    #[test]
    fn platt_apply_known_values() {
        let id = PlattParams { slope: 1.0, intercept: 0.0 };
        assert!(approx_eq(platt_apply(&id, 0.0), 0.5, 1e-15));
        assert!(approx_eq(platt_apply(&id, 3f64.ln()), 0.75, 1e-15));
        let flat = PlattParams { slope: 0.0, intercept: 0.0 };
        assert!(approx_eq(platt_apply(&flat, 12.3), 0.5, 1e-15));
        assert!(approx_eq(platt_apply(&flat, -4.0), 0.5, 1e-15));
    }

    fn synthetic_logits(n: usize, seed: u64) -> (Vec<f64>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut logits = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let z: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
            let logit = 2.0 * z;
            logits.push(logit);
            labels.push(rng.random::<f64>() < sigmoid(logit));
        }
        (logits, labels)
    }

    #[test]
    fn platt_recovers_identity_on_calibrated_logits() {
        let (logits, labels) = synthetic_logits(10_000, 21);
        let fit = platt_fit(&logits, &labels).unwrap();
        assert!(fit.converged);
        assert!(approx_eq(fit.params.slope, 1.0, 0.1), "slope {}", fit.params.slope);
        assert!(approx_eq(fit.params.intercept, 0.0, 0.1), "intercept {}", fit.params.intercept);
    }

    #[test]
    fn platt_inverts_temperature() {
        let (logits, labels) = synthetic_logits(10_000, 22);
        let scaled: Vec<f64> = logits.iter().map(|&x| 3.0 * x).collect();
        let fit = platt_fit(&scaled, &labels).unwrap();
        assert!(fit.converged);
        assert!(
            approx_eq(fit.params.slope, 1.0 / 3.0, 0.05),
            "slope {}",
            fit.params.slope
        );
    }

    #[test]
    fn platt_separable_data_reports_non_convergence() {
        let fit = platt_fit(&[-1.0, 1.0], &[false, true]).unwrap();
        assert!(!fit.converged);
        assert!(fit.params.slope.is_finite());
        assert!(fit.iterations == PLATT_MAX_ITERATIONS || fit.iterations > 0);
    }

    #[test]
    fn platt_rejects_single_class() {
        assert!(matches!(
            platt_fit(&[0.1, 0.2], &[true, true]),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn platt_never_worse_than_identity() {
        let mean_loss = |params: &PlattParams, logits: &[f64], labels: &[bool]| -> f64 {
            logits
                .iter()
                .zip(labels)
                .map(|(&x, &y)| {
                    let p = platt_apply(params, x).clamp(1e-15, 1.0 - 1e-15);
                    if y { -p.ln() } else { -(1.0 - p).ln() }
                })
                .sum::<f64>()
                / logits.len() as f64
        };
        let identity = PlattParams { slope: 1.0, intercept: 0.0 };
        for seed in [1u64, 2, 3, 4, 5] {
            let (logits, labels) = synthetic_logits(500, seed);
            let scaled: Vec<f64> = logits.iter().map(|&x| 0.5 * x - 0.3).collect();
            let fit = platt_fit(&scaled, &labels).unwrap();
            assert!(
                mean_loss(&fit.params, &scaled, &labels)
                    <= mean_loss(&identity, &scaled, &labels) + 1e-12
            );
        }
    }

    #[test]
    fn dropout_uncertainty_known_values() {
        let constant = vec![vec![0.7; 4], vec![0.7; 4], vec![0.7; 4]];
        for (mean, std) in dropout_uncertainty(&constant).unwrap() {
            assert!(approx_eq(mean, 0.7, 1e-15));
            assert!(approx_eq(std, 0.0, 1e-7));
        }

        let two = vec![vec![0.0; 3], vec![1.0; 3]];
        for (mean, std) in dropout_uncertainty(&two).unwrap() {
            assert!(approx_eq(mean, 0.5, 1e-15));
            assert!(approx_eq(std, 0.5, 1e-15));
        }

        assert!(dropout_uncertainty(&[vec![0.5; 3]]).is_err());
        assert!(dropout_uncertainty(&[vec![0.5; 3], vec![0.5; 2]]).is_err());
    }

    #[test]
    fn dropout_uncertainty_bernoulli_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 10_000;
        let passes = 10;
        let samples: Vec<Vec<f64>> = (0..passes)
            .map(|_| (0..n).map(|_| f64::from(u8::from(rng.random::<bool>()))).collect())
            .collect();
        let stats = dropout_uncertainty(&samples).unwrap();
        let grand_mean = stats.iter().map(|(m, _)| m).sum::<f64>() / n as f64;
        let grand_std = stats.iter().map(|(_, s)| s).sum::<f64>() / n as f64;
        assert!(approx_eq(grand_mean, 0.5, 0.01));
        // E[sample std of 10 fair coin flips] is close to but below 0.5.
        assert!(approx_eq(grand_std, 0.47, 0.02), "grand std {grand_std}");
    }
}
