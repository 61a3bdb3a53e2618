//! Estimation and reversal of participation bias in binary survey
//! responses, using predictions from an imperfect, calibrated classifier.
//!
//! The core idea: a classifier that is right a fraction `m` of the time and
//! otherwise guesses from its training distribution pulls the predicted
//! positive rate of any evaluation set toward the training-set mean. With
//! `m` estimated from the validation Matthews correlation coefficient, that
//! pull is quantified ([`noise_model`]), tested against the no-bias null
//! hypothesis and inverted through a Bayesian posterior over the true rate
//! ([`inference`]). [`calibration`] supplies the classifier bookkeeping and
//! [`simulation`] the Monte Carlo experiments that validate the whole
//! chain.

pub mod calibration;
pub mod error;
pub mod inference;
pub mod noise_model;
pub mod simulation;

pub use calibration::{
    calibrate_threshold, confusion, dropout_uncertainty, ece, platt_apply, platt_fit,
    predict_at, reliability, ConfusionMatrix, PlattFit, PlattParams, ReliabilityBin,
    ReliabilityBins, ScoredDataset, ScoredRecord, Split,
};
pub use error::{Error, Result};
pub use inference::{
    bias_test, estimate_pipeline, posterior, BetaPrior, BiasReport, BiasTestResult,
    CredibleInterval, PipelineOptions, PosteriorGrid, PosteriorSummaries, DEFAULT_GRID_POINTS,
};
pub use noise_model::{noise_from_mcc, BinaryCounts, MccCaution, NoiseEstimate, NoiseModel};
pub use simulation::{
    fit_logistic, run_bias_experiment, run_classifier_end_to_end, run_mcc_noise_experiment,
    run_posterior_recovery, run_scenario, simulate_noisy_predictions, ClassifierConfig,
    LogisticModel, Scenario, SimConfig, SimResultRow, SimRun, TrialRow,
};
