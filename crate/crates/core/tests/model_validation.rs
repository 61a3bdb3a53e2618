//! Cross-module validation of the noise model against its empirical
//! behaviour, plus the reproducibility contract of the simulation harness.

use debias_core::{
    confusion, run_scenario, simulate_noisy_predictions, NoiseModel, Scenario, SimConfig,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// At p_train = p_eval = 0.5 the population correlation of (Y, Ŷ) is
/// exactly m, so the empirical MCC over 10⁴ draws should track m within
/// ±0.02 across the whole grid.
#[test]
fn empirical_mcc_tracks_accuracy_parameter() {
    let n = 10_000;
    for i in 0..=10 {
        let m = i as f64 / 10.0;
        let model = NoiseModel::new(m, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + i);
        let labels: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
        let preds = simulate_noisy_predictions(&mut rng, &model, &labels);
        let mcc = confusion(&preds, &labels).unwrap().mcc();
        assert!(
            (mcc - m).abs() <= 0.02,
            "empirical MCC {mcc} vs m {m}"
        );
    }
}

/// Identical configs produce bit-identical tables regardless of the
/// rayon worker-thread count.
#[test]
fn results_do_not_depend_on_thread_count() {
    let run_with_threads = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let mut outputs = Vec::new();
            for scenario in [Scenario::MccNoise, Scenario::BiasDrift, Scenario::PosteriorRecovery] {
                let mut config = SimConfig::defaults(scenario);
                config.n = 400;
                config.trials = 12;
                if scenario != Scenario::PosteriorRecovery {
                    config.m_grid = vec![0.2, 0.8];
                }
                outputs.push(run_scenario(&config).unwrap());
            }
            let mut e2e = SimConfig::defaults(Scenario::ClassifierEndToEnd);
            e2e.n = 300;
            e2e.trials = 2;
            e2e.p_eval = vec![0.1, 0.4];
            e2e.classifier.n_train = 300;
            e2e.classifier.n_val = 300;
            e2e.classifier.separation = Some(1.8);
            outputs.push(run_scenario(&e2e).unwrap());
            outputs
        })
    };

    let single = run_with_threads(1);
    let multi = run_with_threads(4);
    assert_eq!(single, multi);
}
