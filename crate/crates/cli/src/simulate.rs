//! `debias simulate`: the Monte Carlo validation scenarios, emitted as CSV.
//!
//! Aggregate table columns: `scenario,m,noise,p_train,p_eval,n,trials,stat_name,value`.
//! Per-trial table (with `--raw`): `scenario,m,noise,p_train,p_eval,n,trial,stat_name,value`.
//! The `m`/`noise` columns are empty for `classifier_end_to_end`, where the
//! accuracy parameter is estimated per run instead of configured.

use std::path::PathBuf;

use clap::Args;
use debias_core::{run_scenario, Scenario, SimConfig, SimRun};

use crate::errors::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::output::{fmt_f64, fmt_opt_f64, resolve_out_dir};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario: mcc_noise, bias_drift, posterior_recovery, classifier_end_to_end
    pub scenario: String,

    /// Base seed for all random streams
    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Examples per trial (evaluation-set size)
    #[arg(long)]
    pub n: Option<usize>,

    /// Trials per cell
    #[arg(long)]
    pub trials: Option<usize>,

    /// Training-set positive rate
    #[arg(long)]
    pub p_train: Option<f64>,

    /// Evaluation-mean sweep, comma-separated
    #[arg(long, value_delimiter = ',')]
    pub p_eval: Option<Vec<f64>>,

    /// Accuracy-parameter grid, comma-separated
    #[arg(long, value_delimiter = ',')]
    pub m_grid: Option<Vec<f64>>,

    /// Worker threads for trial parallelism (0 = automatic). Never changes
    /// output bytes.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,

    /// Also write the per-trial table
    #[arg(long)]
    pub raw: bool,

    /// Directory for output CSVs and manifests
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,

    /// Target validation MCC for the synthetic classifier (end-to-end only)
    #[arg(long)]
    pub target_mcc: Option<f64>,

    /// Fixed class separation d, skipping the MCC tuning (end-to-end only)
    #[arg(long)]
    pub separation: Option<f64>,

    /// Training-set size for the synthetic classifier (end-to-end only)
    #[arg(long)]
    pub n_train: Option<usize>,

    /// Validation-set size for the synthetic classifier (end-to-end only)
    #[arg(long)]
    pub n_val: Option<usize>,
}

fn build_config(args: &SimulateArgs) -> CliResult<SimConfig> {
    let scenario: Scenario = args.scenario.parse().map_err(CliError::from)?;
    let mut config = SimConfig::defaults(scenario);
    config.seed = args.seed;
    if let Some(n) = args.n {
        config.n = n;
    }
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    if let Some(p) = args.p_train {
        config.p_train = p;
    }
    if let Some(p_eval) = &args.p_eval {
        config.p_eval = p_eval.clone();
    }
    if let Some(m_grid) = &args.m_grid {
        config.m_grid = m_grid.clone();
    }
    if let Some(t) = args.target_mcc {
        config.classifier.target_mcc = t;
    }
    if args.separation.is_some() {
        config.classifier.separation = args.separation;
    }
    if let Some(n) = args.n_train {
        config.classifier.n_train = n;
    }
    if let Some(n) = args.n_val {
        config.classifier.n_val = n;
    }
    config.validate()?;
    Ok(config)
}

fn aggregate_csv(run: &SimRun) -> String {
    let mut out = String::from("scenario,m,noise,p_train,p_eval,n,trials,stat_name,value\n");
    for row in &run.cells {
        for (stat, value) in &row.stats {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                row.scenario,
                fmt_opt_f64(row.m),
                fmt_opt_f64(row.m.map(|m| 1.0 - m)),
                fmt_f64(row.p_train),
                fmt_f64(row.p_eval),
                row.n,
                row.trials,
                stat,
                fmt_f64(*value),
            ));
        }
    }
    out
}

fn raw_csv(run: &SimRun) -> String {
    let mut out = String::from("scenario,m,noise,p_train,p_eval,n,trial,stat_name,value\n");
    for row in &run.trials {
        for (stat, value) in &row.stats {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                row.scenario,
                fmt_opt_f64(row.m),
                fmt_opt_f64(row.m.map(|m| 1.0 - m)),
                fmt_f64(row.p_train),
                fmt_f64(row.p_eval),
                row.n,
                row.trial,
                stat,
                fmt_f64(*value),
            ));
        }
    }
    out
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let config = build_config(args)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let sim = pool.install(|| run_scenario(&config))?;

    let aggregate = aggregate_csv(&sim);
    let raw = args.raw.then(|| raw_csv(&sim));
    let manifest = RunManifest::new("simulate", Some(config.seed));

    let out_dir = resolve_out_dir(&args.out_dir);
    std::fs::create_dir_all(&out_dir)?;
    let base = format!("simulate_{}", config.scenario);

    let agg_path = out_dir.join(format!("{base}.csv"));
    std::fs::write(&agg_path, aggregate)?;
    eprintln!("wrote {}", agg_path.display());

    if let Some(raw) = raw {
        let raw_path = out_dir.join(format!("{base}_raw.csv"));
        std::fs::write(&raw_path, raw)?;
        eprintln!("wrote {}", raw_path.display());
    }

    let manifest_path = out_dir.join(format!("{base}.manifest.json"));
    std::fs::write(&manifest_path, manifest.to_sidecar_string()?)?;
    eprintln!("wrote {}", manifest_path.display());
    Ok(())
}
