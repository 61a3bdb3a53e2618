//! `debias estimate`: the full pipeline over three scored CSV splits.

use std::path::PathBuf;

use clap::Args;
use debias_core::{
    estimate_pipeline, BetaPrior, PipelineOptions, ScoredDataset, Split, DEFAULT_GRID_POINTS,
};

use crate::errors::CliResult;
use crate::input::{read_scored_csv, require_both_classes};
use crate::manifest::RunManifest;
use crate::output::render_report;

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Training split CSV with columns `score,label`
    #[arg(long)]
    pub train: PathBuf,

    /// Validation split CSV with columns `score,label`
    #[arg(long)]
    pub val: PathBuf,

    /// Evaluation split CSV with a `score` column (a `label` column, if
    /// present, is ignored for inference and only reported back)
    #[arg(long)]
    pub eval: PathBuf,

    /// Beta prior alpha
    #[arg(long, default_value_t = 1.0)]
    pub prior_alpha: f64,

    /// Beta prior beta
    #[arg(long, default_value_t = 1.0)]
    pub prior_beta: f64,

    /// Credible-interval mass (0.99 matches the dissertation-style reporting)
    #[arg(long, default_value_t = 0.95)]
    pub mass: f64,

    /// Posterior grid points
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    pub grid: usize,

    /// Also write the JSON report to this file
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &EstimateArgs) -> CliResult<()> {
    let train = read_scored_csv(&args.train, true)?;
    let val = read_scored_csv(&args.val, true)?;
    let eval = read_scored_csv(&args.eval, false)?;
    require_both_classes(&val, &args.val)?;

    let train_ds = ScoredDataset::new(Split::Train, train)?;
    let val_ds = ScoredDataset::new(Split::Validation, val)?;
    let eval_ds = ScoredDataset::new(Split::Evaluation, eval)?;

    let options = PipelineOptions {
        prior: BetaPrior::new(args.prior_alpha, args.prior_beta)?,
        mass: args.mass,
        grid_points: args.grid,
    };
    let report = estimate_pipeline(&train_ds, &val_ds, &eval_ds, &options)?;

    let mut manifest = RunManifest::new("estimate", None);
    manifest.record_input(&args.train)?;
    manifest.record_input(&args.val)?;
    manifest.record_input(&args.eval)?;

    let doc = render_report(serde_json::to_value(&report)?, &manifest)?;
    print!("{doc}");
    if let Some(out) = &args.out {
        std::fs::write(out, &doc)?;
    }
    Ok(())
}
