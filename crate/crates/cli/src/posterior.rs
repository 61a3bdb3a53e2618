//! `debias posterior`: posterior over the true mean straight from counts.

use std::path::PathBuf;

use clap::Args;
use debias_core::{posterior, BetaPrior, BinaryCounts, NoiseModel, DEFAULT_GRID_POINTS};
use serde_json::json;

use crate::errors::CliResult;
use crate::manifest::RunManifest;
use crate::output::{fmt_f64, render_report, sidecar_path};

#[derive(Debug, Args)]
pub struct PosteriorArgs {
    /// Count of positive ("heads") predictions
    #[arg(long = "h")]
    pub heads: u64,

    /// Count of negative ("tails") predictions
    #[arg(long = "t")]
    pub tails: u64,

    /// Accuracy parameter in [0, 1] (e.g. the clamped validation MCC)
    #[arg(long)]
    pub m: f64,

    /// Training-set positive rate in [0, 1]
    #[arg(long)]
    pub p_train: f64,

    /// Beta prior alpha
    #[arg(long, default_value_t = 1.0)]
    pub prior_alpha: f64,

    /// Beta prior beta
    #[arg(long, default_value_t = 1.0)]
    pub prior_beta: f64,

    /// Credible-interval mass
    #[arg(long, default_value_t = 0.95)]
    pub mass: f64,

    /// Posterior grid points
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    pub grid: usize,

    /// Write the full grid as CSV (`mu,density`)
    #[arg(long)]
    pub grid_out: Option<PathBuf>,
}

pub fn run(args: &PosteriorArgs) -> CliResult<()> {
    let model = NoiseModel::new(args.m, args.p_train)?;
    let counts = BinaryCounts::new(args.heads, args.tails)?;
    let prior = BetaPrior::new(args.prior_alpha, args.prior_beta)?;

    let post = posterior(&model, counts, &prior, args.grid)?;
    let interval = post.credible_interval(args.mass)?;
    let summaries = post.summaries();

    let manifest = RunManifest::new("posterior", None);
    let doc = render_report(
        json!({
            "h": args.heads,
            "t": args.tails,
            "m": args.m,
            "p_train": args.p_train,
            "grid_points": args.grid,
            "map": summaries.map,
            "posterior_mean": summaries.mean,
            "interval_lo": interval.lo,
            "interval_hi": interval.hi,
            "mass": args.mass,
            "prior_alpha": args.prior_alpha,
            "prior_beta": args.prior_beta,
        }),
        &manifest,
    )?;
    print!("{doc}");

    if let Some(path) = &args.grid_out {
        let mut csv = String::from("mu,density\n");
        for (&mu, &d) in post.grid().iter().zip(post.density()) {
            csv.push_str(&fmt_f64(mu));
            csv.push(',');
            csv.push_str(&fmt_f64(d));
            csv.push('\n');
        }
        std::fs::write(path, csv)?;
        std::fs::write(sidecar_path(path), manifest.to_sidecar_string()?)?;
    }
    Ok(())
}
