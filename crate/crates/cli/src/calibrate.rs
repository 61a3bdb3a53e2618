//! `debias calibrate`: reliability diagnostics and optional Platt scaling
//! over a scored, labeled CSV.

use std::path::PathBuf;

use clap::Args;
use debias_core::{calibration, platt_apply, platt_fit, reliability};
use serde_json::json;

use crate::errors::CliResult;
use crate::input::{read_scored_csv, require_both_classes};
use crate::manifest::RunManifest;
use crate::output::{fmt_f64, render_report, sidecar_path};

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// CSV with columns `score,label`
    #[arg(long)]
    pub scores: PathBuf,

    /// Number of equal-width reliability bins
    #[arg(long, default_value_t = 15)]
    pub bins: usize,

    /// Fit Platt scaling and report the recalibrated ECE
    #[arg(long)]
    pub platt: bool,

    /// Treat the score column as logits instead of probabilities
    #[arg(long)]
    pub logits: bool,

    /// Write the per-bin reliability table as CSV
    #[arg(long)]
    pub bins_out: Option<PathBuf>,
}

const LOGIT_CLAMP: f64 = 1e-12;

pub fn run(args: &CalibrateArgs) -> CliResult<()> {
    let records = read_scored_csv(&args.scores, true)?;
    let raw: Vec<f64> = records.iter().map(|r| r.score).collect();
    let labels: Vec<bool> = records
        .iter()
        .map(|r| r.label.expect("labels required by reader"))
        .collect();

    let probs_before: Vec<f64> = if args.logits {
        raw.iter().map(|&x| calibration::sigmoid(x)).collect()
    } else {
        raw.clone()
    };

    let bins_before = reliability(&probs_before, &labels, args.bins)?;
    let ece_before = bins_before.ece();

    let mut platt_fields = serde_json::Map::new();
    if args.platt {
        require_both_classes(&records, &args.scores)?;
        let logit_inputs: Vec<f64> = if args.logits {
            raw.clone()
        } else {
            raw.iter()
                .map(|&p| {
                    let p = p.clamp(LOGIT_CLAMP, 1.0 - LOGIT_CLAMP);
                    (p / (1.0 - p)).ln()
                })
                .collect()
        };
        let fit = platt_fit(&logit_inputs, &labels)?;
        let probs_after: Vec<f64> =
            logit_inputs.iter().map(|&x| platt_apply(&fit.params, x)).collect();
        let ece_after = reliability(&probs_after, &labels, args.bins)?.ece();

        platt_fields.insert("ece_after".into(), json!(ece_after));
        platt_fields.insert("platt_slope".into(), json!(fit.params.slope));
        platt_fields.insert("platt_intercept".into(), json!(fit.params.intercept));
        platt_fields.insert("platt_converged".into(), json!(fit.converged));
        platt_fields.insert("platt_iterations".into(), json!(fit.iterations));
    }

    let mut manifest = RunManifest::new("calibrate", None);
    manifest.record_input(&args.scores)?;

    let mut report = json!({
        "n": labels.len(),
        "bins": args.bins,
        "ece_before": ece_before,
    });
    report
        .as_object_mut()
        .expect("object literal")
        .extend(platt_fields);
    let doc = render_report(report, &manifest)?;
    print!("{doc}");

    if let Some(path) = &args.bins_out {
        let width = 1.0 / args.bins as f64;
        let mut csv = String::from("bin,lo,hi,count,mean_confidence,accuracy\n");
        for (i, bin) in bins_before.bins().iter().enumerate() {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                i,
                fmt_f64(i as f64 * width),
                fmt_f64(if i + 1 == args.bins { 1.0 } else { (i + 1) as f64 * width }),
                bin.count,
                fmt_f64(bin.mean_confidence),
                fmt_f64(bin.accuracy),
            ));
        }
        std::fs::write(path, csv)?;
        std::fs::write(sidecar_path(path), manifest.to_sidecar_string()?)?;
    }
    Ok(())
}
