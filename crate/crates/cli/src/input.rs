//! CSV ingestion with line-numbered diagnostics.
//!
//! Expected layout: a header row naming at least a `score` column, plus a
//! `label` column where the split requires one. Labels must be exactly `0`
//! or `1`; an empty label cell is allowed only where labels are optional.

use std::path::Path;

use debias_core::ScoredRecord;

use crate::errors::{CliError, CliResult};

pub fn read_scored_csv(path: &Path, require_label: bool) -> CliResult<Vec<ScoredRecord>> {
    let display = path.display();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Validation(format!("{display}: {e}")))?;

    let headers = reader
        .headers()
        .map_err(|e| CliError::Validation(format!("{display}: {e}")))?
        .clone();
    let score_idx = headers.iter().position(|h| h == "score").ok_or_else(|| {
        CliError::Validation(format!("{display}: missing required column `score`"))
    })?;
    let label_idx = headers.iter().position(|h| h == "label");
    if require_label && label_idx.is_none() {
        return Err(CliError::Validation(format!(
            "{display}: missing required column `label`"
        )));
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| CliError::Validation(format!("{display}: {e}")))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);

        let raw_score = row.get(score_idx).unwrap_or("");
        let score: f64 = raw_score.parse().map_err(|_| {
            CliError::Validation(format!(
                "{display}:{line}: score `{raw_score}` is not a number"
            ))
        })?;
        if !score.is_finite() {
            return Err(CliError::Validation(format!(
                "{display}:{line}: score `{raw_score}` is not finite"
            )));
        }

        let label = match label_idx {
            None => None,
            Some(i) => {
                let raw = row.get(i).unwrap_or("");
                match raw {
                    "" if !require_label => None,
                    "" => {
                        return Err(CliError::Validation(format!(
                            "{display}:{line}: column `label` is empty"
                        )))
                    }
                    "0" => Some(false),
                    "1" => Some(true),
                    other => {
                        return Err(CliError::Validation(format!(
                            "{display}:{line}: label `{other}` must be 0 or 1"
                        )))
                    }
                }
            }
        };
        records.push(ScoredRecord { score, label });
    }

    if records.is_empty() {
        return Err(CliError::Validation(format!("{display}: no data rows")));
    }
    Ok(records)
}

/// Both label classes must be present (e.g. for MCC estimation or Platt
/// fitting, where a single class makes the problem unbounded).
pub fn require_both_classes(records: &[ScoredRecord], path: &Path) -> CliResult<()> {
    let mut saw_pos = false;
    let mut saw_neg = false;
    for r in records {
        match r.label {
            Some(true) => saw_pos = true,
            Some(false) => saw_neg = true,
            None => {}
        }
    }
    if saw_pos && saw_neg {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "{}: column `label` contains a single class; both 0 and 1 are required",
            path.display()
        )))
    }
}
