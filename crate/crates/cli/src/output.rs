//! Shared output rendering. All numeric CSV/JSON fields use the shortest
//! exact decimal representation, so repeated runs are byte-identical and
//! values survive re-parsing without precision loss.

use std::path::{Path, PathBuf};

use crate::errors::{CliError, CliResult};
use crate::manifest::RunManifest;

/// Attach the manifest to a flat report object and render it.
pub fn render_report(report: serde_json::Value, manifest: &RunManifest) -> CliResult<String> {
    let mut obj = match report {
        serde_json::Value::Object(obj) => obj,
        _ => return Err(CliError::Internal("report is not a JSON object".into())),
    };
    obj.insert("manifest".into(), manifest.to_json()?);
    let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(obj))?;
    s.push('\n');
    Ok(s)
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// The output directory comes from the flag; a `DEBIAS_OUT_DIR` environment
/// override applies only when the flag is left at its default.
pub fn resolve_out_dir(flag: &Path) -> PathBuf {
    if flag == Path::new(".") {
        if let Some(dir) = std::env::var_os("DEBIAS_OUT_DIR") {
            return PathBuf::from(dir);
        }
    }
    flag.to_path_buf()
}

/// Sidecar manifest path for a CSV artifact: `<artifact>.manifest.json`.
pub fn sidecar_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    artifact.with_file_name(name)
}
