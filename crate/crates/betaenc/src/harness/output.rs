//! CSV rows and the JSON sidecar that pins a run's provenance.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::ResultRow;
use crate::Result;

/// Column order for sweep output. Floats print as full-precision
/// scientific notation so re-runs can be compared byte for byte; the
/// optional beta columns are empty on exact-beta rows.
pub const CSV_HEADER: &str =
    "flavor,beta,L,nu_star,epsilon,p_L,samples,seed,use_estimated_beta,s,mse_x,se_x,mse_beta,se_beta,violations,failures";

fn push_row(out: &mut Vec<u8>, row: &ResultRow) {
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.16e}"));
    let _ = writeln!(
        out,
        "{},{:.16e},{},{:.16e},{:.16e},{},{},{},{},{:.16e},{:.16e},{:.16e},{},{},{},{}",
        row.flavor,
        row.beta,
        row.l,
        row.nu_star,
        row.epsilon,
        row.p_l,
        row.samples,
        row.seed,
        row.use_estimated_beta,
        row.s,
        row.mse_x,
        row.se_x,
        opt(row.mse_beta),
        opt(row.se_beta),
        row.violations,
        row.failures,
    );
}

/// Renders rows as a CSV document, header included.
pub fn csv_bytes(rows: &[ResultRow]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(rows.len() * 192 + CSV_HEADER.len() + 1);
    let _ = writeln!(&mut out, "{CSV_HEADER}");
    for row in rows {
        push_row(&mut out, row);
    }
    Ok(out)
}

/// Writes rows as CSV to `path`.
pub fn write_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    Ok(std::fs::write(path, csv_bytes(rows)?)?)
}

/// Everything a reader needs to rerun or audit a sweep, written next to
/// the CSV as `<name>.meta.json`.
#[derive(Clone, Debug, Serialize)]
pub struct RunMetadata {
    pub seed: u64,
    /// Stream cipher behind every draw, currently always "chacha8".
    pub rng: &'static str,
    /// How out-of-band flaky thresholds are handled.
    pub clip_policy: &'static str,
    pub version: &'static str,
    /// Reproduction recipe name, absent for ad hoc sweeps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recipe: Option<String>,
    /// Law of the encoder inputs x.
    pub u_distribution: &'static str,
    /// Whether x and 1 - x see the same threshold sequence.
    pub paired_thresholds: &'static str,
    /// The MSE column a recipe's figure plots.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub focus: Option<&'static str>,
}

impl RunMetadata {
    pub fn new(seed: u64) -> Self {
        RunMetadata {
            seed,
            rng: "chacha8",
            clip_policy: "clamp-to-band",
            version: env!("CARGO_PKG_VERSION"),
            recipe: None,
            u_distribution: "uniform",
            paired_thresholds: "shared",
            focus: None,
        }
    }
}

/// Writes the metadata sidecar for the CSV at `csv_path`.
pub fn write_sidecar(csv_path: &Path, meta: &RunMetadata) -> Result<()> {
    let path = csv_path.with_extension("meta.json");
    let body = serde_json::to_string_pretty(meta).expect("static shape");
    Ok(std::fs::write(path, body)?)
}
