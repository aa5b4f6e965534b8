//! Report assembly and emission. The main report carries no wall-clock
//! data, so a fixed config and seed reproduce it byte for byte; runtimes go
//! to a separate sidecar file.

use anyhow::Context;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use crate::config::ExperimentConfig;

pub const SCHEMA: &str = "apsum.report.v1";

/// One grid cell's outcome. The verified flag comes from oracle re-checks
/// only, never from a driver's own claim; rows whose run errored carry the
/// message in `detail` and stay unverified.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub mode: String,
    /// Group order, or space size 2^dim for model rows.
    pub n: u64,
    pub m: usize,
    pub density: f64,
    /// The sigma actually used, "0" where the mode has none.
    pub sigma: String,
    pub seed: u64,
    pub witness_kind: String,
    pub witness_length: u64,
    /// Frequency count of the final Bohr system, or subspace dimension.
    pub witness_dim: u64,
    /// Reference growth formula evaluated at this cell, for side-by-side
    /// comparison. Never asserted.
    pub reference_bound: f64,
    pub verified: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    pub fn new(config: ExperimentConfig, rows: Vec<ReportRow>) -> Self {
        ExperimentReport { schema: SCHEMA.to_string(), config, rows }
    }

    pub fn all_verified(&self) -> bool {
        self.rows.iter().all(|r| r.verified)
    }

    pub fn to_csv_string(&self) -> anyhow::Result<String> {
        let mut buf = Vec::new();
        writeln!(buf, "# schema {SCHEMA}")?;
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record([
                "mode",
                "n",
                "m",
                "density",
                "sigma",
                "seed",
                "witness_kind",
                "witness_length",
                "witness_dim",
                "reference_bound",
                "verified",
                "detail",
            ])?;
            for r in &self.rows {
                w.write_record([
                    r.mode.as_str(),
                    &r.n.to_string(),
                    &r.m.to_string(),
                    &format!("{:.6}", r.density),
                    r.sigma.as_str(),
                    &r.seed.to_string(),
                    r.witness_kind.as_str(),
                    &r.witness_length.to_string(),
                    &r.witness_dim.to_string(),
                    &format!("{:.9e}", r.reference_bound),
                    &r.verified.to_string(),
                    r.detail.as_str(),
                ])?;
            }
            w.flush()?;
        }
        Ok(String::from_utf8(buf)?)
    }

    pub fn to_json_string(&self) -> anyhow::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading report {}", path.display()))?;
        let report: ExperimentReport = serde_json::from_str(&text)
            .with_context(|| format!("parsing report {}", path.display()))?;
        if report.schema != SCHEMA {
            anyhow::bail!("unsupported report schema {:?}, expected {SCHEMA}", report.schema);
        }
        Ok(report)
    }
}

/// Write the report to the paths named in its config, or CSV to stdout when
/// no CSV path is configured. Returns the CSV text for callers that want it.
pub fn emit_report(report: &ExperimentReport) -> anyhow::Result<String> {
    let csv_text = report.to_csv_string()?;
    match &report.config.output {
        Some(path) => {
            std::fs::write(path, &csv_text).with_context(|| format!("writing {path}"))?;
        }
        None => {
            print!("{csv_text}");
        }
    }
    if let Some(path) = &report.config.json_output {
        std::fs::write(path, report.to_json_string()?)
            .with_context(|| format!("writing {path}"))?;
    }
    Ok(csv_text)
}

/// The runtime sidecar: row index and milliseconds, outside the determinism
/// guarantee of the main report.
pub fn emit_timings(path: &str, timings_ms: &[f64]) -> anyhow::Result<()> {
    let mut buf = Vec::new();
    writeln!(buf, "# schema apsum.timings.v1")?;
    let mut w = csv::Writer::from_writer(&mut buf);
    w.write_record(["row", "runtime_ms"])?;
    for (i, t) in timings_ms.iter().enumerate() {
        w.write_record([&i.to_string(), &format!("{t:.3}")])?;
    }
    w.flush()?;
    drop(w);
    std::fs::write(path, buf).with_context(|| format!("writing {path}"))?;
    Ok(())
}
