//! File formats. Column sets are versioned by [`SCHEMA_VERSION`].

use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use timechange_core::mc::McEstimate;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::report::ValidationReport;

pub const SCHEMA_VERSION: u32 = 1;

pub const ESTIMATE_COLUMNS: [&str; 8] = ["t", "x", "mean", "stderr", "N", "seed", "mode", "bias_bound"];
pub const REPORT_COLUMNS: [&str; 6] = ["name", "computed", "oracle", "tolerance", "passed", "runtime"];

/// A file produced by an experiment, held in memory until written.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(name: impl Into<String>, bytes: Vec<u8>) -> Self {
        Self { name: name.into(), bytes }
    }
}

/// Everything one run produces.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: ValidationReport,
    pub artifacts: Vec<Artifact>,
    pub metadata: Map<String, Value>,
}

impl Outcome {
    pub fn artifact(&self, name: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.name == name)
    }
}

/// Shortest round-trip decimal, in exponent form outside `[1e-5, 1e16)`.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// CSV with a header row.
pub fn table_csv<I>(header: &[&str], rows: I) -> Result<Vec<u8>, CliError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let fail = |e: csv::Error| CliError::Serialize { what: "csv", message: e.to_string() };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(&row).map_err(fail)?;
    }
    w.into_inner().map_err(|e| CliError::Serialize { what: "csv", message: e.to_string() })
}

pub fn estimates_csv(est: &[McEstimate]) -> Result<Vec<u8>, CliError> {
    table_csv(
        &ESTIMATE_COLUMNS,
        est.iter().map(|e| {
            vec![
                fmt_f64(e.t),
                fmt_f64(e.x),
                fmt_f64(e.mean),
                fmt_f64(e.stderr),
                e.n.to_string(),
                e.seed.to_string(),
                e.mode.name().to_string(),
                fmt_f64(e.bias_bound),
            ]
        }),
    )
}

pub fn report_csv(report: &ValidationReport) -> Result<Vec<u8>, CliError> {
    table_csv(
        &REPORT_COLUMNS,
        report.records.iter().map(|r| {
            vec![
                r.name.clone(),
                fmt_f64(r.computed),
                fmt_f64(r.oracle),
                fmt_f64(r.tolerance),
                r.passed.to_string(),
                fmt_f64(r.runtime),
            ]
        }),
    )
}

/// `summary.json`: schema version, resolved config, report and metadata.
pub fn summary_json(cfg: &ExperimentConfig, outcome: &Outcome) -> Result<Vec<u8>, CliError> {
    let fail = |e: serde_json::Error| CliError::Serialize { what: "summary", message: e.to_string() };
    let files: Vec<&str> = outcome.artifacts.iter().map(|a| a.name.as_str()).collect();
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "kind": cfg.kind.name(),
        "passed": outcome.report.passed,
        "config": serde_json::to_value(cfg).map_err(fail)?,
        "report": serde_json::to_value(&outcome.report).map_err(fail)?,
        "metadata": outcome.metadata,
        "files": files,
    });
    let mut bytes = serde_json::to_vec_pretty(&doc).map_err(fail)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn write_file(path: PathBuf, bytes: &[u8]) -> Result<PathBuf, CliError> {
    std::fs::write(&path, bytes).map_err(|source| CliError::Io { path: path.clone(), source })?;
    Ok(path)
}

/// Writes the artifacts plus `report.csv`, `config.toml` and `summary.json`
/// into `dir`, returning the paths written.
pub fn write_outcome(dir: &Path, cfg: &ExperimentConfig, outcome: &Outcome) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    let mut written = Vec::new();
    for a in &outcome.artifacts {
        written.push(write_file(dir.join(&a.name), &a.bytes)?);
    }
    written.push(write_file(dir.join("report.csv"), &report_csv(&outcome.report)?)?);
    written.push(write_file(dir.join("config.toml"), cfg.to_toml()?.as_bytes())?);
    written.push(write_file(dir.join("summary.json"), &summary_json(cfg, outcome)?)?);
    Ok(written)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    write_file(path.to_path_buf(), bytes).map(|_| ())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.0, 0.1, 1.0 / 3.0, 1e-9, 2.5e20, -7.25, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(fmt_f64(0.25), "0.25");
    }

    #[test]
    fn csv_quotes_fields_with_commas() {
        let bytes = table_csv(&["name", "v"], [vec!["a, b".to_string(), "1".to_string()]]).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "name,v\n\"a, b\",1\n");
    }
}
