//! Cartesian parameter sweeps over a configuration template.

use std::path::PathBuf;

use timechange_core::mc::Executor;
use timechange_core::sampler::derive_seed;

use crate::config::{set_path, ExperimentConfig};
use crate::error::CliError;
use crate::experiments::run_experiment;
use crate::output::{fmt_f64, table_csv, write_bytes, write_outcome};
use crate::report::ValidationReport;

/// Keys a sweep may not assign: they are derived per cell.
const RESERVED: [&str; 3] = ["seed", "out", "sweep"];

/// One point of the sweep.
#[derive(Debug, Clone)]
pub struct Cell {
    pub index: usize,
    pub assignments: Vec<(String, toml::Value)>,
    pub config: ExperimentConfig,
}

/// Sub-seed of cell `index`, kept below `2^63` so it fits a TOML integer.
pub fn cell_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, index as u64) >> 1
}

/// Expands a template into its cells, last key varying fastest. Keys are
/// taken in sorted order. Every cell is validated before anything runs.
pub fn expand(template: &toml::Value) -> Result<(ExperimentConfig, Vec<Cell>), CliError> {
    let base = ExperimentConfig::from_value(template.clone())?;
    if base.sweep.is_empty() {
        return Err(CliError::field("sweep", "no parameters to sweep"));
    }
    for (key, values) in &base.sweep {
        if RESERVED.contains(&key.split('.').next().unwrap_or_default()) {
            return Err(CliError::field(&format!("sweep.{key}"), "this field is derived for each cell"));
        }
        if values.is_empty() {
            return Err(CliError::field(&format!("sweep.{key}"), "empty range"));
        }
    }
    let keys: Vec<(&String, &Vec<toml::Value>)> = base.sweep.iter().collect();
    let total: usize = keys.iter().map(|(_, v)| v.len()).product();
    let mut cells = Vec::with_capacity(total);
    for index in 0..total {
        let mut value = template.clone();
        if let Some(table) = value.as_table_mut() {
            table.remove("sweep");
        }
        let mut rest = index;
        let mut assignments = vec![(String::new(), toml::Value::Boolean(false)); keys.len()];
        for (slot, (key, values)) in keys.iter().enumerate().rev() {
            let v = values[rest % values.len()].clone();
            rest /= values.len();
            set_path(&mut value, key, v.clone())?;
            assignments[slot] = ((*key).clone(), v);
        }
        let seed = cell_seed(base.seed, index);
        set_path(&mut value, "seed", toml::Value::Integer(seed as i64))?;
        let out = base.out.join(format!("cell-{index:03}"));
        set_path(&mut value, "out", toml::Value::String(out.to_string_lossy().into_owned()))?;
        let config = ExperimentConfig::from_value(value).map_err(|e| match e {
            CliError::Usage(msg) => CliError::usage(format!("sweep cell {index}: {msg}")),
            other => other,
        })?;
        cells.push(Cell { index, assignments, config });
    }
    Ok((base, cells))
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub reports: Vec<(Cell, ValidationReport)>,
    pub summary: PathBuf,
    pub passed: bool,
}

pub const SUMMARY_FIXED_COLUMNS: [&str; 2] = ["cell", "seed"];
pub const SUMMARY_TRAILING_COLUMNS: [&str; 4] = ["kind", "passed", "records", "failed"];

fn display(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Float(f) => fmt_f64(*f),
        other => other.to_string(),
    }
}

/// `sweep_summary.csv`: one row per cell, free of timings so that
/// repeated sweeps produce identical files.
pub fn summary_csv(base: &ExperimentConfig, reports: &[(Cell, ValidationReport)]) -> Result<Vec<u8>, CliError> {
    let mut header: Vec<&str> = SUMMARY_FIXED_COLUMNS.to_vec();
    header.extend(base.sweep.keys().map(String::as_str));
    header.extend(SUMMARY_TRAILING_COLUMNS);
    table_csv(
        &header,
        reports.iter().map(|(cell, report)| {
            let mut row = vec![cell.index.to_string(), cell.config.seed.to_string()];
            row.extend(cell.assignments.iter().map(|(_, v)| display(v)));
            row.push(cell.config.kind.name().to_string());
            row.push(report.passed.to_string());
            row.push(report.records.len().to_string());
            row.push(report.failures().count().to_string());
            row
        }),
    )
}

/// Runs every cell concurrently, then writes the reports one at a time in
/// cell order.
pub fn run_sweep<E: Executor + Sync>(template: &toml::Value, exec: &E) -> Result<SweepOutcome, CliError> {
    let (base, cells) = expand(template)?;
    let results = exec.map(cells.len(), |i| run_experiment(&cells[i].config, exec));
    let mut reports = Vec::with_capacity(cells.len());
    for (cell, result) in cells.into_iter().zip(results) {
        let outcome = result.map_err(|e| match e {
            CliError::Usage(msg) => CliError::usage(format!("sweep cell {}: {msg}", cell.index)),
            other => other,
        })?;
        write_outcome(&cell.config.out, &cell.config, &outcome)?;
        reports.push((cell, outcome.report));
    }
    let summary = base.out.join("sweep_summary.csv");
    write_bytes(&summary, &summary_csv(&base, &reports)?)?;
    let passed = reports.iter().all(|(_, r)| r.passed);
    Ok(SweepOutcome { reports, summary, passed })
}
