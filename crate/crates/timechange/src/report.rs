use serde::{Deserialize, Serialize};

/// One comparison of a computed value against its oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub name: String,
    pub computed: f64,
    pub oracle: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// wall-clock seconds
    pub runtime: f64,
}

impl Record {
    /// Passes when `|computed - oracle| <= tolerance`; NaN never passes.
    pub fn compare(name: impl Into<String>, computed: f64, oracle: f64, tolerance: f64, runtime: f64) -> Self {
        let passed = (computed - oracle).abs() <= tolerance;
        Self { name: name.into(), computed, oracle, tolerance, passed, runtime }
    }

    /// Passes when `computed` lies in `[lo, hi]`, recorded as the midpoint
    /// plus or minus the half-width.
    pub fn within(name: impl Into<String>, computed: f64, lo: f64, hi: f64, runtime: f64) -> Self {
        Self::compare(name, computed, 0.5 * (lo + hi), 0.5 * (hi - lo), runtime)
    }

    /// Exact equality check: `computed` counts mismatches and must be zero.
    pub fn identical(name: impl Into<String>, mismatches: usize, runtime: f64) -> Self {
        Self::compare(name, mismatches as f64, 0.0, 0.0, runtime)
    }

    /// `|computed - oracle|`.
    pub fn deviation(&self) -> f64 {
        (self.computed - self.oracle).abs()
    }
}

/// All records of one run. Fails exactly when some record fails.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub records: Vec<Record>,
    pub passed: bool,
}

impl ValidationReport {
    pub fn new(records: Vec<Record>) -> Self {
        let passed = records.iter().all(|r| r.passed);
        Self { records, passed }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(|r| !r.passed)
    }
}
