//! Check items, tables and the run summary.

use std::collections::BTreeMap;

use serde::Serialize;

/// Pass condition of a check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// `value < limit`.
    Below(f64),
    /// `value > limit`.
    Above(f64),
    /// Exact identity; `value` counts violations.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub value: f64,
    pub bound: Bound,
    pub passed: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl CheckItem {
    /// `value < tolerance · scale`.
    pub fn below(name: impl Into<String>, value: f64, tolerance: f64, scale: f64) -> Self {
        let limit = tolerance * scale;
        Self {
            name: name.into(),
            value,
            bound: Bound::Below(limit),
            passed: value < limit,
            detail: String::new(),
        }
    }

    /// `value > threshold / scale`.
    pub fn above(name: impl Into<String>, value: f64, threshold: f64, scale: f64) -> Self {
        let limit = threshold / scale;
        Self {
            name: name.into(),
            value,
            bound: Bound::Above(limit),
            passed: value > limit,
            detail: String::new(),
        }
    }

    pub fn exact(name: impl Into<String>, violations: usize, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value: violations as f64,
            bound: Bound::Exact,
            passed: violations == 0,
            detail: detail.into(),
        }
    }

    pub fn holds(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        Self::exact(name, usize::from(!ok), detail)
    }

    /// A step that could not complete; always a failure.
    pub fn failed(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value: f64::NAN,
            bound: Bound::Exact,
            passed: false,
            detail: detail.into(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let bound = match self.bound {
            Bound::Below(l) => format!("{} < {}", fmt_f64(self.value), fmt_f64(l)),
            Bound::Above(l) => format!("{} > {}", fmt_f64(self.value), fmt_f64(l)),
            Bound::Exact => "exact".to_string(),
        };
        if self.detail.is_empty() {
            format!("{verdict} {} ({bound})", self.name)
        } else {
            format!("{verdict} {} ({bound}; {})", self.name, self.detail)
        }
    }
}

/// Shortest round-trip text of a float, scientific outside `[1e-4, 1e6)`.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 || (1e-4..1e6).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, headers: &[&str]) -> Self {
        Self {
            name: name.into(),
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn push_f64(&mut self, row: &[f64]) {
        self.push(row.iter().map(|v| fmt_f64(*v)).collect());
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, csv::Error> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        w.write_record(&self.headers)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| csv::Error::from(e.into_error()))
    }
}

/// Everything one analysis produced.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Outcome {
    pub checks: Vec<CheckItem>,
    pub metrics: BTreeMap<String, f64>,
    pub tables: Vec<Table>,
    #[serde(skip)]
    pub plots: Vec<(String, String)>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisRecord {
    pub kind: String,
    pub index: usize,
    pub passed: bool,
    #[serde(flatten)]
    pub outcome: Outcome,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub version: String,
    pub seed: u64,
    pub tolerance_scale: f64,
    pub passed: bool,
    pub analyses: Vec<AnalysisRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub tolerance_scale: f64,
    pub passed: bool,
    pub items: Vec<CheckItem>,
}

impl SuiteReport {
    pub fn new(suite: &str, tolerance_scale: f64, items: Vec<CheckItem>) -> Self {
        Self {
            suite: suite.to_string(),
            tolerance_scale,
            passed: !items.is_empty() && items.iter().all(|i| i.passed),
            items,
        }
    }
}
