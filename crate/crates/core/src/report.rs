use crate::laplace::PoleRecord;
use crate::medium::FrequencyGrid;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckSample {
    pub t: f64,
    pub value: f64,
    pub target: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSummary {
    pub n: usize,
    pub omega_max: f64,
}

impl From<&FrequencyGrid> for GridSummary {
    fn from(g: &FrequencyGrid) -> Self {
        GridSummary { n: g.len(), omega_max: g.omega_max() }
    }
}

/// Outcome of one consistency check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub medium: String,
    pub params: BTreeMap<String, f64>,
    pub grid: Option<GridSummary>,
    pub samples: Vec<CheckSample>,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub skipped: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub poles: Vec<PoleRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn new(check: impl Into<String>, medium: impl Into<String>) -> Self {
        CheckReport {
            check: check.into(),
            medium: medium.into(),
            params: BTreeMap::new(),
            grid: None,
            samples: Vec::new(),
            max_residual: 0.0,
            tolerance: 0.0,
            pass: false,
            skipped: false,
            poles: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn grid(mut self, grid: &FrequencyGrid) -> Self {
        self.grid = Some(grid.into());
        self
    }

    pub fn poles(mut self, poles: Vec<PoleRecord>) -> Self {
        self.poles = poles;
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn push(&mut self, t: f64, value: f64, target: f64, residual: f64) {
        self.samples.push(CheckSample { t, value, target, residual });
    }

    /// Sets the tolerance and derives `max_residual` and `pass` from the samples.
    pub fn finish(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.max_residual = self.samples.iter().map(|s| s.residual).fold(0.0, |m, r| if r.is_nan() || m.is_nan() { f64::NAN } else { m.max(r) });
        self.pass = !self.samples.is_empty() && self.max_residual <= tolerance;
        self
    }

    /// A check that does not apply to the given input.
    pub fn skip(mut self, reason: impl Into<String>) -> Self {
        self.skipped = true;
        self.pass = true;
        self.notes.push(reason.into());
        self
    }
}
