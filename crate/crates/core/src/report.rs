//! Structured check results for reports and golden files.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A single numeric result with its uncertainty and tolerance bookkeeping.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NumericResult {
    /// The computed value.
    pub value: f64,
    /// Standard error for Monte-Carlo values.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    /// Tolerance the value was held to, when a pass/fail decision used one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// How the value was obtained: `analytic`, `deterministic-quadrature`,
    /// `monte-carlo`, `ode`, or `empirical`.
    pub provenance: String,
}

impl NumericResult {
    /// Exact/closed-form value.
    pub fn analytic(value: f64) -> Self {
        Self { value, stderr: None, tolerance: None, provenance: "analytic".into() }
    }

    /// Deterministic quadrature value.
    pub fn quadrature(value: f64) -> Self {
        Self { value, stderr: None, tolerance: None, provenance: "deterministic-quadrature".into() }
    }

    /// Monte-Carlo value with standard error.
    pub fn monte_carlo(value: f64, stderr: f64) -> Self {
        Self { value, stderr: Some(stderr), tolerance: None, provenance: "monte-carlo".into() }
    }

    /// Value produced by numerical integration of the flow.
    pub fn ode(value: f64) -> Self {
        Self { value, stderr: None, tolerance: None, provenance: "ode".into() }
    }

    /// Empirically searched value (e.g. a supremum over samples).
    pub fn empirical(value: f64) -> Self {
        Self { value, stderr: None, tolerance: None, provenance: "empirical".into() }
    }

    /// Attach a tolerance.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = Some(tol);
        self
    }
}

/// Outcome of one named check inside a scenario run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    /// Check name (snake_case).
    pub name: String,
    /// Whether every asserted quantity met its tolerance.
    pub pass: bool,
    /// Named numeric details, ordered for stable serialization.
    pub details: BTreeMap<String, NumericResult>,
    /// Free-form notes (caveats, conventions, skipped fractions).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Base seed used for any stochastic part.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Sample count for any stochastic part.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

impl CheckReport {
    /// New passing report with no details yet.
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), pass: true, details: BTreeMap::new(), notes: Vec::new(), seed: None, n: None }
    }

    /// Insert a detail.
    pub fn detail(&mut self, key: impl Into<String>, value: NumericResult) -> &mut Self {
        self.details.insert(key.into(), value);
        self
    }

    /// Record an assertion outcome (pass stays false once any check fails).
    pub fn assert_that(&mut self, ok: bool) -> &mut Self {
        self.pass &= ok;
        self
    }

    /// Append a note.
    pub fn note(&mut self, msg: impl Into<String>) -> &mut Self {
        self.notes.push(msg.into());
        self
    }
}
