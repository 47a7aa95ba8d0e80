//! Named residual checks with tolerances and timings.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Measured residual, absent for purely structural checks.
    pub residual: Option<f64>,
    pub tolerance: Option<f64>,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Check {
    /// Passes when `residual < tolerance` (a NaN residual fails).
    pub fn below(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            residual: Some(residual),
            tolerance: Some(tolerance),
            passed: residual < tolerance,
            detail: String::new(),
            seconds: 0.0,
        }
    }

    /// Passes when `residual >= tolerance`, for checks that a defect is visible.
    pub fn above(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self { passed: residual >= tolerance, ..Self::below(name, residual, tolerance) }
    }

    pub fn holds(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), residual: None, tolerance: None, passed, detail: detail.into(), seconds: 0.0 }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn with_seconds(mut self, seconds: f64) -> Self {
        self.seconds = seconds;
        self
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", if self.passed { "PASS" } else { "FAIL" }, self.name)?;
        if let (Some(r), Some(t)) = (self.residual, self.tolerance) {
            write!(f, "  residual={r:.3e} tol={t:.1e}")?;
        }
        if !self.detail.is_empty() {
            write!(f, "  [{}]", self.detail)?;
        }
        if self.seconds > 0.0 {
            write!(f, "  ({:.2}s)", self.seconds)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub title: String,
    /// Tolerance defaults and run parameters, printed before the checks.
    pub header: Vec<(String, String)>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(title: impl Into<String>) -> Self {
        Self { title: title.into(), ..Default::default() }
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl ToString) {
        self.header.push((key.into(), value.to_string()));
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    /// Runs `f`, stamping the produced check with its wall time.
    pub fn timed(&mut self, f: impl FnOnce() -> Check) {
        let start = Instant::now();
        let check = f();
        let seconds = start.elapsed().as_secs_f64();
        self.checks.push(check.with_seconds(seconds));
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "== {} ==", self.title)?;
        for (k, v) in &self.header {
            writeln!(f, "  {k}: {v}")?;
        }
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let passed = self.checks.iter().filter(|c| c.passed).count();
        write!(f, "{passed}/{} checks passed", self.checks.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_residual_fails() {
        assert!(!Check::below("x", f64::NAN, 1.0).passed);
        assert!(Check::below("x", 0.5, 1.0).passed);
        assert!(Check::above("x", 2.0, 1.0).passed);
    }

    #[test]
    fn report_summary() {
        let mut r = Report::new("demo");
        r.push(Check::below("a", 1e-12, 1e-10));
        r.push(Check::holds("b", false, "missing"));
        assert!(!r.all_passed());
        assert_eq!(r.failures().count(), 1);
        assert!(r.to_string().ends_with("1/2 checks passed"));
    }
}
