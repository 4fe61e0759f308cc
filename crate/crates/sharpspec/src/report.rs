//! Pass/fail reporting with stable check identifiers.
//!
//! Every verification routine emits rows keyed by short stable ids (for
//! example `P2.2` or `T5.5-sym`) so runs can be diffed and scripted against.
//! Reports serialise to CSV deterministically: fixed column order, fixed
//! float formatting, no timestamps or host data.

use std::fmt::Write as _;

/// One verified statement: measured residual against its tolerance.
#[derive(Debug, Clone)]
pub struct CheckRow {
    pub id: String,
    pub description: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRow {
    /// Row that passes iff `residual <= tolerance`.
    pub fn measured(id: &str, description: &str, residual: f64, tolerance: f64) -> Self {
        Self {
            id: id.to_string(),
            description: description.to_string(),
            residual,
            tolerance,
            pass: residual <= tolerance,
        }
    }

    /// Row for a yes/no structural fact (dimension counts and the like);
    /// residual is 0 or 1.
    pub fn boolean(id: &str, description: &str, ok: bool) -> Self {
        Self {
            id: id.to_string(),
            description: description.to_string(),
            residual: if ok { 0.0 } else { 1.0 },
            tolerance: 0.5,
            pass: ok,
        }
    }
}

/// A named collection of check rows, one verification suite run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub suite: String,
    pub seed: u64,
    pub rows: Vec<CheckRow>,
}

impl RunReport {
    pub fn new(suite: &str, seed: u64) -> Self {
        Self { suite: suite.to_string(), seed, rows: Vec::new() }
    }

    pub fn push(&mut self, row: CheckRow) {
        self.rows.push(row);
    }

    pub fn extend(&mut self, other: RunReport) {
        self.rows.extend(other.rows);
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failed(&self) -> Vec<&CheckRow> {
        self.rows.iter().filter(|r| !r.pass).collect()
    }

    /// Deterministic CSV: `suite,check_id,description,residual,tolerance,pass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("suite,check_id,description,residual,tolerance,pass\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                self.suite,
                r.id,
                csv_field(&r.description),
                format_float(r.residual),
                format_float(r.tolerance),
                if r.pass { "pass" } else { "fail" }
            );
        }
        out
    }

    /// One line per row, for terminal output.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "[{}] {:10} residual {:>12} tol {:>9} {}",
                if r.pass { "pass" } else { "FAIL" },
                r.id,
                format_float(r.residual),
                format_float(r.tolerance),
                r.description
            );
        }
        let _ = writeln!(
            out,
            "{}: {}/{} checks passed",
            self.suite,
            self.rows.iter().filter(|r| r.pass).count(),
            self.rows.len()
        );
        out
    }
}

/// Fixed scientific formatting, identical across runs and platforms.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    format!("{x:.12e}")
}

/// Full-precision formatting for eigenvalue tables.
pub fn format_float_full(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    format!("{x:.17e}")
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_is_stable_and_quoted() {
        let mut rep = RunReport::new("demo", 42);
        rep.push(CheckRow::measured("X1", "plain text", 1e-12, 1e-10));
        rep.push(CheckRow::measured("X2", "with, comma", 0.0, 1e-10));
        let csv = rep.to_csv();
        assert!(csv.starts_with("suite,check_id,description,residual,tolerance,pass\n"));
        assert!(csv.contains("\"with, comma\""));
        assert_eq!(csv, rep.to_csv());
        assert!(rep.all_pass());
    }

    #[test]
    fn float_format_round_trips() {
        for &x in &[1.0, -2.5e-13, 3.141592653589793, 1e300] {
            let s = format_float_full(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, x);
        }
    }
}
