//! Command reports in a human-readable text form and a line-oriented
//! `key = value` form with a stable key order.
//!
//! Only the text form carries the wall-clock time, so structured reports
//! are byte-identical across runs with the same inputs and seed.

use std::fmt::Write as _;
use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Structured,
}

/// One computed number with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub quantity: String,
    pub value: f64,
    pub method: String,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportDocument {
    pub command: String,
    pub config: Vec<(String, String)>,
    pub results: Vec<ResultRow>,
    /// Non-numeric findings such as verdicts.
    pub findings: Vec<(String, String)>,
    pub witnesses: Vec<(String, String)>,
    pub status: String,
    pub message: Option<String>,
    pub exit_code: i32,
    pub wall_clock: Option<Duration>,
}

impl ReportDocument {
    pub fn new(command: &str) -> Self {
        Self { command: command.to_string(), status: "ok".into(), ..Default::default() }
    }

    pub fn config(&mut self, key: &str, value: impl ToString) {
        self.config.push((key.to_string(), value.to_string()));
    }

    pub fn result(&mut self, quantity: impl Into<String>, value: f64, method: impl Into<String>, tol: f64) {
        self.results.push(ResultRow { quantity: quantity.into(), value, method: method.into(), tol });
    }

    pub fn finding(&mut self, key: impl Into<String>, value: impl ToString) {
        self.findings.push((key.into(), value.to_string()));
    }

    pub fn witness(&mut self, key: impl Into<String>, value: impl ToString) {
        self.witnesses.push((key.into(), value.to_string()));
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.render_text(),
            Format::Structured => self.render_structured(),
        }
    }

    fn render_structured(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command = {}", self.command);
        for (k, v) in &self.config {
            let _ = writeln!(out, "config.{k} = {v}");
        }
        for r in &self.results {
            let _ = writeln!(out, "result.{}.value = {}", r.quantity, number(r.value));
            let _ = writeln!(out, "result.{}.method = {}", r.quantity, r.method);
            let _ = writeln!(out, "result.{}.tol = {}", r.quantity, number(r.tol));
        }
        for (k, v) in &self.findings {
            let _ = writeln!(out, "finding.{k} = {v}");
        }
        for (k, v) in &self.witnesses {
            let _ = writeln!(out, "witness.{k} = {v}");
        }
        let _ = writeln!(out, "status = {}", self.status);
        if let Some(m) = &self.message {
            let _ = writeln!(out, "message = {m}");
        }
        let _ = writeln!(out, "exit = {}", self.exit_code);
        out
    }

    fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "varisk {}", self.command);
        let width = self.config.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in &self.config {
            let _ = writeln!(out, "  {k:<width$}  {v}");
        }
        if !self.results.is_empty() {
            let qw = self.results.iter().map(|r| r.quantity.len()).max().unwrap_or(0).max(8);
            let vw = self.results.iter().map(|r| number(r.value).len()).max().unwrap_or(0).max(5);
            let mw = self.results.iter().map(|r| r.method.len()).max().unwrap_or(0).max(6);
            let _ = writeln!(out);
            let _ = writeln!(out, "  {:<qw$}  {:>vw$}  {:<mw$}  tol", "quantity", "value", "method");
            for r in &self.results {
                let _ = writeln!(out, "  {:<qw$}  {:>vw$}  {:<mw$}  {}", r.quantity, number(r.value), r.method, number(r.tol));
            }
        }
        if !self.findings.is_empty() {
            let _ = writeln!(out);
            for (k, v) in &self.findings {
                let _ = writeln!(out, "  {k}: {v}");
            }
        }
        if !self.witnesses.is_empty() {
            let _ = writeln!(out);
            for (k, v) in &self.witnesses {
                let _ = writeln!(out, "  witness {k}: {v}");
            }
        }
        let _ = writeln!(out);
        match &self.message {
            Some(m) => {
                let _ = writeln!(out, "{} (exit {}): {m}", self.status, self.exit_code);
            }
            None => {
                let _ = writeln!(out, "{} (exit {})", self.status, self.exit_code);
            }
        }
        if let Some(t) = self.wall_clock {
            let _ = writeln!(out, "wall-clock: {:.3} ms", t.as_secs_f64() * 1e3);
        }
        out
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn number(x: f64) -> String {
    format!("{x:?}")
}

/// `[[a, b], [c, d]]` with round-trip numbers.
pub fn rows(values: &[f64], d: usize) -> String {
    let inner: Vec<String> = values
        .chunks(d.max(1))
        .map(|r| format!("[{}]", r.iter().map(|x| number(*x)).collect::<Vec<_>>().join(", ")))
        .collect();
    format!("[{}]", inner.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structured_report_is_line_oriented() {
        let mut r = ReportDocument::new("risk");
        r.config("payoff", "f");
        r.result("rho", -0.5, "golden-section", 1e-8);
        r.wall_clock = Some(Duration::from_millis(3));
        let s = r.render(Format::Structured);
        assert_eq!(
            s,
            "command = risk\nconfig.payoff = f\nresult.rho.value = -0.5\nresult.rho.method = golden-section\n\
             result.rho.tol = 1e-8\nstatus = ok\nexit = 0\n"
        );
        assert!(r.render(Format::Text).contains("wall-clock"));
    }

    #[test]
    fn rows_round_trip_numbers() {
        assert_eq!(rows(&[0.1, 2.0, -3.5, 1e-12], 2), "[[0.1, 2.0], [-3.5, 1e-12]]");
    }
}
