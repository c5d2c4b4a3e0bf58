use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::args::OutputFormat;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: Status,
    pub max_deviation: f64,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl CheckRecord {
    /// Passes when `max_deviation ≤ tolerance`.
    pub fn new(name: impl Into<String>, max_deviation: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        let passed = max_deviation.is_finite() && max_deviation <= tolerance;
        Self::with_status(name, passed, max_deviation, tolerance, detail)
    }

    pub fn with_status(
        name: impl Into<String>,
        passed: bool,
        max_deviation: f64,
        tolerance: f64,
        detail: impl Into<String>,
    ) -> Self {
        // JSON has no infinity; an unmeasurable deviation is reported as f64::MAX
        let finite = |x: f64| if x.is_finite() { x } else { f64::MAX };
        Self {
            name: name.into(),
            status: if passed { Status::Pass } else { Status::Fail },
            max_deviation: finite(max_deviation),
            tolerance: finite(tolerance),
            detail: detail.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Num(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut wr = csv::Writer::from_writer(Vec::new());
        wr.write_record(&self.columns)?;
        for row in &self.rows {
            wr.write_record(row.iter().map(Cell::to_string))?;
        }
        let bytes = wr.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool_version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub checks: Vec<CheckRecord>,
    pub tables: Vec<Table>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

impl Report {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            checks: Vec::new(),
            tables: Vec::new(),
            wall_time: None,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(CheckRecord::passed)
    }

    pub fn exit_code(&self) -> u8 {
        if self.all_passed() {
            0
        } else {
            1
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn render(&self, format: OutputFormat) -> Result<String, CliError> {
        match format {
            OutputFormat::Json => Ok(serde_json::to_string_pretty(self)? + "\n"),
            OutputFormat::Csv => self.render_csv(),
            OutputFormat::Text => Ok(self.render_text()),
        }
    }

    /// One CSV block per table, each preceded by a `# table: NAME` line;
    /// the checks come first as a table named `checks`.
    fn render_csv(&self) -> Result<String, CliError> {
        let mut checks = Table::new("checks", &["name", "status", "max_deviation", "tolerance"]);
        for c in &self.checks {
            let status = if c.passed() { "pass" } else { "fail" };
            checks.push(vec![c.name.clone().into(), status.into(), c.max_deviation.into(), c.tolerance.into()]);
        }
        let mut out = String::new();
        for (i, t) in std::iter::once(&checks).chain(&self.tables).enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "# table: {}", t.name);
            out.push_str(&t.to_csv()?);
        }
        Ok(out)
    }

    fn render_text(&self) -> String {
        const MAX_ROWS: usize = 120;
        const MAX_COLS: usize = 12;
        let mut out = String::new();
        let failed = self.checks.iter().filter(|c| !c.passed()).count();
        let _ = writeln!(out, "qgame {} {}", self.tool_version, self.command);
        let _ = writeln!(out, "checks: {} passed, {} failed", self.checks.len() - failed, failed);
        for c in &self.checks {
            let tag = if c.passed() { "PASS" } else { "FAIL" };
            let _ = write!(out, "  {tag} {:<28} dev {:.3e}  tol {:.1e}", c.name, c.max_deviation, c.tolerance);
            if !c.passed() && !c.detail.is_empty() {
                let _ = write!(out, "  ({})", c.detail);
            }
            out.push('\n');
        }
        for t in &self.tables {
            let _ = writeln!(out, "\n{} ({} rows)", t.name, t.rows.len());
            if t.rows.len() > MAX_ROWS || t.columns.len() > MAX_COLS {
                let _ = writeln!(out, "  {} x {} values; use --output csv or json", t.rows.len(), t.columns.len());
                continue;
            }
            let cells: Vec<Vec<String>> = std::iter::once(t.columns.clone())
                .chain(t.rows.iter().map(|r| r.iter().map(text_cell).collect()))
                .collect();
            let widths: Vec<usize> = (0..t.columns.len())
                .map(|j| cells.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
                .collect();
            for row in &cells {
                out.push(' ');
                for (cell, w) in row.iter().zip(&widths) {
                    let _ = write!(out, " {cell:>w$}");
                }
                out.push('\n');
            }
        }
        if let Some(t) = self.wall_time {
            let _ = writeln!(out, "\nwall time: {t:.3} s");
        }
        out
    }
}

fn text_cell(c: &Cell) -> String {
    match c {
        Cell::Num(v) if *v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e6) => format!("{v:.6e}"),
        Cell::Num(v) => format!("{v:.6}"),
        other => other.to_string(),
    }
}
