//! Experiment results: CSV tables, acceptance checks and file emission.

use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// One CSV file. Cells are pre-formatted so output is byte-stable.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &str, columns: &[&str]) -> Self {
        Self {
            file: file.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width for {}", self.file);
        self.rows.push(row);
    }

    /// Numeric values of `column`, skipping cells that do not parse.
    pub fn column(&self, column: &str) -> Vec<f64> {
        let Some(i) = self.columns.iter().position(|c| c == column) else {
            return Vec::new();
        };
        self.rows.iter().filter_map(|r| r[i].parse().ok()).collect()
    }

    pub fn write<W: Write>(&self, mut w: W, header: &str) -> std::io::Result<()> {
        writeln!(w, "{header}")?;
        writeln!(w, "{}", self.columns.join(","))?;
        for r in &self.rows {
            writeln!(w, "{}", r.join(","))?;
        }
        Ok(())
    }
}

/// Formats a float with six decimals; the CSV convention throughout.
pub fn f6(v: f64) -> String {
    format!("{v:.6}")
}

pub fn cell(v: impl Display) -> String {
    v.to_string()
}

/// A pass/fail comparison against an acceptance threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }

    pub fn at_most(name: &str, value: f64, limit: f64, unit: &str) -> Self {
        Self::new(name, value <= limit, bound(value, "<=", limit, unit))
    }

    pub fn at_least(name: &str, value: f64, limit: f64, unit: &str) -> Self {
        Self::new(name, value >= limit, bound(value, ">=", limit, unit))
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

fn number(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-3 {
        format!("{v:.3e}")
    } else {
        format!("{v:.4}")
    }
}

fn bound(value: f64, op: &str, limit: f64, unit: &str) -> String {
    let unit = if unit.is_empty() {
        String::new()
    } else {
        format!(" {unit}")
    };
    format!(
        "{}{unit} (limit {op} {}{unit})",
        number(value),
        number(limit)
    )
}

/// Everything one experiment produced.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    /// Free-form summary lines printed before the checks.
    pub notes: Vec<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn table(&self, file: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.file == file)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Writes every table into `dir` with the provenance header line. Returns the paths.
    pub fn write_tables(&self, dir: &Path, header: &str) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for t in &self.tables {
            let path = dir.join(&t.file);
            let mut buf = Vec::new();
            t.write(&mut buf, header)?;
            fs::write(&path, buf)?;
            paths.push(path);
        }
        Ok(paths)
    }
}

pub fn median(v: &[f64]) -> f64 {
    percentile(v, 0.5)
}

/// Linear-interpolated percentile; NaN for empty input.
pub fn percentile(v: &[f64], q: f64) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    s[lo] + (s[hi] - s[lo]) * (pos - lo as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_then_columns() {
        let mut t = Table::new("x.csv", &["a", "b"]);
        t.push(vec![cell(1), f6(0.5)]);
        let mut out = Vec::new();
        t.write(&mut out, "# experiment=x seed=1 config_hash=abc")
            .unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "# experiment=x seed=1 config_hash=abc\na,b\n1,0.500000\n"
        );
        assert_eq!(t.column("b"), vec![0.5]);
    }

    #[test]
    fn percentiles() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(percentile(&[0.0, 10.0], 0.95), 9.5);
        assert!(median(&[]).is_nan());
    }
}
