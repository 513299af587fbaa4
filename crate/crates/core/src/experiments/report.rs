//! Experiment reports: measured tables, fitted exponents and per-criterion verdicts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::LinearFit;

/// Build identifier from `git describe`, or `unknown` outside a checkout.
pub fn build_id() -> &'static str {
    env!("NLSINFLATE_BUILD_ID")
}

/// Renders values as `[a, b, …]` in scientific notation with four decimals.
pub(crate) fn sci_list(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Num(v) if v.fract() == 0.0 && v.abs() < 1e15 => format!("{v}"),
            Cell::Num(v) => format!("{v:e}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Num(v as f64)
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

/// A measured table, written as one CSV file with a header row.
#[derive(Debug, Clone, Serialize)]
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

    /// Appends a row; panics if its width does not match the header.
    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width does not match table `{}`",
            self.name
        );
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of a column (text cells become NaN).
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_index(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| r[j].as_f64().unwrap_or(f64::NAN))
                .collect(),
        )
    }

    /// Text values of a column (numbers are rendered).
    pub fn text_column(&self, name: &str) -> Option<Vec<String>> {
        let j = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[j].render()).collect())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A fitted exponent with its target and tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub name: String,
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
    pub target: Option<f64>,
    pub tolerance: Option<f64>,
}

impl FitSummary {
    pub fn new(name: &str, fit: &LinearFit, target: Option<f64>, tolerance: Option<f64>) -> Self {
        Self {
            name: name.to_string(),
            slope: fit.slope,
            stderr: fit.slope_stderr,
            intercept: fit.intercept,
            r2: fit.r2,
            points: fit.points,
            target,
            tolerance,
        }
    }
}

/// Verdict on one acceptance criterion.
#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    /// Acceptance criterion number.
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub build: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub tables: Vec<Table>,
    pub fits: Vec<FitSummary>,
    pub criteria: Vec<Criterion>,
    pub notes: Vec<String>,
    pub wall_clock_s: f64,
    #[serde(skip)]
    started: Option<Instant>,
}

impl ExperimentReport {
    pub fn new<C: Serialize>(experiment: &str, seed: u64, config: &C) -> Result<Self> {
        Ok(Self {
            experiment: experiment.to_string(),
            build: build_id().to_string(),
            seed,
            config: serde_json::to_value(config)?,
            tables: Vec::new(),
            fits: Vec::new(),
            criteria: Vec::new(),
            notes: Vec::new(),
            wall_clock_s: 0.0,
            started: Some(Instant::now()),
        })
    }

    pub fn criterion(&mut self, id: u32, name: &str, passed: bool, detail: String) {
        self.criteria.push(Criterion {
            id,
            name: name.to_string(),
            passed,
            detail,
        });
    }

    pub fn note(&mut self, note: String) {
        self.notes.push(note);
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn fit(&self, name: &str) -> Option<&FitSummary> {
        self.fits.iter().find(|f| f.name == name)
    }

    /// Stops the wall clock.
    pub fn finish(mut self) -> Self {
        if let Some(t0) = self.started.take() {
            self.wall_clock_s = t0.elapsed().as_secs_f64();
        }
        self
    }

    /// True when every evaluated criterion passed.
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    /// Writes `<experiment>_<table>.csv` per table and `<experiment>_summary.json`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let stem = self.experiment.replace('-', "_");
        let mut written = Vec::new();
        for t in &self.tables {
            if t.name.contains(['/', '\\']) {
                return Err(Error::Config(format!("invalid table name `{}`", t.name)));
            }
            let path = dir.join(format!("{stem}_{}.csv", t.name));
            t.write_csv(&path)?;
            written.push(path);
        }
        let summary = serde_json::json!({
            "experiment": self.experiment,
            "build": self.build,
            "seed": self.seed,
            "config": self.config,
            "tables": self.tables.iter().map(|t| serde_json::json!({
                "name": t.name,
                "file": format!("{stem}_{}.csv", t.name),
                "columns": t.columns,
            })).collect::<Vec<_>>(),
            "fits": self.fits,
            "criteria": self.criteria,
            "passed": self.passed(),
            "notes": self.notes,
            "wall_clock_s": self.wall_clock_s,
        });
        let path = dir.join(format!("{stem}_summary.json"));
        fs::write(&path, serde_json::to_string_pretty(&summary)?)?;
        written.push(path);
        Ok(written)
    }
}
