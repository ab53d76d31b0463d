//! Experiment reports and their CSV / JSON renderings.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::Result;

/// A rectangular table of preformatted cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx].as_str()).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|i| self.rows.iter().map(|r| r[i].len()).chain([self.columns[i].len()]).max().unwrap_or(0))
            .collect();
        let line = |cells: &[String], f: &mut fmt::Formatter<'_>| {
            let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
            writeln!(f, "{}", parts.join("  "))
        };
        line(&self.columns, f)?;
        for row in &self.rows {
            line(row, f)?;
        }
        Ok(())
    }
}

/// Metrics of one repetition at one parameter setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionRow {
    pub setting: String,
    pub repetition: usize,
    pub seed: u64,
    pub metrics: BTreeMap<String, f64>,
}

/// Everything an experiment produced. Wall-clock time is kept for display
/// only; it is not serialized and does not take part in equality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub repetitions: Vec<RepetitionRow>,
    pub table: Table,
    pub reference: Option<Table>,
    pub functions: Vec<String>,
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

impl PartialEq for Report {
    fn eq(&self, other: &Self) -> bool {
        self.experiment == other.experiment
            && self.config == other.config
            && self.seed == other.seed
            && self.repetitions == other.repetitions
            && self.table == other.table
            && self.reference == other.reference
            && self.functions == other.functions
    }
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_csv(&self) -> String {
        self.table.to_csv()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "experiment {} (seed {}, {} repetitions)", self.experiment, self.seed, self.config.repetitions)?;
        write!(f, "{}", self.table)?;
        if let Some(reference) = &self.reference {
            writeln!(f, "hardware reference:")?;
            write!(f, "{reference}")?;
        }
        if !self.functions.is_empty() && self.functions.len() <= 64 {
            writeln!(f, "functions: {}", self.functions.join(" "))?;
        } else if !self.functions.is_empty() {
            writeln!(f, "functions: {} distinct", self.functions.len())?;
        }
        writeln!(f, "wall clock: {:.2}s", self.wall_clock_secs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    Csv,
    Json,
    Both,
}

impl std::str::FromStr for EmitFormat {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(EmitFormat::Csv),
            "json" => Ok(EmitFormat::Json),
            "both" | "all" => Ok(EmitFormat::Both),
            other => Err(crate::Error::Format(format!("unknown emit format '{other}'"))),
        }
    }
}

/// Writes `<experiment>.csv` and/or `<experiment>.json` into `dir`.
pub fn emit(report: &Report, dir: &Path, format: EmitFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if matches!(format, EmitFormat::Csv | EmitFormat::Both) {
        let path = dir.join(format!("{}.csv", report.experiment));
        fs::write(&path, report.to_csv())?;
        written.push(path);
    }
    if matches!(format, EmitFormat::Json | EmitFormat::Both) {
        let path = dir.join(format!("{}.json", report.experiment));
        fs::write(&path, report.to_json())?;
        written.push(path);
    }
    Ok(written)
}

/// Published hardware figures for the presets that have them.
pub fn reference_table(experiment: &str) -> Option<Table> {
    let rows: (&[&str], &[&[&str]]) = match experiment {
        "exp-bent-n2" => (&["coupler_strength", "distinct_bent"], &[&["1", "8"]]),
        "exp-bent-n4-sweep" => (
            &["coupler_strength", "bent_frequency_pct"],
            &[&["2", "25.76"], &["1", "45.8"], &["0.5", "50.21"], &["0.25", "95.86"], &["0.1", "25.32"]],
        ),
        "exp-bent-n6-localsearch" => (
            &["coupler_strength", "readouts", "optimized_range", "numbers"],
            &[
                &["0.4", "50", "27", "134"],
                &["0.4", "50", "26-27", "296"],
                &["0.4", "50", "25-27", "664"],
                &["0.4", "100", "27-28", "208"],
                &["0.4", "100", "26-27", "354"],
                &["0.4", "100", "25-27", "864"],
                &["0.4", "200", "27-28", "218"],
                &["0.4", "200", "26-27", "558"],
                &["0.4", "200", "25-27", "1202"],
            ],
        ),
        "exp-localsearch-n4" => (
            &["coupler_strength", "initialized", "optimized"],
            &[&["1", "85", "164.8"], &["0.5", "283.6", "663.8"], &["0.25", "812", "814.6"]],
        ),
        "exp-resilient-n4" => (
            &["strength_n", "strength_r", "initialized", "optimized"],
            &[
                &["0.25", "0.125", "104", "113.2"],
                &["0.5", "0.125", "28.4", "32"],
                &["0.125", "0.125", "150.8", "157.6"],
                &["0.05", "0.125", "191.6", "196"],
            ],
        ),
        _ => return None,
    };
    let mut t = Table::new(rows.0);
    for r in rows.1 {
        t.push(r.iter().map(|s| s.to_string()).collect());
    }
    Some(t)
}
