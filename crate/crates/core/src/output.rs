//! CSV tables with a `#`-prefixed run manifest.
//!
//! Floats are written in scientific notation with 12 significant digits, so
//! identical inputs give byte-identical data rows.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};

use crate::mimo::PowerStatistics;
use crate::ris::RisOutcome;
use crate::stats::Estimate;

/// Provenance of one output file.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub started: String,
    pub finished: String,
}

impl RunManifest {
    pub fn header(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# command: {}", self.command);
        let _ = writeln!(s, "# tool_version: {}", self.tool_version);
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "# seed: {seed}");
        }
        for (k, v) in &self.parameters {
            let _ = writeln!(s, "# param {k} = {v}");
        }
        let _ = writeln!(s, "# started: {}", self.started);
        let _ = writeln!(s, "# finished: {}", self.finished);
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Real(f64),
    Text(String),
    Empty,
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Real)
    }
}

/// `{:.11e}`: twelve significant digits.
pub fn format_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        x.to_string()
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(x) => format_real(*x),
            Cell::Text(t) => t.clone(),
            Cell::Empty => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Column line followed by the data rows.
    pub fn data(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(Cell::render).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write_to<W: Write>(&self, manifest: &RunManifest, mut out: W) -> io::Result<()> {
        out.write_all(manifest.header().as_bytes())?;
        out.write_all(self.data().as_bytes())
    }
}

/// Lines of a CSV file that are not manifest comments.
pub fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

pub const MIMO_COLUMNS: [&str; 7] = ["M", "N", "epsilon", "trial_count", "statistic_name", "value", "stderr"];

pub fn mimo_row(tx: usize, rx: usize, epsilon: Option<f64>, name: &str, e: &Estimate) -> Vec<Cell> {
    vec![
        tx.into(),
        rx.into(),
        epsilon.into(),
        e.trials.into(),
        name.into(),
        e.value.into(),
        e.stderr.into(),
    ]
}

/// One row per statistic of a power experiment.
pub fn power_rows(tx: usize, rx: usize, epsilon: f64, p: &PowerStatistics) -> Vec<Vec<Cell>> {
    [
        ("mean_bound", &p.bound),
        ("mean_lambda", &p.lambda),
        ("mean_inverse_bound", &p.inverse_bound),
        ("mean_lambda_over_bound", &p.lambda_over_bound),
        ("mean_inverse_combined", &p.inverse_combined),
        ("approximation_share", &p.approximation_share),
    ]
    .into_iter()
    .map(|(n, e)| mimo_row(tx, rx, Some(epsilon), n, e))
    .collect()
}

pub const RIS_COLUMNS: [&str; 9] = [
    "N_R",
    "kappa",
    "epsilon",
    "bound",
    "empirical_threshold",
    "ratio",
    "achieved_outage",
    "normalized_gain",
    "trials",
];

pub fn ris_row(o: &RisOutcome) -> Vec<Cell> {
    vec![
        o.reflectors.into(),
        o.kappa_h.into(),
        o.epsilon.into(),
        o.bound.into(),
        o.empirical_threshold.into(),
        o.ratio.into(),
        o.achieved_outage.into(),
        o.normalized_gain.into(),
        o.trials.into(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_real(1.0), "1.00000000000e0");
        assert_eq!(format_real(-2.5e-7), "-2.50000000000e-7");
        assert_eq!(format_real(f64::NAN), "NaN");
        let x = 0.123_456_789_012_345_6;
        let back: f64 = format_real(x).parse().unwrap();
        assert!(((back - x) / x).abs() < 5e-12);
    }

    #[test]
    fn header_then_rows() {
        let mut t = Table::new(&["a", "b", "c"]);
        t.push(vec![1u64.into(), 0.5.into(), Cell::Empty]);
        t.push(vec!["x".into(), true.into(), Some(2.0).into()]);
        let mut m = RunManifest { command: "demo".into(), seed: Some(3), ..Default::default() };
        m.parameters.insert("k".into(), "4".into());
        let mut buf = Vec::new();
        t.write_to(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# command: demo\n"));
        assert!(text.contains("# param k = 4\n"));
        assert_eq!(
            data_lines(&text),
            ["a,b,c", "1,5.00000000000e-1,", "x,true,2.00000000000e0"]
        );
    }
}
