//! Check records, run reports and series files.
//!
//! Reports are the comparable artifact of a run: JSON with the key order
//! fixed by struct declaration and no wall-clock or other nondeterministic
//! content in the serialized form. Timing lives on the struct for display
//! but is skipped on write, so two runs with the same configuration and
//! seed produce identical bytes.

use crate::{Error, Result};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRecord {
    /// A defect measurement: passes when the value is finite and at most
    /// the tolerance.
    pub fn measured(name: &str, value: f64, tolerance: f64) -> Self {
        CheckRecord {
            name: name.into(),
            value,
            tolerance,
            pass: value.is_finite() && value <= tolerance,
        }
    }

    /// A lower-bounded measurement, for observed convergence orders.
    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        CheckRecord {
            name: name.into(),
            value,
            tolerance: bound,
            pass: value.is_finite() && value >= bound,
        }
    }

    /// An exact integer comparison, recorded as the absolute difference.
    pub fn exact_count(name: &str, got: usize, want: usize) -> Self {
        CheckRecord {
            name: name.into(),
            value: (got as f64) - (want as f64),
            tolerance: 0.0,
            pass: got == want,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub version: String,
    pub theory: String,
    pub seed: u64,
    pub config_echo: String,
    pub checks: Vec<CheckRecord>,
    /// File names written alongside this report.
    pub series: Vec<String>,
    pub overall_pass: bool,
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

impl RunReport {
    pub fn new(theory: &str, seed: u64, config_echo: String) -> Self {
        RunReport {
            version: env!("CARGO_PKG_VERSION").to_string(),
            theory: theory.into(),
            seed,
            config_echo,
            checks: Vec::new(),
            series: Vec::new(),
            overall_pass: true,
            wall_clock_seconds: 0.0,
        }
    }

    pub fn push(&mut self, record: CheckRecord) {
        self.overall_pass &= record.pass;
        self.checks.push(record);
    }

    pub fn extend(&mut self, records: Vec<CheckRecord>) {
        for r in records {
            self.push(r);
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Serialize(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    /// Writes `<name>.json` into `dir`, creating the directory if needed.
    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(format!("{name}.json"));
        fs::write(&path, self.to_json()?)?;
        Ok(path)
    }
}

/// Writes an RFC 4180 CSV series file with a mandatory header row and
/// returns its path. Floats are written in shortest round-trip form.
pub fn write_csv(
    dir: &Path,
    name: &str,
    header: &[&str],
    rows: &[Vec<f64>],
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{name}.csv"));
    let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Serialize(e.to_string()))?;
    w.write_record(header)
        .map_err(|e| Error::Serialize(e.to_string()))?;
    for (i, row) in rows.iter().enumerate() {
        if row.len() != header.len() {
            return Err(Error::Serialize(format!(
                "row {i} has {} fields, header has {}",
                row.len(),
                header.len()
            )));
        }
        let fields: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        w.write_record(&fields)
            .map_err(|e| Error::Serialize(e.to_string()))?;
    }
    w.flush()?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_serializes_without_wall_clock_and_tracks_overall() {
        let mut rep = RunReport::new("scalar", 7, "theory = \"scalar\"\n".into());
        rep.wall_clock_seconds = 123.4;
        rep.push(CheckRecord::measured("alpha", 1e-12, 1e-10));
        assert!(rep.overall_pass);
        rep.push(CheckRecord::at_least("order", 1.2, 1.8));
        assert!(!rep.overall_pass);
        let json = rep.to_json().unwrap();
        assert!(!json.contains("wall_clock"));
        assert!(json.contains("\"overall_pass\": false"));
        let again = rep.to_json().unwrap();
        assert_eq!(json, again);
    }

    #[test]
    fn records_handle_nan_and_counts() {
        assert!(!CheckRecord::measured("bad", f64::NAN, 1.0).pass);
        assert!(!CheckRecord::at_least("bad", f64::NAN, 1.0).pass);
        assert!(CheckRecord::exact_count("dims", 34, 34).pass);
        let off = CheckRecord::exact_count("dims", 33, 34);
        assert!(!off.pass);
        assert_eq!(off.value, -1.0);
    }

    #[test]
    fn csv_has_header_and_quotes_cleanly() {
        let dir = std::env::temp_dir().join("collar-report-test");
        let path = write_csv(
            &dir,
            "series",
            &["t", "energy"],
            &[vec![0.0, 1.5], vec![0.01, 1.4999]],
        )
        .unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,energy");
        assert_eq!(lines.next().unwrap(), "0,1.5");
        assert!(write_csv(&dir, "bad", &["a"], &[vec![1.0, 2.0]]).is_err());
        fs::remove_dir_all(&dir).ok();
    }
}
