//! CSV and JSON summary emission. Both files are rendered in memory and only
//! land on disk once the whole scenario has succeeded.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use serde_json::{json, Value};

use crate::experiments::{Cell, Row};
use crate::scenario::Scenario;

/// 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn format_cell(c: &Cell) -> String {
    match c {
        Cell::Num(v) => format_float(*v),
        Cell::Int(v) => v.to_string(),
        Cell::Bool(b) => b.to_string(),
        Cell::Empty => String::new(),
    }
}

pub struct Timed {
    pub row: Row,
    pub wall_time: f64,
}

pub fn render_csv(scenario: &Scenario, rows: &[Timed]) -> Result<String> {
    let tol = serde_json::to_value(scenario.tolerances)?;
    let tol = tol.as_object().context("tolerances serialize to an object")?;
    let columns: Vec<&str> = rows.first().map(|t| t.row.columns.iter().map(|c| c.0).collect()).unwrap_or_default();

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["scenario".to_string(), "experiment".into(), "index".into(), "parameter".into(), "value".into()];
    header.extend(columns.iter().map(|c| c.to_string()));
    header.extend(["pass".to_string(), "seed".into()]);
    header.extend(tol.keys().map(|k| format!("tol_{k}")));
    header.push("wall_time_s".into());
    w.write_record(&header)?;

    let parameter = scenario
        .sweep
        .as_ref()
        .map(|s| serde_json::to_value(s.parameter).map(|v| v.as_str().unwrap_or_default().to_string()))
        .transpose()?
        .unwrap_or_else(|| if scenario.experiment.label() == "ramp" { "time".into() } else { String::new() });
    for Timed { row, wall_time } in rows {
        let names: Vec<&str> = row.columns.iter().map(|c| c.0).collect();
        ensure!(names == columns, "rows of one scenario must share columns");
        let mut record = vec![
            scenario.name.clone(),
            scenario.experiment.label().to_string(),
            row.index.to_string(),
            parameter.clone(),
            row.value.map(format_float).unwrap_or_default(),
        ];
        for (name, cell) in &row.columns {
            if let Cell::Num(v) = cell {
                ensure!(v.is_finite(), "column `{name}` of row {} is not finite", row.index);
            }
            record.push(format_cell(cell));
        }
        record.push(row.pass.to_string());
        record.push(row.seed.to_string());
        for v in tol.values() {
            record.push(format_float(v.as_f64().context("tolerance is numeric")?));
        }
        record.push(format_float(*wall_time));
        w.write_record(&record)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn render_summary(
    scenario: &Scenario,
    rows: &[Timed],
    extras: Vec<Value>,
    all_pass: bool,
    workers: usize,
    wall_time: f64,
) -> Result<String> {
    let passed = rows.iter().filter(|t| t.row.pass).count();
    let summary = json!({
        "scenario": scenario,
        "rows": rows.len(),
        "passed": passed,
        "failed": rows.len() - passed,
        "all_pass": all_pass,
        "seed": scenario.seed,
        "tolerances": scenario.tolerances,
        "checks": extras,
        "workers": workers,
        "wall_time_s": wall_time,
    });
    Ok(serde_json::to_string_pretty(&summary)? + "\n")
}

/// Writes every file next to its destination first, then renames them all.
pub fn commit(files: &[(PathBuf, String)]) -> Result<()> {
    let mut staged = Vec::new();
    for (path, contents) in files {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        let tmp = staging_path(path);
        if let Err(e) = fs::write(&tmp, contents) {
            discard(&staged);
            return Err(e).with_context(|| format!("writing {}", tmp.display()));
        }
        staged.push((tmp, path.clone()));
    }
    for (tmp, path) in &staged {
        fs::rename(tmp, path).with_context(|| format!("moving output into {}", path.display()))?;
    }
    Ok(())
}

fn staging_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(format!(".partial-{}", std::process::id()));
    path.with_file_name(name)
}

fn discard(staged: &[(PathBuf, PathBuf)]) {
    for (tmp, _) in staged {
        let _ = fs::remove_file(tmp);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(4.0), "4.0000000000000000e0");
        for v in [std::f64::consts::PI, 1e-300, -2.5e17] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
    }
}
