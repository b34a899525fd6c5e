use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::ScenarioConfig;
use crate::CliError;

/// Sweep results in row order, ready for CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Scalar results reported on stdout.
    pub notes: Vec<String>,
}

impl Table {
    pub fn new(columns: &[&str], rows: Vec<Vec<f64>>) -> Self {
        debug_assert!(rows.iter().all(|r| r.len() == columns.len()));
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows, notes: Vec::new() }
    }

    /// Header plus one line per row, 17 significant digits, `\n` line endings.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write!(out, "{v:.16e}").expect("writing to a String cannot fail");
            }
            out.push('\n');
        }
        out
    }
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// Writes the CSV and the resolved-config echo next to it.
pub fn write_outputs(table: &Table, config: &ScenarioConfig, csv: &Path) -> Result<PathBuf, CliError> {
    let io = |p: &Path, e: std::io::Error| CliError::Io(format!("{}: {e}", p.display()));
    let sidecar = sidecar_path(csv);
    let mut echo = serde_json::to_string_pretty(config).expect("config serializes");
    echo.push('\n');
    std::fs::write(csv, table.to_csv()).map_err(|e| io(csv, e))?;
    std::fs::write(&sidecar, echo).map_err(|e| io(&sidecar, e))?;
    Ok(sidecar)
}
