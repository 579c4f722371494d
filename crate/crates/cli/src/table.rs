//! Result tables: CSV with a `# units:` header line and a JSON mirror.

use std::path::{Path, PathBuf};

use serde_json::json;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

impl Column {
    pub fn new(name: impl Into<String>, unit: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            unit: unit.into(),
        }
    }
}

/// One output file worth of rows; `None` cells are written empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file_stem: String,
    pub title: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Option<f64>>>,
}

/// Shortest round-trip representation, switching to exponent form for very
/// large or small magnitudes.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-3..1e7).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Length labels in file names: 5 -> "5", 2.5 -> "2.5".
pub fn format_label(v: f64) -> String {
    format!("{v}")
}

impl Table {
    pub fn new(file_stem: impl Into<String>, title: impl Into<String>, columns: Vec<Column>) -> Self {
        Self {
            file_stem: file_stem.into(),
            title: title.into(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn units_line(&self) -> String {
        let parts: Vec<String> = self.columns.iter().map(|c| format!("{}={}", c.name, c.unit)).collect();
        format!("# units: {}", parts.join(", "))
    }

    /// Header lines then the body. The timestamp line, when present, is the
    /// only part that differs between runs of the same configuration.
    pub fn to_csv(&self, timestamp: Option<&str>) -> String {
        let mut out = String::new();
        out.push_str(&format!("# {}\n", self.title));
        if let Some(ts) = timestamp {
            out.push_str(&format!("# generated: {ts}\n"));
        }
        out.push_str(&self.units_line());
        out.push('\n');
        let names: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        out.push_str(&names.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| c.map(format_number).unwrap_or_default()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, timestamp: Option<&str>) -> serde_json::Value {
        json!({
            "title": self.title,
            "generated": timestamp,
            "columns": self.columns.iter().map(|c| json!({"name": c.name, "unit": c.unit})).collect::<Vec<_>>(),
            "rows": self.rows,
        })
    }

    /// Write `<stem>.csv` (and `<stem>.json` when asked) into `dir`.
    pub fn write(&self, dir: &Path, timestamp: Option<&str>, json: bool) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        let mut written = Vec::new();
        let csv_path = dir.join(format!("{}.csv", self.file_stem));
        write_file(&csv_path, &self.to_csv(timestamp))?;
        written.push(csv_path);
        if json {
            let json_path = dir.join(format!("{}.json", self.file_stem));
            let text = serde_json::to_string_pretty(&self.to_json(timestamp)).expect("table serializes");
            write_file(&json_path, &(text + "\n"))?;
            written.push(json_path);
        }
        Ok(written)
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}
