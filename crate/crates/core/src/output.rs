//! CSV tables and the JSON sidecar that records how they were produced.

use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::devices::Catalog;
use crate::security::KeyRateResult;

/// Fixed-width scientific notation, 9 significant digits.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.8e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_number(*x),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// Columns shared by every key-rate table.
pub const RESULT_COLUMNS: [&str; 5] = ["tau_h", "xi", "qber", "key_rate", "flags"];

/// Diagnostic flags of one evaluation, `;`-separated, empty when clean.
pub fn flags(result: &KeyRateResult) -> String {
    let mut f = Vec::new();
    if result.stats.clamped {
        f.push("clamped");
    }
    if result.no_signal {
        f.push("no_signal");
    }
    f.join(";")
}

/// Result cells matching [`RESULT_COLUMNS`]; a failed point yields NaNs and
/// the error message in the flags column.
pub fn result_cells(outcome: &Result<KeyRateResult, String>) -> Vec<Cell> {
    match outcome {
        Ok(r) => vec![
            r.tau_h.into(),
            r.xi.into(),
            r.qber.into(),
            r.key_rate.into(),
            flags(r).into(),
        ],
        Err(msg) => vec![
            f64::NAN.into(),
            f64::NAN.into(),
            f64::NAN.into(),
            f64::NAN.into(),
            format!("error: {msg}").into(),
        ],
    }
}

/// Provenance record written next to every CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub tool: String,
    pub version: String,
    pub preset: String,
    /// The full effective configuration, in the configuration file format.
    pub config: String,
    pub catalog: Catalog,
    pub outputs: Vec<String>,
}

impl Sidecar {
    pub fn new(preset: &str, config_toml: String, catalog: &Catalog) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            preset: preset.into(),
            config: config_toml,
            catalog: catalog.clone(),
            outputs: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// `<stem><suffix>.csv` next to `base`. An empty suffix gives `base` itself.
pub fn sibling_path(base: &Path, suffix: &str, extension: &str) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    base.with_file_name(format!("{stem}{suffix}.{extension}"))
}

/// Writes each `(suffix, table)` as a CSV next to `base`, then the sidecar as
/// `<stem>.json`. Returns the paths written.
pub fn write_outputs(base: &Path, tables: &[(String, CsvTable)], mut sidecar: Sidecar) -> io::Result<Vec<PathBuf>> {
    if let Some(dir) = base.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut written = Vec::new();
    for (suffix, table) in tables {
        let path = sibling_path(base, suffix, "csv");
        std::fs::write(&path, table.to_csv_bytes())?;
        sidecar
            .outputs
            .push(path.file_name().unwrap_or_default().to_string_lossy().into_owned());
        written.push(path);
    }
    let json_path = sibling_path(base, "", "json");
    let json = serde_json::to_string_pretty(&sidecar).map_err(io::Error::other)?;
    std::fs::write(&json_path, json + "\n")?;
    written.push(json_path);
    Ok(written)
}
