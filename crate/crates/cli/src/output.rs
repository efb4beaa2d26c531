//! Output artifacts: CSV/JSON data tables, JSON fit sidecars and the run
//! manifest.
//!
//! Floats are formatted with 17 significant digits in scientific notation so
//! identical runs produce byte-identical data files.

use crate::config::{ExperimentConfig, OutputFormat};
use serde::Serialize;
use serde_json::json;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

/// Fixed float formatting: 17 significant digits, scientific notation.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// One tabular output: column names plus rows of preformatted cells.
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }
}

/// Collected artifacts of one run, written together at the end.
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub sidecars: Vec<(String, serde_json::Value)>,
    pub notes: Vec<String>,
}

impl Default for RunOutput {
    fn default() -> Self {
        Self::new()
    }
}

impl RunOutput {
    pub fn new() -> Self {
        RunOutput {
            tables: Vec::new(),
            sidecars: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

fn write_csv(path: &Path, experiment: &str, table: &Table) -> std::io::Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(
        f,
        "# schema_version={SCHEMA_VERSION} experiment={experiment} table={}",
        table.name
    )?;
    writeln!(f, "{}", table.columns.join(","))?;
    for row in &table.rows {
        writeln!(f, "{}", row.join(","))?;
    }
    Ok(())
}

fn write_json_table(path: &Path, experiment: &str, table: &Table) -> std::io::Result<()> {
    let rows: Vec<serde_json::Value> = table
        .rows
        .iter()
        .map(|row| {
            let obj: serde_json::Map<String, serde_json::Value> = table
                .columns
                .iter()
                .zip(row)
                .map(|(c, v)| (c.clone(), serde_json::Value::String(v.clone())))
                .collect();
            serde_json::Value::Object(obj)
        })
        .collect();
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "experiment": experiment,
        "table": table.name,
        "columns": table.columns,
        "rows": rows,
    });
    fs::write(path, serde_json::to_string_pretty(&doc)?)
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    tool_version: &'static str,
    experiment: String,
    resolved_config: &'a ExperimentConfig,
    resolved_gamma: f64,
    quadrature_tol_abs: f64,
    quadrature_tol_rel: f64,
    wall_time_ms: u128,
    notes: &'a [String],
    outputs: Vec<serde_json::Value>,
}

/// Writes every table, sidecar and the manifest into `dir`; returns the list
/// of files written.
pub fn write_all(
    dir: &Path,
    config: &ExperimentConfig,
    resolved_gamma: f64,
    run: &RunOutput,
    wall_time_ms: u128,
) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let experiment = config.experiment.name();
    let mut written = Vec::new();
    let mut outputs_meta = Vec::new();

    for table in &run.tables {
        let (path, kind) = match config.output.format {
            OutputFormat::Csv => (dir.join(format!("{}.csv", table.name)), "csv"),
            OutputFormat::Json => (dir.join(format!("{}.json", table.name)), "json"),
        };
        match config.output.format {
            OutputFormat::Csv => write_csv(&path, experiment, table)?,
            OutputFormat::Json => write_json_table(&path, experiment, table)?,
        }
        outputs_meta.push(json!({
            "file": path.file_name().unwrap().to_string_lossy(),
            "kind": kind,
            "table": table.name,
            "rows": table.rows.len(),
        }));
        written.push(path);
    }
    for (name, value) in &run.sidecars {
        let path = dir.join(format!("{name}.json"));
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "experiment": experiment,
            "sidecar": name,
            "data": value,
        });
        fs::write(&path, serde_json::to_string_pretty(&doc)?)?;
        outputs_meta.push(json!({
            "file": path.file_name().unwrap().to_string_lossy(),
            "kind": "sidecar",
            "table": name,
        }));
        written.push(path);
    }

    let (tol_abs, tol_rel) = rgscale_core::quad::default_tols();
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        experiment: experiment.to_string(),
        resolved_config: config,
        resolved_gamma,
        quadrature_tol_abs: tol_abs,
        quadrature_tol_rel: tol_rel,
        wall_time_ms,
        notes: &run.notes,
        outputs: outputs_meta,
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    written.push(path);
    Ok(written)
}
