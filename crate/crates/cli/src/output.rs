//! Run-directory layout and serialization.
//!
//! Each run writes into `<out>/<task>_<hash>/` where the hash digests the raw
//! config bytes together with the effective seed, so distinct settings never
//! collide and re-runs land in the same place. `results.csv` and
//! `summary.json` carry the data contract; `manifest.json` records
//! provenance: config hash, seed, thread count, crate versions, wall time,
//! and a SHA-256 checksum per output file.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

/// A CSV body as strings; the writer never reformats values, keeping output
/// byte-stable across runs.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(&self.header)
            .and_then(|_| self.rows.iter().try_for_each(|r| writer.write_record(r)))
            .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
        writer.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e)))
    }
}

/// Everything a task driver produces; the writer decides the file layout.
#[derive(Debug)]
pub struct TaskResult {
    pub results: CsvTable,
    /// Additional named tables (`ensemble.csv`, `feature_matrix.csv`, ...).
    pub extra_tables: Vec<(String, CsvTable)>,
    pub summary: serde_json::Value,
    /// Optional (file name, content) SVG preview.
    pub svg: Option<(String, String)>,
}

/// Shortest round-trip decimal form; parsing it back recovers the exact bits,
/// and equal bits always print the same bytes.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        // Collapse -0 so sign noise from summation order can't leak into CSVs.
        return "0".to_string();
    }
    format!("{x}")
}

pub fn fmt_opt_f64(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// JSON value for possibly-censored shot crossings.
pub fn json_f64(x: Option<f64>) -> serde_json::Value {
    match x {
        Some(v) => serde_json::json!(v),
        None => serde_json::Value::Null,
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    to_hex(&hasher.finalize())
}

/// Digest of the raw config bytes and the effective seed; first 12 hex chars
/// name the run directory.
pub fn run_hash(config_bytes: &[u8], seed: u64) -> String {
    let mut hasher = Sha256::new();
    hasher.update(config_bytes);
    hasher.update(seed.to_le_bytes());
    let digest = to_hex(&hasher.finalize());
    digest[..12].to_string()
}

fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    task: &'a str,
    config_hash: String,
    seed: u64,
    threads: serde_json::Value,
    versions: ManifestVersions,
    wall_time_seconds: f64,
    outputs: std::collections::BTreeMap<String, String>,
}

#[derive(Debug, Serialize)]
struct ManifestVersions {
    #[serde(rename = "stochsense")]
    core: &'static str,
    #[serde(rename = "stochsense-cli")]
    cli: &'static str,
}

/// Writes a completed run: data files first, then the manifest over their
/// checksums. Returns the run directory.
pub fn write_run(
    out_root: &Path,
    task_tag: &str,
    config_bytes: &[u8],
    seed: u64,
    threads: Option<usize>,
    result: &TaskResult,
    wall_time_seconds: f64,
) -> Result<PathBuf, CliError> {
    let hash = run_hash(config_bytes, seed);
    let dir = out_root.join(format!("{task_tag}_{hash}"));
    fs::create_dir_all(&dir)?;

    let mut outputs = std::collections::BTreeMap::new();
    let mut write_file = |name: &str, bytes: &[u8]| -> Result<(), CliError> {
        fs::write(dir.join(name), bytes)?;
        outputs.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    };

    write_file("results.csv", &result.results.to_bytes()?)?;
    for (name, table) in &result.extra_tables {
        write_file(name, &table.to_bytes()?)?;
    }
    let mut summary_bytes = serde_json::to_vec_pretty(&result.summary)
        .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    summary_bytes.push(b'\n');
    write_file("summary.json", &summary_bytes)?;
    if let Some((name, content)) = &result.svg {
        write_file(name, content.as_bytes())?;
    }

    let manifest = Manifest {
        task: task_tag,
        config_hash: sha256_hex(config_bytes),
        seed,
        threads: match threads {
            Some(k) => serde_json::json!(k),
            None => serde_json::Value::Null,
        },
        versions: ManifestVersions {
            core: env!("CARGO_PKG_VERSION"),
            cli: env!("CARGO_PKG_VERSION"),
        },
        wall_time_seconds,
        outputs,
    };
    let mut manifest_bytes = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    manifest_bytes.push(b'\n');
    fs::write(dir.join("manifest.json"), manifest_bytes)?;
    Ok(dir)
}
