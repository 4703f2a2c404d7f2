//! Artifact formatting: JSON envelopes and CSV tables stamped with the
//! config hash and library version.

use std::path::Path;

use morbit::num::{format_f64, Num};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::CliError;

/// Provenance stamped on every artifact.
pub struct Stamp {
    pub sha256: String,
    pub version: &'static str,
    pub kind: String,
    pub seed: u64,
    pub arithmetic: String,
}

impl Stamp {
    pub fn new(bytes: &[u8], cfg: &ExperimentConfig) -> Stamp {
        let digest = Sha256::digest(bytes);
        Stamp {
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            version: morbit::VERSION,
            kind: cfg.kind.clone(),
            seed: cfg.seed,
            arithmetic: cfg.arithmetic.to_string(),
        }
    }
}

/// Files produced by one run, written in order once the run finishes.
#[derive(Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn json<T: Serialize>(&mut self, stamp: &Stamp, name: String, status: &str, result: &T) -> Result<(), CliError> {
        let doc = json!({
            "morbit_version": stamp.version,
            "config_sha256": stamp.sha256,
            "kind": stamp.kind,
            "seed": stamp.seed,
            "arithmetic": stamp.arithmetic,
            "status": status,
            "result": serde_json::to_value(result)?,
        });
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        self.files.push((name, text.into_bytes()));
        Ok(())
    }

    pub fn csv(&mut self, stamp: &Stamp, name: String, table: &Csv) {
        let mut text = format!("# morbit {} config_sha256={}\n", stamp.version, stamp.sha256);
        text.push_str(&table.header.join(","));
        text.push('\n');
        for row in &table.rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.files.push((name, text.into_bytes()));
    }

    /// Raw bytes; the stamp goes into a `.json` sidecar.
    pub fn raw(&mut self, stamp: &Stamp, name: String, bytes: Vec<u8>) -> Result<(), CliError> {
        let meta = json!({ "file": name, "bytes": bytes.len(), "encoding": "one symbol per byte" });
        self.json(stamp, format!("{name}.json"), "ok", &meta)?;
        self.files.push((name, bytes));
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<String>, CliError> {
        std::fs::create_dir_all(dir)?;
        let mut names = Vec::new();
        for (name, bytes) in &self.files {
            std::fs::write(dir.join(name), bytes)?;
            names.push(name.clone());
        }
        Ok(names)
    }
}

/// A CSV table with a header row.
pub struct Csv {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: Vec<&'static str>) -> Csv {
        Csv { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// A value as `(17 significant digits, exact "p/q" or empty)`.
pub fn cells(v: &Num) -> [String; 2] {
    [format_f64(v.to_f64()), v.as_exact().map(|r| r.to_string()).unwrap_or_default()]
}

pub fn error_value(e: &CliError) -> Value {
    json!({ "error": e.to_string() })
}
