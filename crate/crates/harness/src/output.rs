//! Tables, assertions and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::Result;

/// 17 significant digits, round-trip exact.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &str, header: &[&str]) -> Self {
        Self { file: file.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn with_header(file: &str, header: Vec<String>) -> Self {
        Self { file: file.to_string(), header, rows: Vec::new() }
    }

    pub fn push(&mut self, values: &[f64]) {
        self.rows.push(values.iter().map(|v| fmt_f64(*v)).collect());
    }

    pub fn push_raw(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let io = |e: csv::Error| std::io::Error::other(e.to_string());
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.into_inner().map_err(|e| std::io::Error::other(e.to_string()).into())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Everything a subcommand produces.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub command: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub tolerances: Vec<(String, f64)>,
    pub tables: Vec<Table>,
    pub assertions: Vec<Assertion>,
    /// set when a stage failed; outputs are then non-authoritative
    pub failure: Option<String>,
}

impl Report {
    pub fn new(command: &str, config_text: &str, seed: Option<u64>) -> Self {
        Self { command: command.to_string(), config_hash: hex::encode(Sha256::digest(config_text.as_bytes())), seed, ..Self::default() }
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.assertions.push(Assertion { name: name.to_string(), passed, detail: detail.into() });
    }

    pub fn tolerance(&mut self, key: &str, value: f64) {
        self.tolerances.push((key.to_string(), value));
    }

    pub fn all_passed(&self) -> bool {
        self.failure.is_none() && self.assertions.iter().all(|a| a.passed)
    }

    pub fn table(&self, file: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.file == file)
    }

    pub fn assertion_lines(&self) -> Vec<String> {
        self.assertions.iter().map(|a| format!("[{}] {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.detail)).collect()
    }

    /// Writes every table plus `manifest.txt`; returns the written paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut inventory = Vec::new();
        for t in &self.tables {
            let bytes = t.to_csv()?;
            let path = dir.join(&t.file);
            fs::write(&path, &bytes)?;
            inventory.push((t.file.clone(), hex::encode(Sha256::digest(&bytes))));
            written.push(path);
        }
        let manifest = self.manifest(&inventory);
        let path = dir.join("manifest.txt");
        fs::write(&path, manifest)?;
        written.push(path);
        Ok(written)
    }

    fn manifest(&self, inventory: &[(String, String)]) -> String {
        let mut m = String::new();
        let _ = writeln!(m, "tool = plasmotrack");
        let _ = writeln!(m, "version = {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(m, "command = {}", self.command);
        let _ = writeln!(m, "config_sha256 = {}", self.config_hash);
        if let Some(s) = self.seed {
            let _ = writeln!(m, "seed = {s}");
        }
        let _ = writeln!(m, "status = {}", if self.failure.is_none() { "authoritative" } else { "non-authoritative" });
        if let Some(f) = &self.failure {
            let _ = writeln!(m, "failure = {}", f.replace('\n', " "));
        }
        for (k, v) in &self.tolerances {
            let _ = writeln!(m, "tolerance.{k} = {}", fmt_f64(*v));
        }
        for (f, h) in inventory {
            let _ = writeln!(m, "output.{f} = sha256:{h}");
        }
        for a in &self.assertions {
            let _ = writeln!(m, "assert.{} = {} ({})", a.name, if a.passed { "pass" } else { "fail" }, a.detail);
        }
        m
    }
}
