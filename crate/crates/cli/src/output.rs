//! CSV serialization and the reproducibility manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::RunConfig;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Shortest exact decimal form; parses back to the identical f64, and is
/// deterministic, so reruns are byte-identical.
pub fn fmt(v: f64) -> String {
    format!("{v}")
}

pub struct CsvFile {
    path: PathBuf,
    w: BufWriter<File>,
}

impl CsvFile {
    pub fn create(dir: &Path, name: &str, header: &str) -> Result<CsvFile, OutputError> {
        let path = dir.join(name);
        let io = |source| OutputError::Io {
            path: path.clone(),
            source,
        };
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        writeln!(w, "{header}").map_err(io)?;
        Ok(CsvFile { path, w })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<(), OutputError> {
        writeln!(self.w, "{}", fields.join(",")).map_err(|source| OutputError::Io {
            path: self.path.clone(),
            source,
        })
    }

    pub fn finish(mut self) -> Result<(), OutputError> {
        self.w.flush().map_err(|source| OutputError::Io {
            path: self.path.clone(),
            source,
        })
    }
}

/// SHA-256 of the resolved configuration content (not the file bytes, so
/// formatting-only edits don't change the hash).
pub fn config_hash(config: &RunConfig) -> String {
    let canonical = serde_json::to_string(config).expect("config serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Write run_manifest.json: everything needed to reproduce the output files.
/// The hash covers the configuration as loaded, before any CLI overrides.
pub fn write_manifest(
    dir: &Path,
    config_sha256: &str,
    command: &str,
    seed: u64,
    scenarios: usize,
    scheme: &str,
) -> Result<(), OutputError> {
    let path = dir.join("run_manifest.json");
    let manifest = serde_json::json!({
        "command": command,
        "base_seed": seed,
        "scenarios": scenarios,
        "scheme": scheme,
        "config_sha256": config_sha256,
        "version": env!("CARGO_PKG_VERSION"),
    });
    std::fs::write(&path, serde_json::to_string_pretty(&manifest).unwrap() + "\n").map_err(
        |source| OutputError::Io {
            path: path.clone(),
            source,
        },
    )
}
