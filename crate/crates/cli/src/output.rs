//! Exit-code classification, staged output files and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    /// Usage or input problem (exit code 2).
    pub fn input(error: anyhow::Error) -> Self {
        Self { code: 2, error }
    }

    /// Computational failure (exit code 1).
    pub fn compute(error: anyhow::Error) -> Self {
        Self { code: 1, error }
    }
}

impl From<bubble_lens::Error> for Failure {
    fn from(e: bubble_lens::Error) -> Self {
        let code = if e.is_input_error() { 2 } else { 1 };
        Self { code, error: e.into() }
    }
}

#[macro_export]
macro_rules! bad_input {
    ($($t:tt)*) => { $crate::output::Failure::input(anyhow::anyhow!($($t)*)) };
}

pub fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| bad_input!("cannot read {}: {e}", path.display()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub input_hash: Option<String>,
    pub config: Value,
    /// Relative to the output directory; the manifest itself is last.
    pub outputs: Vec<String>,
}

/// Files held in memory until the whole command has succeeded.
pub struct Outputs {
    root: PathBuf,
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    pub fn new(root: &Path) -> Self {
        Self { root: root.to_path_buf(), files: Vec::new() }
    }

    pub fn add(&mut self, rel: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.files.push((rel.into(), bytes));
    }

    pub fn add_json<T: Serialize>(&mut self, rel: impl Into<PathBuf>, value: &T) -> Result<(), Failure> {
        self.add(rel, to_json(value)?);
        Ok(())
    }

    /// Writes every staged file plus `<command>_manifest.json`. On any
    /// write error the files already written are removed.
    pub fn commit(mut self, command: &str, input_hash: Option<String>, config: Value) -> Result<Vec<PathBuf>, Failure> {
        let manifest_rel = PathBuf::from(format!("{command}_manifest.json"));
        let mut outputs: Vec<String> = self.files.iter().map(|(p, _)| slash_path(p)).collect();
        outputs.push(slash_path(&manifest_rel));
        let manifest = RunManifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            input_hash: input_hash.map(|h| format!("sha256:{h}")),
            config,
            outputs,
        };
        let bytes = to_json(&manifest)?;
        self.files.push((manifest_rel, bytes));

        let mut written = Vec::new();
        for (rel, bytes) in &self.files {
            let path = self.root.join(rel);
            let result = path
                .parent()
                .map_or(Ok(()), fs::create_dir_all)
                .and_then(|_| fs::write(&path, bytes));
            if let Err(e) = result {
                for p in &written {
                    let _ = fs::remove_file(p);
                }
                return Err(Failure::compute(anyhow::anyhow!("cannot write {}: {e}", path.display())));
            }
            written.push(path);
        }
        Ok(written)
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, Failure> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Failure::compute(e.into()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn slash_path(p: &Path) -> String {
    p.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
}
