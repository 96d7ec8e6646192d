//! Run manifests: what a command read, wrote and counted.
//!
//! Manifests carry no timestamps, so two identical runs produce byte-identical
//! files under the same name.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cultura_core::repository::write_atomic;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Default, Serialize)]
pub struct Manifest {
    pub command: String,
    pub args: Vec<String>,
    pub config_sha256: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub counts: BTreeMap<String, Value>,
}

impl Manifest {
    pub fn new(command: &str, args: Vec<String>, config_sha256: &str) -> Self {
        Manifest {
            command: command.into(),
            args,
            config_sha256: config_sha256.into(),
            ..Default::default()
        }
    }

    /// Records the digest of `path` if it exists.
    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        if let Some(h) = file_sha256(path)? {
            self.inputs.insert(path.display().to_string(), h);
        }
        Ok(())
    }

    /// Records a file or, for a directory, every file beneath it.
    pub fn output(&mut self, path: &Path) -> Result<(), CliError> {
        if path.is_dir() {
            for f in walk(path)? {
                self.output(&f)?;
            }
            return Ok(());
        }
        if let Some(h) = file_sha256(path)? {
            self.outputs.insert(path.display().to_string(), h);
        }
        Ok(())
    }

    pub fn count(&mut self, key: &str, value: impl Into<Value>) {
        self.counts.insert(key.into(), value.into());
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// Writes `<dir>/<command>-<digest12>.json` and returns its path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let body = self.to_json();
        let digest = hex::encode(Sha256::digest(body.as_bytes()));
        let path = dir.join(format!("{}-{}.json", self.command, &digest[..12]));
        write_atomic(&path, body.as_bytes())?;
        Ok(path)
    }
}

pub fn file_sha256(path: &Path) -> Result<Option<String>, CliError> {
    match std::fs::read(path) {
        Ok(bytes) => Ok(Some(hex::encode(Sha256::digest(&bytes)))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(CliError::io(path, e)),
    }
}

fn walk(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).map_err(|e| CliError::io(&d, e))? {
            let p = entry.map_err(|e| CliError::io(&d, e))?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}
