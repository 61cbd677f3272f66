//! Content-hashed manifests. Each stage records the hash of the manifest it
//! was derived from, so a rerun upstream marks downstream artifacts stale.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use myostrain::io::write_atomic;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: String,
    pub tool: String,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Hash of the manifest this artifact was derived from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_sha256: Option<String>,
    pub parameters: serde_json::Value,
    /// Relative path to sha256 of every file written by the stage.
    pub files: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

impl Manifest {
    pub fn new(kind: &str, seed: Option<u64>, parent_sha256: Option<String>, parameters: serde_json::Value) -> Self {
        Self {
            kind: kind.into(),
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            parent_sha256,
            parameters,
            files: BTreeMap::new(),
        }
    }

    /// Writes `bytes` under `root` and records its hash.
    pub fn put(&mut self, root: &Path, relative: &str, bytes: &[u8]) -> CliResult<()> {
        write_atomic(&root.join(relative), bytes)?;
        self.files.insert(relative.into(), sha256_hex(bytes));
        Ok(())
    }

    /// Records a file some other writer already produced.
    pub fn record(&mut self, root: &Path, relative: &str) -> CliResult<()> {
        let hash = hash_file(&root.join(relative))?;
        self.files.insert(relative.into(), hash);
        Ok(())
    }

    /// Serializes the manifest into `root` and returns its hash.
    pub fn write(&self, root: &Path) -> CliResult<String> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("manifest serializes");
        bytes.push(b'\n');
        write_atomic(&root.join(MANIFEST_FILE), &bytes)?;
        Ok(sha256_hex(&bytes))
    }

    /// Reads the manifest in `root` with its own hash.
    pub fn read(root: &Path) -> CliResult<(Self, String)> {
        let path = root.join(MANIFEST_FILE);
        let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        let manifest: Manifest = serde_json::from_slice(&bytes)
            .map_err(|e| myostrain::Error::format(path.display().to_string(), e.to_string()))?;
        Ok((manifest, sha256_hex(&bytes)))
    }

    /// Checks every recorded file against its hash.
    pub fn verify_files(&self, root: &Path) -> CliResult<()> {
        for (relative, expected) in &self.files {
            let path: PathBuf = root.join(relative);
            if !path.is_file() {
                return Err(CliError::Stale(format!("{} is listed in the manifest but missing", path.display())));
            }
            if &hash_file(&path)? != expected {
                return Err(CliError::Stale(format!("{} does not match its manifest hash", path.display())));
            }
        }
        Ok(())
    }

    pub fn expect_kind(&self, kind: &str, root: &Path) -> CliResult<()> {
        if self.kind != kind {
            return Err(myostrain::Error::format(
                root.join(MANIFEST_FILE).display().to_string(),
                format!("expected a {kind} manifest, found `{}`", self.kind),
            )
            .into());
        }
        Ok(())
    }

    /// Fails with a staleness error unless this artifact derives from `parent`.
    pub fn expect_parent(&self, parent: &str, root: &Path) -> CliResult<()> {
        if self.parent_sha256.as_deref() != Some(parent) {
            return Err(CliError::Stale(format!(
                "{} was produced from different inputs; rerun this stage",
                root.display()
            )));
        }
        Ok(())
    }
}
