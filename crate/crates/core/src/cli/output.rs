use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use crate::error::Result;

/// A file produced by a run, held in memory until it is written.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn json<T: Serialize>(name: &str, value: &T) -> Result<Self> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        Ok(Self {
            name: name.to_string(),
            bytes,
        })
    }

    pub fn raw(name: &str, bytes: Vec<u8>) -> Self {
        Self {
            name: name.to_string(),
            bytes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Index of a run. Wall-clock time is kept out of it (see [`TIMING_FILE`]) so
/// that identical configurations give byte-identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: Option<RunConfig>,
    pub exit_code: i32,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn new(config: Option<RunConfig>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            exit_code: 0,
            files: Vec::new(),
        }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";
/// Wall-clock record, the one output that differs between identical runs.
pub const TIMING_FILE: &str = "timing.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes every artifact into `dir` (created if needed), then
/// `manifest.json` listing them with sizes and SHA-256 digests.
pub fn write_outputs(artifacts: &[Artifact], mut manifest: RunManifest, dir: &Path) -> Result<RunManifest> {
    fs::create_dir_all(dir)?;
    manifest.files.clear();
    for artifact in artifacts {
        fs::write(dir.join(&artifact.name), &artifact.bytes)?;
        manifest.files.push(FileEntry {
            path: artifact.name.clone(),
            bytes: artifact.bytes.len() as u64,
            sha256: sha256_hex(&artifact.bytes),
        });
    }
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    fs::write(dir.join(MANIFEST_FILE), bytes)?;
    Ok(manifest)
}

/// Files listed in a manifest whose current contents do not match.
pub fn stale_files(manifest: &RunManifest, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut stale = Vec::new();
    for entry in &manifest.files {
        let path = dir.join(&entry.path);
        match fs::read(&path) {
            Ok(bytes) if sha256_hex(&bytes) == entry.sha256 => {}
            _ => stale.push(path),
        }
    }
    Ok(stale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_results_give_empty_inventory() {
        let dir = tempfile::tempdir().unwrap();
        let written = write_outputs(&[], RunManifest::new(None), dir.path()).unwrap();
        assert!(written.files.is_empty());
        let back = RunManifest::read(dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(back, written);
    }

    #[test]
    fn hashes_match_contents() {
        let dir = tempfile::tempdir().unwrap();
        let arts = [Artifact::raw("a.csv", b"x,y\n1,2\n".to_vec())];
        let written = write_outputs(&arts, RunManifest::new(None), dir.path()).unwrap();
        assert_eq!(written.files[0].bytes, 8);
        assert!(stale_files(&written, dir.path()).unwrap().is_empty());
        fs::write(dir.path().join("a.csv"), b"changed").unwrap();
        assert_eq!(stale_files(&written, dir.path()).unwrap().len(), 1);
    }
}
