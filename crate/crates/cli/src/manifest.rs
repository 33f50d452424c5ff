use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub name: String,
    pub status: String,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub kind: String,
    pub config_hash: String,
    pub code_version: String,
    pub precision_bits: Vec<u32>,
    pub status: String,
    pub wall_time_s: f64,
    pub steps: Vec<StepRecord>,
    pub files: Vec<FileRecord>,
}

/// Writes every artifact of a run through one place, atomically, and
/// records its hash.
#[derive(Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    files: Vec<FileRecord>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(ArtifactWriter {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, rel: &str, body: &[u8]) -> io::Result<()> {
        write_atomic(&self.dir.join(rel), body)?;
        self.files.push(FileRecord {
            path: rel.to_string(),
            sha256: sha256_hex(body),
            bytes: body.len() as u64,
        });
        Ok(())
    }

    pub fn finish(self, mut manifest: RunManifest) -> io::Result<PathBuf> {
        manifest.files = self.files;
        let body = serde_json::to_vec_pretty(&manifest).map_err(io::Error::other)?;
        let path = self.dir.join(MANIFEST_NAME);
        write_atomic(&path, &body)?;
        Ok(path)
    }
}

/// Write to a sibling temporary file, then rename over the target.
pub fn write_atomic(path: &Path, body: &[u8]) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(body)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("missing file: {0}")]
    Missing(String),
    #[error("hash mismatch: {0}")]
    Mismatch(String),
    #[error("unreadable manifest: {0}")]
    Manifest(String),
}

/// Recomputes every listed content hash.
pub fn verify(manifest_path: &Path) -> Result<usize, VerifyError> {
    let text = fs::read(manifest_path).map_err(|_| VerifyError::Missing(manifest_path.display().to_string()))?;
    let manifest: RunManifest = serde_json::from_slice(&text).map_err(|e| VerifyError::Manifest(e.to_string()))?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    for f in &manifest.files {
        let body = fs::read(dir.join(&f.path)).map_err(|_| VerifyError::Missing(f.path.clone()))?;
        if sha256_hex(&body) != f.sha256 {
            return Err(VerifyError::Mismatch(f.path.clone()));
        }
    }
    Ok(manifest.files.len())
}
