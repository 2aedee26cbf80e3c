//! Atomic file writes and content hashing.

use crate::IoError;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Read;
use std::path::Path;

/// Writes `bytes` to `path` via a temp file in the same directory followed
/// by a rename, so readers never observe a partially written file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let dir = dir.unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| IoError::io(dir, e))?;
    std::io::Write::write_all(&mut tmp, bytes).map_err(|e| IoError::io(path, e))?;
    tmp.persist(path)
        .map_err(|e| IoError::io(path, e.error))?;
    Ok(())
}

/// Lower-case hex SHA-256 of a byte slice.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        use std::fmt::Write;
        write!(out, "{b:02x}").expect("writing to a String cannot fail");
    }
    out
}

/// SHA-256 of a file's contents, streamed.
pub fn sha256_file(path: &Path) -> Result<String, IoError> {
    let mut file = std::fs::File::open(path).map_err(|e| IoError::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf).map_err(|e| IoError::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        use std::fmt::Write;
        write!(out, "{b:02x}").expect("writing to a String cannot fail");
    }
    Ok(out)
}

/// Reproducibility record written alongside every artifact-producing run:
/// enough to re-run the exact command and verify the config was unchanged.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct RunManifest {
    /// Subcommand or operation name.
    pub command: String,
    /// SHA-256 of the resolved config JSON, if a config was used.
    pub config_sha256: Option<String>,
    pub seed: u64,
    pub threads: usize,
    pub deterministic: bool,
    /// Crate version compiled into the binary.
    pub version: String,
    /// Output files produced by this run, relative to the manifest.
    pub outputs: Vec<String>,
}

impl RunManifest {
    /// Serializes pretty JSON and writes it atomically next to the outputs.
    pub fn write(&self, path: &Path) -> Result<(), IoError> {
        let json = serde_json::to_string_pretty(self).map_err(|e| IoError::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        atomic_write(path, json.as_bytes())
    }
}
