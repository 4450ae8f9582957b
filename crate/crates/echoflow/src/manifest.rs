//! Run manifests.
//!
//! Every command writes `<command>.manifest.json` next to its outputs. The
//! wall-clock time lives only here, so result files stay byte-identical
//! across reruns. `parent_config_sha256` links a run to the run that produced
//! its input.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::formats::{read_json, write_json};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_sha256: String,
    pub parent_config_sha256: Option<String>,
    pub seed: u64,
    pub outputs: Vec<OutputEntry>,
    pub created_unix: u64,
}

pub fn manifest_path(out_dir: &Path, command: &str) -> std::path::PathBuf {
    out_dir.join(format!("{command}.manifest.json"))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

/// Config hash of the run that wrote `input`, found through the manifests
/// in the input's directory.
pub fn parent_of(input: &Path) -> Option<String> {
    let name = input.file_name()?.to_str()?;
    let dir = input.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut found: Vec<Manifest> = fs::read_dir(dir)
        .ok()?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.to_str().is_some_and(|s| s.ends_with(".manifest.json")))
        .filter_map(|p| read_json::<Manifest>(&p).ok())
        .filter(|m| m.outputs.iter().any(|o| o.file == name))
        .collect();
    found.sort_by_key(|a| a.created_unix);
    found.pop().map(|m| m.config_sha256)
}

/// Writes the manifest for files already present in `out_dir`.
pub fn write_manifest(
    out_dir: &Path,
    command: &str,
    config_sha256: String,
    parent: Option<String>,
    seed: u64,
    files: &[&str],
) -> Result<Manifest> {
    let outputs = files
        .iter()
        .map(|f| {
            Ok(OutputEntry {
                file: f.to_string(),
                sha256: file_sha256(&out_dir.join(f))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let created_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let m = Manifest {
        command: command.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256,
        parent_config_sha256: parent,
        seed,
        outputs,
        created_unix,
    };
    write_json(&manifest_path(out_dir, command), &m)?;
    Ok(m)
}
