//! Run manifests: what a command wrote, with checksums for `--verify`.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::formats::{write_atomic, PgmScale};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputEntry {
    /// Relative to the output directory.
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    #[serde(default)]
    pub scenario: Option<String>,
    pub config_sha256: Option<String>,
    pub seed: Option<u64>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub outputs: Vec<OutputEntry>,
    /// Value-per-level of each PGM export.
    #[serde(default)]
    pub pgm_scales: BTreeMap<String, PgmScale>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

pub fn manifest_name(command: &str) -> String {
    format!("manifest-{command}.json")
}

/// Collects outputs of one command and writes them atomically.
#[derive(Debug)]
pub struct ManifestWriter<'a> {
    dir: &'a Path,
    manifest: RunManifest,
}

impl<'a> ManifestWriter<'a> {
    pub fn new(dir: &'a Path, command: &str, config_text: Option<&str>, seed: Option<u64>) -> Self {
        ManifestWriter {
            dir,
            manifest: RunManifest {
                tool: env!("CARGO_PKG_NAME").into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                scenario: None,
                config_sha256: config_text.map(|t| sha256_hex(t.as_bytes())),
                seed,
                started_unix_ms: now_ms(),
                finished_unix_ms: 0,
                outputs: Vec::new(),
                pgm_scales: BTreeMap::new(),
            },
        }
    }

    pub fn scenario(mut self, name: &str) -> Self {
        self.manifest.scenario = Some(name.into());
        self
    }

    pub fn write(&mut self, file: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.dir.join(file), bytes)?;
        self.manifest.outputs.retain(|o| o.file != file);
        self.manifest.outputs.push(OutputEntry {
            file: file.into(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_pgm(&mut self, file: &str, bytes: &[u8], scale: PgmScale) -> Result<()> {
        self.write(file, bytes)?;
        self.manifest.pgm_scales.insert(file.into(), scale);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, file: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(file, text.as_bytes())
    }

    pub fn finish(mut self) -> Result<RunManifest> {
        self.manifest.finished_unix_ms = now_ms();
        let text = serde_json::to_string_pretty(&self.manifest)? + "\n";
        write_atomic(&self.dir.join(manifest_name(&self.manifest.command)), text.as_bytes())?;
        Ok(self.manifest)
    }
}

pub fn read_manifest(dir: &Path, command: &str) -> Result<RunManifest> {
    let path = dir.join(manifest_name(command));
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Verification(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Verification(format!("{}: {e}", path.display())))
}

/// Rechecks every output listed in the command's manifest.
pub fn verify_outputs(dir: &Path, command: &str) -> Result<RunManifest> {
    let m = read_manifest(dir, command)?;
    let mut problems = Vec::new();
    for o in &m.outputs {
        match std::fs::read(dir.join(&o.file)) {
            Ok(bytes) if sha256_hex(&bytes) == o.sha256 => {}
            Ok(_) => problems.push(format!("{}: checksum mismatch", o.file)),
            Err(e) => problems.push(format!("{}: {e}", o.file)),
        }
    }
    if problems.is_empty() {
        Ok(m)
    } else {
        Err(Error::Verification(problems.join("; ")))
    }
}
