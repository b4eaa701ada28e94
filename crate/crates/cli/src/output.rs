//! Result payloads and the run manifest.
//!
//! Payloads are rendered to bytes before anything touches the disk, so a
//! command either writes all of its files or none of them. Payloads carry no
//! timestamps; those live only in the manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Bumped whenever a CSV header or JSON payload layout changes.
pub const SCHEMA_VERSION: u32 = 1;

pub const PROBE_HEADER: [&str; 17] = [
    "family",
    "alpha1",
    "alpha2",
    "kappa",
    "J",
    "beta",
    "L",
    "N",
    "eps",
    "side_obs",
    "m_plus",
    "se_plus",
    "m_minus",
    "se_minus",
    "gap",
    "significance",
    "seed_base",
];

/// Probe columns followed by `image` and `halving`.
pub const SCAN_EXTRA_HEADER: [&str; 2] = ["image", "halving"];

pub const ANNULUS_HEADER: [&str; 8] = [
    "family",
    "alpha1",
    "alpha2",
    "L",
    "target_C",
    "N",
    "bound_C",
    "asymptotic_exponent",
];

pub const ENERGY_BOUND_HEADER: [&str; 6] = ["family", "alpha1", "alpha2", "L", "N", "bound_C"];

pub const MAGNETIZE_HEADER: [&str; 14] = [
    "family",
    "alpha1",
    "alpha2",
    "kappa",
    "J",
    "beta",
    "L",
    "core_half_width",
    "exterior",
    "mean",
    "std_error",
    "tau_int",
    "n_samples",
    "seed",
];

/// A named file payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn json<T: Serialize>(name: &str, value: &T) -> Result<Self, CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(CliError::runtime)?;
        bytes.push(b'\n');
        Ok(Self {
            name: name.to_owned(),
            bytes,
        })
    }

    pub fn csv(name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<Self, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(CliError::runtime)?;
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            w.write_record(row).map_err(CliError::runtime)?;
        }
        let bytes = w.into_inner().map_err(CliError::runtime)?;
        Ok(Self {
            name: name.to_owned(),
            bytes,
        })
    }
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct FileEntry {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct RunManifest {
    pub schema_version: u32,
    pub artifact_version: String,
    pub command: String,
    pub config_sha256: String,
    pub seeds: Vec<u64>,
    pub started_at: String,
    pub finished_at: String,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Writes every artifact into `dir`, then `manifest.json` listing them.
pub fn write_all(
    dir: &Path,
    artifacts: &[Artifact],
    mut manifest: RunManifest,
) -> Result<RunManifest, CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_owned(),
        source,
    })?;
    manifest.files.clear();
    for a in artifacts {
        let path = dir.join(&a.name);
        write(&path, &a.bytes)?;
        manifest.files.push(FileEntry {
            path,
            sha256: sha256_hex(&a.bytes),
        });
    }
    manifest.finished_at = timestamp();
    let m = Artifact::json("manifest.json", &manifest)?;
    write(&dir.join(&m.name), &m.bytes)?;
    Ok(manifest)
}

/// `Display` formatting, which round-trips and is platform independent.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let a = Artifact::csv("t.csv", &["a", "b"], &[vec!["1".into(), num(0.5)]]).unwrap();
        assert_eq!(a.bytes, b"a,b\n1,0.5\n");
    }

    #[test]
    fn digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn writes_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = RunManifest {
            schema_version: SCHEMA_VERSION,
            artifact_version: "0".into(),
            command: "test".into(),
            config_sha256: String::new(),
            seeds: vec![1],
            started_at: timestamp(),
            finished_at: String::new(),
            files: vec![],
        };
        let a = Artifact::json("x.json", &[1, 2]).unwrap();
        let m = write_all(dir.path(), &[a], manifest).unwrap();
        assert!(m.files.iter().all(|f| f.path.exists()));
        assert!(dir.path().join("manifest.json").exists());
    }
}
