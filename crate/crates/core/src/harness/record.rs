//! Run records and the files they describe.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::table::Table;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the run directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    /// Git-style blob hash of the canonical JSON of `config`.
    pub input_hash: String,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: f64,
    pub metrics: BTreeMap<String, f64>,
    /// Non-numeric results (pairing policies, method names, notes).
    #[serde(default)]
    pub notes: BTreeMap<String, String>,
    pub files: Vec<ManifestEntry>,
    /// True when the wall-clock budget ran out before the run completed.
    #[serde(default)]
    pub interrupted: bool,
}

impl RunRecord {
    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).copied()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex(&Sha256::digest(data))
}

/// `sha256("blob <len>\0" ++ json)` of the config with `output_dir` removed,
/// so the hash depends on what is computed and not on where it is written.
pub fn input_hash(config: &ExperimentConfig) -> String {
    let mut c = config.clone();
    c.output_dir = None;
    let json = serde_json::to_vec(&c).expect("config serializes");
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", json.len()).as_bytes());
    h.update(&json);
    hex(&h.finalize())
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Wall-clock budget shared by the experiments.
#[derive(Clone, Copy, Debug, Default)]
pub struct Budget {
    deadline: Option<Instant>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Self { deadline: None }
    }

    pub fn seconds(secs: f64) -> Self {
        Self {
            deadline: Some(Instant::now() + std::time::Duration::from_secs_f64(secs.max(0.0))),
        }
    }

    pub fn deadline(&self) -> Option<Instant> {
        self.deadline
    }

    pub fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

/// Collects the outputs of one run and writes them under a directory.
#[derive(Debug)]
pub struct RunWriter {
    dir: PathBuf,
    files: Vec<ManifestEntry>,
    pub metrics: BTreeMap<String, f64>,
    pub notes: BTreeMap<String, String>,
    pub interrupted: bool,
    started: f64,
}

impl RunWriter {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            metrics: BTreeMap::new(),
            notes: BTreeMap::new(),
            interrupted: false,
            started: unix_now(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_bytes(&mut self, name: &str, data: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, data)?;
        let entry = ManifestEntry {
            path: name.to_string(),
            sha256: sha256_hex(data),
            bytes: data.len() as u64,
        };
        match self.files.iter_mut().find(|e| e.path == name) {
            Some(e) => *e = entry,
            None => self.files.push(entry),
        }
        Ok(())
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> Result<()> {
        self.write_bytes(name, table.to_csv().as_bytes())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
        self.write_bytes(name, text.as_bytes())
    }

    pub fn metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.to_string(), value);
    }

    pub fn note(&mut self, key: &str, value: impl Into<String>) {
        self.notes.insert(key.to_string(), value.into());
    }

    /// Writes `record.json` and returns the record.
    pub fn finish(mut self, config: &ExperimentConfig) -> Result<RunRecord> {
        let record = RunRecord {
            config: config.clone(),
            input_hash: input_hash(config),
            started: self.started,
            finished: unix_now(),
            metrics: std::mem::take(&mut self.metrics),
            notes: std::mem::take(&mut self.notes),
            files: std::mem::take(&mut self.files),
            interrupted: self.interrupted,
        };
        let text = serde_json::to_string_pretty(&record).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(self.dir.join("record.json"), text)?;
        Ok(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ExperimentKind;

    #[test]
    fn hash_ignores_output_dir_but_not_seed() {
        let a = ExperimentConfig::new("x", ExperimentKind::StaticsGrid, 1);
        let mut b = a.clone();
        b.output_dir = Some("elsewhere".into());
        assert_eq!(input_hash(&a), input_hash(&b));
        let c = ExperimentConfig::new("x", ExperimentKind::StaticsGrid, 2);
        assert_ne!(input_hash(&a), input_hash(&c));
        assert_eq!(input_hash(&a).len(), 64);
    }

    #[test]
    fn manifest_tracks_rewrites() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = RunWriter::create(dir.path()).unwrap();
        w.write_bytes("a.txt", b"one").unwrap();
        w.write_bytes("a.txt", b"two").unwrap();
        let rec = w.finish(&ExperimentConfig::new("x", ExperimentKind::StaticsGrid, 0)).unwrap();
        assert_eq!(rec.files.len(), 1);
        assert_eq!(rec.files[0].sha256, sha256_hex(b"two"));
        assert!(dir.path().join("record.json").exists());
    }

    #[test]
    fn zero_budget_is_expired() {
        assert!(Budget::seconds(0.0).expired());
        assert!(!Budget::unlimited().expired());
    }
}
