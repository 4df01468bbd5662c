//! On-disk schemas. Every file carries `schema_version`; readers reject
//! other versions.
//!
//! Corpus layout:
//!
//! ```text
//! manifest.json            CorpusManifest
//! episodes/000042.json     EpisodeMetadata
//! labels/task1.jsonl       MultiLabelLine, 14 classes
//! labels/task2.jsonl       MultiLabelLine, 301 classes
//! labels/task3_g{4,6,8}.jsonl  CellLabelLine
//! labels/vocab_task1.json, labels/vocab_task2.json
//! attributes.jsonl         AttributesLine
//! failures.json            FailureReport
//! histograms.json          Histograms
//! splits.json              SplitManifest (written by `split`)
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use cater_core::camera::CameraSchedule;
use cater_core::episode::Episode;
use cater_core::geometry::{Point2, Point3};
use cater_core::program::{ActionInstance, ActionProgram};
use cater_core::sim::{replay, DiagnosticAttributes, ObjectState};
use cater_core::world::{CameraMode, PlacedObject, Scene, SceneConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraRecord {
    pub mode: CameraMode,
    pub waypoints: Vec<Point3>,
}

/// Everything needed to regenerate an episode and its labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetadata {
    pub schema_version: u32,
    pub episode_id: u64,
    pub seed: u64,
    /// Index of the derived seed that succeeded.
    pub attempt: u32,
    pub config: SceneConfig,
    pub objects: Vec<PlacedObject>,
    pub actions: Vec<ActionInstance>,
    pub camera: CameraRecord,
    pub snitch_id: u32,
    /// Snitch plane position per frame.
    pub snitch_track: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<Vec<ObjectState>>>,
}

impl EpisodeMetadata {
    pub fn from_episode(ep: &Episode, attempt: u32, full_states: bool) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            episode_id: ep.id,
            seed: ep.seed,
            attempt,
            config: ep.program.config.clone(),
            objects: ep.program.scene.objects.clone(),
            actions: ep.program.actions.clone(),
            camera: CameraRecord {
                mode: ep.camera.mode,
                waypoints: ep.camera.waypoints.clone(),
            },
            snitch_id: ep.snitch_id(),
            snitch_track: ep.timeline.snitch_track.iter().map(|p| [p.x, p.y]).collect(),
            states: full_states.then(|| ep.timeline.frames.clone()),
        }
    }

    pub fn program(&self) -> ActionProgram {
        ActionProgram {
            scene: Scene {
                objects: self.objects.clone(),
            },
            actions: self.actions.clone(),
            config: self.config.clone(),
            seed: self.seed,
        }
    }

    /// Replays the stored program and checks it against the stored track.
    pub fn to_episode(&self) -> Result<Episode> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Validation(format!(
                "episode {}: schema version {} (expected {SCHEMA_VERSION})",
                self.episode_id, self.schema_version
            )));
        }
        let program = self.program();
        let camera = CameraSchedule::from_waypoints(self.camera.mode, self.camera.waypoints.clone(), &self.config)?;
        let timeline = replay(&program, &camera)?;
        let track: Vec<Point2> = self.snitch_track.iter().map(|p| Point2::new(p[0], p[1])).collect();
        if track != timeline.snitch_track {
            return Err(CliError::Validation(format!(
                "episode {}: stored snitch track disagrees with replay",
                self.episode_id
            )));
        }
        Ok(Episode {
            id: self.episode_id,
            seed: self.seed,
            program,
            camera,
            timeline,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeEntry {
    pub episode_id: u64,
    pub seed: u64,
    pub attempt: u32,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub schema_version: u32,
    pub generator: String,
    pub config: SceneConfig,
    pub n_episodes: u64,
    pub max_attempts: u32,
    pub full_states: bool,
    pub episodes: Vec<EpisodeEntry>,
    /// sha256 of every data file, keyed by path relative to the corpus root.
    pub files: BTreeMap<String, String>,
    /// sha256 over the sorted `path\thash\n` lines of `files`.
    pub content_hash: String,
}

/// Multi-hot label stored as its positive class indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiLabelLine {
    pub episode_id: u64,
    pub positives: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellLabelLine {
    pub episode_id: u64,
    pub grid: u32,
    pub cell: usize,
    pub row: u32,
    pub col: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributesLine {
    pub episode_id: u64,
    #[serde(flatten)]
    pub attributes: DiagnosticAttributes,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomicVocabEntry {
    pub index: usize,
    pub name: String,
    pub shape: String,
    pub action: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositeVocabEntry {
    pub index: usize,
    pub name: String,
    pub a: usize,
    pub relation: String,
    pub b: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureEntry {
    pub episode_id: u64,
    pub failed_seeds: Vec<u64>,
    pub accepted_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureReport {
    pub schema_version: u32,
    pub episodes_regenerated: usize,
    pub failures: Vec<FailureEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub schema_version: u32,
    pub seed: u64,
    pub test_fraction: f64,
    pub val_fraction: f64,
    /// Everything not in `test`; `val` and `final_train` partition it.
    pub train: Vec<u64>,
    pub val: Vec<u64>,
    pub final_train: Vec<u64>,
    pub test: Vec<u64>,
}

impl SplitManifest {
    pub fn subset(&self, name: &str) -> Option<&[u64]> {
        match name {
            "train" => Some(&self.train),
            "val" => Some(&self.val),
            "final_train" => Some(&self.final_train),
            "test" => Some(&self.test),
            _ => None,
        }
    }
}

/// One line of a predictions file: either a score vector or a single cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionLine {
    pub episode_id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<usize>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash over `path\thash\n` lines in path order.
pub fn content_hash(files: &BTreeMap<String, String>) -> String {
    let mut h = Sha256::new();
    for (path, hash) in files {
        h.update(path.as_bytes());
        h.update(b"\t");
        h.update(hash.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Writes `bytes` and returns their sha256.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<String> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_hex(bytes))
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("schema types serialize");
    out.push(b'\n');
    out
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<String> {
    write_bytes(path, &to_json_pretty(value))
}

pub fn to_jsonl<T: Serialize>(lines: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut out = Vec::new();
    for line in lines {
        serde_json::to_writer(&mut out, &line).expect("schema types serialize");
        out.push(b'\n');
    }
    out
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::json(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| CliError::json(path, e))?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, lines: impl IntoIterator<Item = T>) -> Result<String> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let bytes = to_jsonl(lines);
    let mut w = BufWriter::new(file);
    w.write_all(&bytes).map_err(|e| CliError::io(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn content_hash_depends_on_paths_and_hashes() {
        let mut a = BTreeMap::new();
        a.insert("x".to_string(), "1".to_string());
        a.insert("y".to_string(), "2".to_string());
        let mut b = BTreeMap::new();
        b.insert("y".to_string(), "2".to_string());
        b.insert("x".to_string(), "1".to_string());
        assert_eq!(content_hash(&a), content_hash(&b));
        b.insert("x".to_string(), "3".to_string());
        assert_ne!(content_hash(&a), content_hash(&b));
    }
}
