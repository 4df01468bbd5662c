use std::fs;

use cater::corpus::{self, GenerateOptions};
use cater::format::{EpisodeMetadata, PredictionLine};
use cater::tracks::{export_tracks, DEFAULT_BOX};
use cater::CliError;
use cater_core::episode::Episode;
use cater_core::eval::{Prediction, Task, TruthLabel};
use cater_core::world::{CameraMode, SceneConfig};

fn small_corpus(config: SceneConfig, n: u64, full_states: bool) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let opts = GenerateOptions {
        config,
        n_episodes: n,
        max_attempts: 50,
        full_states,
        threads: Some(2),
    };
    corpus::generate(&opts, dir.path()).unwrap();
    dir
}

#[test]
fn metadata_regenerates_the_episode() {
    let config = SceneConfig { seed: 4, ..SceneConfig::localization() };
    let dir = small_corpus(config.clone(), 12, true);
    for id in 0..12 {
        let meta = corpus::load_metadata(dir.path(), id).unwrap();
        let replayed = meta.to_episode().unwrap();
        let fresh = Episode::generate(id, &meta.config, meta.seed).unwrap();
        assert_eq!(replayed, fresh);
        assert_eq!(meta.states.as_ref().unwrap(), &fresh.timeline.frames);
        // byte-identical file from (seed, config) alone
        let again = EpisodeMetadata::from_episode(&fresh, meta.attempt, true);
        let mut bytes = serde_json::to_vec(&again).unwrap();
        bytes.push(b'\n');
        assert_eq!(fs::read(dir.path().join(corpus::episode_file(id))).unwrap(), bytes);
    }
}

#[test]
fn tampered_metadata_is_rejected() {
    let dir = small_corpus(SceneConfig::default(), 2, false);
    let mut meta = corpus::load_metadata(dir.path(), 0).unwrap();
    meta.snitch_track[299][0] += 0.5;
    assert!(matches!(meta.to_episode(), Err(CliError::Validation(_))));
    let mut meta = corpus::load_metadata(dir.path(), 0).unwrap();
    meta.schema_version = 99;
    assert!(matches!(meta.to_episode(), Err(CliError::Validation(_))));
    let mut meta = corpus::load_metadata(dir.path(), 0).unwrap();
    meta.actions[0].interval.end = meta.actions[0].interval.start + 1;
    let err = meta.to_episode().unwrap_err();
    assert!(matches!(err, CliError::Core(_)));
    assert_eq!(err.exit_code(), 65);
}

#[test]
fn relabel_reproduces_label_files() {
    let dir = small_corpus(SceneConfig::default(), 20, false);
    let before = fs::read(dir.path().join("labels/task2.jsonl")).unwrap();
    let r = corpus::relabel(dir.path(), None).unwrap();
    assert_eq!(r.previous_hash, r.content_hash);
    assert_eq!(fs::read(dir.path().join("labels/task2.jsonl")).unwrap(), before);
    let rows = corpus::load_rows(dir.path()).unwrap();
    assert_eq!(rows.len(), 20);
}

#[test]
fn truth_files_match_episode_labels() {
    let dir = small_corpus(SceneConfig::localization(), 15, false);
    let t1 = corpus::load_truth(dir.path(), Task::Atomic).unwrap();
    let t3 = corpus::load_truth(dir.path(), Task::Localization { grid: 8 }).unwrap();
    // grids without a stored file are quantized from the tracks
    let t5 = corpus::load_truth(dir.path(), Task::Localization { grid: 5 }).unwrap();
    for id in 0..15 {
        let ep = corpus::load_episode(dir.path(), id).unwrap();
        let labels = ep.labels(8).unwrap();
        assert_eq!(t1.labels[&id], TruthLabel::MultiHot(labels.task1));
        assert_eq!(t3.labels[&id], TruthLabel::Cell(labels.task3));
        assert_eq!(t5.labels[&id], TruthLabel::Cell(ep.labels(5).unwrap().task3));
    }
    let attrs = corpus::load_attributes(dir.path()).unwrap();
    assert_eq!(attrs.len(), 15);
}

#[test]
fn moving_camera_corpus_shares_first_pose() {
    let config = SceneConfig {
        camera_mode: CameraMode::Moving,
        ..SceneConfig::default()
    };
    let dir = small_corpus(config, 10, false);
    let first: Vec<_> = (0..10)
        .map(|id| corpus::load_episode(dir.path(), id).unwrap().camera.poses[0])
        .collect();
    assert!(first.iter().all(|p| *p == first[0]));
}

#[test]
fn predictions_parsing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.jsonl");
    let lines = [
        PredictionLine { episode_id: 3, scores: Some(vec![0.5; 36]), cell: None },
        PredictionLine { episode_id: 1, scores: None, cell: Some(4) },
    ];
    fs::write(&path, cater::format::to_jsonl(&lines)).unwrap();
    let p = corpus::load_predictions(&path, Task::Localization { grid: 6 }).unwrap();
    assert_eq!(p.predictions[&1], Prediction::Cell(4));
    assert!(corpus::restrict(&p, Some(&[1, 2])).is_err());
    assert_eq!(corpus::restrict(&p, Some(&[3])).unwrap().predictions.len(), 1);

    fs::write(&path, "{\"episode_id\":1,\"cell\":2}\n{\"episode_id\":1,\"cell\":3}\n").unwrap();
    assert!(matches!(corpus::load_predictions(&path, Task::Atomic), Err(CliError::Validation(_))));
    fs::write(&path, "{\"episode_id\":1,\"cell\":2,\"scores\":[1.0]}\n").unwrap();
    assert!(matches!(corpus::load_predictions(&path, Task::Atomic), Err(CliError::Validation(_))));
    fs::write(&path, "not json\n").unwrap();
    assert!(matches!(corpus::load_predictions(&path, Task::Atomic), Err(CliError::Json { .. })));
    let missing = corpus::load_predictions(&dir.path().join("none.jsonl"), Task::Atomic).unwrap_err();
    assert_eq!(missing.exit_code(), 74);
}

#[test]
fn tracks_put_origin_at_image_center() {
    let dir = small_corpus(SceneConfig::default(), 1, false);
    let meta = corpus::load_metadata(dir.path(), 0).unwrap();
    let snitch = meta.snitch_id as usize;
    let mut ep = meta.to_episode().unwrap();
    for frame in &mut ep.timeline.frames {
        frame[snitch].position.x = 0.0;
        frame[snitch].position.y = 0.0;
        frame[snitch].position.z = 0.0;
    }
    let t = export_tracks(&ep, DEFAULT_BOX).unwrap();
    let [u, v] = t.frames[0].snitch_px.unwrap();
    assert!((u - 160.0).abs() < 1e-9 && (v - 120.0).abs() < 1e-9);
    let b = t.init_box.unwrap();
    assert_eq!((b[2] - b[0], b[3] - b[1]), (24.0, 24.0));
    assert!(t.frames.iter().all(|f| f.in_view && !f.behind_camera));
    assert_eq!(t.frames.len(), 300);
    assert_eq!(t.frames[0].objects.len(), ep.program.scene.len());
}
