//! Corpus generation, label derivation and loading.

use std::collections::BTreeMap;
use std::path::Path;

use cater_core::episode::{Episode, LABEL_GRIDS};
use cater_core::eval::{GroundTruth, Prediction, PredictionSet, Task, TruthLabel};
use cater_core::geometry::Point2;
use cater_core::labels::{
    atomic_vocab, composite_vocab, derive_task1, derive_task2, derive_task3, quantize_cell, MultiHot, N_ATOMIC,
    N_COMPOSITE,
};
use cater_core::world::SceneConfig;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::format::*;

pub const MANIFEST: &str = "manifest.json";
pub const SPLITS: &str = "splits.json";
pub const SPLIT_HISTOGRAMS: &str = "split_histograms.json";

pub fn episode_file(id: u64) -> String {
    format!("episodes/{id:06}.json")
}

pub fn task3_file(grid: u32) -> String {
    format!("labels/task3_g{grid}.jsonl")
}

#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub config: SceneConfig,
    pub n_episodes: u64,
    pub max_attempts: u32,
    pub full_states: bool,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

/// Derived, per-episode rows shared by `generate` and `labels`.
#[derive(Debug, Clone)]
pub struct DerivedRow {
    pub task1: MultiLabelLine,
    pub task2: MultiLabelLine,
    pub task3: Vec<CellLabelLine>,
    pub attributes: AttributesLine,
}

impl DerivedRow {
    pub fn of(ep: &Episode) -> Result<Self> {
        let h = ep.program.config.plane_half_extent;
        let last = *ep.timeline.snitch_track.last().expect("non-empty timeline");
        let task3 = LABEL_GRIDS
            .iter()
            .map(|&grid| {
                let cell = derive_task3(&ep.timeline, grid, h)?;
                let rc = quantize_cell(last, grid, h)?;
                Ok(CellLabelLine {
                    episode_id: ep.id,
                    grid,
                    cell,
                    row: rc.row,
                    col: rc.col,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            task1: MultiLabelLine {
                episode_id: ep.id,
                positives: derive_task1(&ep.program).positives(),
            },
            task2: MultiLabelLine {
                episode_id: ep.id,
                positives: derive_task2(&ep.program).positives(),
            },
            task3,
            attributes: AttributesLine {
                episode_id: ep.id,
                attributes: ep.attributes(),
            },
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelHistogram {
    pub n_episodes: usize,
    pub task1: Vec<usize>,
    pub task2: Vec<usize>,
    pub task3: BTreeMap<String, Vec<usize>>,
    pub n_objects: BTreeMap<u32, usize>,
    pub actions_per_episode: BTreeMap<usize, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histograms {
    pub schema_version: u32,
    pub subsets: BTreeMap<String, LabelHistogram>,
}

/// Per-class label counts over `rows`.
pub fn histogram<'a>(rows: impl IntoIterator<Item = &'a DerivedRow>, actions: &BTreeMap<u64, usize>) -> LabelHistogram {
    let mut h = LabelHistogram {
        task1: vec![0; N_ATOMIC],
        task2: vec![0; N_COMPOSITE],
        ..Default::default()
    };
    for r in rows {
        h.n_episodes += 1;
        for &c in &r.task1.positives {
            h.task1[c] += 1;
        }
        for &c in &r.task2.positives {
            h.task2[c] += 1;
        }
        for l in &r.task3 {
            let counts = h
                .task3
                .entry(format!("g{}", l.grid))
                .or_insert_with(|| vec![0; (l.grid * l.grid) as usize]);
            counts[l.cell] += 1;
        }
        *h.n_objects.entry(r.attributes.attributes.n_objects).or_default() += 1;
        if let Some(n) = actions.get(&r.task1.episode_id) {
            *h.actions_per_episode.entry(*n).or_default() += 1;
        }
    }
    h
}

fn vocab_files() -> (Vec<AtomicVocabEntry>, Vec<CompositeVocabEntry>) {
    let atomic = atomic_vocab()
        .iter()
        .enumerate()
        .map(|(index, c)| AtomicVocabEntry {
            index,
            name: c.name(),
            shape: c.shape.name().into(),
            action: c.action.name().into(),
        })
        .collect();
    let composite = composite_vocab()
        .iter()
        .enumerate()
        .map(|(index, c)| CompositeVocabEntry {
            index,
            name: c.name(),
            a: c.a as usize,
            relation: c.relation.name().into(),
            b: c.b as usize,
        })
        .collect();
    (atomic, composite)
}

/// Writes every file derived from the episodes; returns their hashes.
fn write_derived(root: &Path, rows: &[DerivedRow], actions: &BTreeMap<u64, usize>) -> Result<BTreeMap<String, String>> {
    create_dir(&root.join("labels"))?;
    let mut files = BTreeMap::new();
    let mut put = |name: String, hash: String| {
        files.insert(name, hash);
    };
    put("labels/task1.jsonl".into(), write_jsonl(&root.join("labels/task1.jsonl"), rows.iter().map(|r| &r.task1))?);
    put("labels/task2.jsonl".into(), write_jsonl(&root.join("labels/task2.jsonl"), rows.iter().map(|r| &r.task2))?);
    for (k, grid) in LABEL_GRIDS.iter().enumerate() {
        let name = task3_file(*grid);
        put(name.clone(), write_jsonl(&root.join(&name), rows.iter().map(|r| &r.task3[k]))?);
    }
    let (atomic, composite) = vocab_files();
    put("labels/vocab_task1.json".into(), write_json(&root.join("labels/vocab_task1.json"), &atomic)?);
    put("labels/vocab_task2.json".into(), write_json(&root.join("labels/vocab_task2.json"), &composite)?);
    put("attributes.jsonl".into(), write_jsonl(&root.join("attributes.jsonl"), rows.iter().map(|r| &r.attributes))?);
    let mut subsets = BTreeMap::new();
    subsets.insert("all".to_string(), histogram(rows, actions));
    let histograms = Histograms {
        schema_version: SCHEMA_VERSION,
        subsets,
    };
    put("histograms.json".into(), write_json(&root.join("histograms.json"), &histograms)?);
    Ok(files)
}

fn with_threads<T: Send>(threads: Option<usize>, work: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(work()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
            Ok(pool.install(work))
        }
    }
}

struct Produced {
    entry: EpisodeEntry,
    hash: String,
    row: DerivedRow,
    n_actions: usize,
    failure: Option<FailureEntry>,
}

/// Generates `n_episodes` episodes under `root` and writes the manifest.
pub fn generate(opts: &GenerateOptions, root: &Path) -> Result<CorpusManifest> {
    opts.config.validate()?;
    if opts.max_attempts == 0 {
        return Err(CliError::Validation("max_attempts must be positive".into()));
    }
    create_dir(&root.join("episodes"))?;
    let produce = |index: u64| -> Result<Produced> {
        let (ep, attempts) = Episode::generate_indexed(index, &opts.config, opts.max_attempts)?;
        let meta = EpisodeMetadata::from_episode(&ep, attempts.attempt, opts.full_states);
        let mut bytes = serde_json::to_vec(&meta).expect("schema types serialize");
        bytes.push(b'\n');
        let file = episode_file(index);
        let hash = write_bytes(&root.join(&file), &bytes)?;
        Ok(Produced {
            entry: EpisodeEntry {
                episode_id: index,
                seed: ep.seed,
                attempt: attempts.attempt,
                file,
            },
            hash,
            row: DerivedRow::of(&ep)?,
            n_actions: ep.program.actions.len(),
            failure: (!attempts.failed_seeds.is_empty()).then(|| FailureEntry {
                episode_id: index,
                failed_seeds: attempts.failed_seeds.clone(),
                accepted_seed: ep.seed,
            }),
        })
    };
    let produced = with_threads(opts.threads, || {
        (0..opts.n_episodes)
            .into_par_iter()
            .map(produce)
            .collect::<Result<Vec<_>>>()
    })??;

    let mut files: BTreeMap<String, String> = produced.iter().map(|p| (p.entry.file.clone(), p.hash.clone())).collect();
    let rows: Vec<DerivedRow> = produced.iter().map(|p| p.row.clone()).collect();
    let actions = produced.iter().map(|p| (p.entry.episode_id, p.n_actions)).collect();
    files.extend(write_derived(root, &rows, &actions)?);
    let failures: Vec<FailureEntry> = produced.iter().filter_map(|p| p.failure.clone()).collect();
    let report = FailureReport {
        schema_version: SCHEMA_VERSION,
        episodes_regenerated: failures.len(),
        failures,
    };
    files.insert("failures.json".into(), write_json(&root.join("failures.json"), &report)?);

    let manifest = CorpusManifest {
        schema_version: SCHEMA_VERSION,
        generator: format!("cater {}", env!("CARGO_PKG_VERSION")),
        config: opts.config.clone(),
        n_episodes: opts.n_episodes,
        max_attempts: opts.max_attempts,
        full_states: opts.full_states,
        episodes: produced.into_iter().map(|p| p.entry).collect(),
        content_hash: content_hash(&files),
        files,
    };
    write_json(&root.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

pub fn load_manifest(root: &Path) -> Result<CorpusManifest> {
    let m: CorpusManifest = read_json(&root.join(MANIFEST))?;
    if m.schema_version != SCHEMA_VERSION {
        return Err(CliError::Validation(format!(
            "manifest schema version {} (expected {SCHEMA_VERSION})",
            m.schema_version
        )));
    }
    Ok(m)
}

pub fn load_metadata(root: &Path, id: u64) -> Result<EpisodeMetadata> {
    read_json(&root.join(episode_file(id)))
}

pub fn load_episode(root: &Path, id: u64) -> Result<Episode> {
    load_metadata(root, id)?.to_episode()
}

/// Summary of a `labels` run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relabel {
    pub n_episodes: usize,
    pub previous_hash: String,
    pub content_hash: String,
}

/// Re-derives every label file from the stored episode metadata.
pub fn relabel(root: &Path, threads: Option<usize>) -> Result<Relabel> {
    let mut manifest = load_manifest(root)?;
    let work = || {
        manifest
            .episodes
            .par_iter()
            .map(|e| {
                let ep = load_episode(root, e.episode_id)?;
                Ok((DerivedRow::of(&ep)?, ep.program.actions.len()))
            })
            .collect::<Result<Vec<_>>>()
    };
    let rows = with_threads(threads, work)??;
    let actions = manifest
        .episodes
        .iter()
        .zip(&rows)
        .map(|(e, r)| (e.episode_id, r.1))
        .collect();
    let rows: Vec<DerivedRow> = rows.into_iter().map(|r| r.0).collect();
    let derived = write_derived(root, &rows, &actions)?;
    let previous_hash = manifest.content_hash.clone();
    manifest.files.extend(derived);
    manifest.content_hash = content_hash(&manifest.files);
    write_json(&root.join(MANIFEST), &manifest)?;
    Ok(Relabel {
        n_episodes: rows.len(),
        previous_hash,
        content_hash: manifest.content_hash,
    })
}

/// Ground truth for `task`, read from the label files.
pub fn load_truth(root: &Path, task: Task) -> Result<GroundTruth> {
    let labels = match task {
        Task::Atomic | Task::Compositional => {
            let (file, n) = if task == Task::Atomic {
                ("labels/task1.jsonl", N_ATOMIC)
            } else {
                ("labels/task2.jsonl", N_COMPOSITE)
            };
            read_jsonl::<MultiLabelLine>(&root.join(file))?
                .into_iter()
                .map(|l| {
                    if let Some(bad) = l.positives.iter().find(|c| **c >= n) {
                        return Err(CliError::Validation(format!("{file}: class {bad} out of range")));
                    }
                    Ok((l.episode_id, TruthLabel::MultiHot(MultiHot::from_positives(n, l.positives))))
                })
                .collect::<Result<BTreeMap<_, _>>>()?
        }
        Task::Localization { grid } => {
            let path = root.join(task3_file(grid));
            if path.exists() {
                read_jsonl::<CellLabelLine>(&path)?
                    .into_iter()
                    .map(|l| (l.episode_id, TruthLabel::Cell(l.cell)))
                    .collect()
            } else {
                // grids outside the stored set are quantized from the stored tracks
                let manifest = load_manifest(root)?;
                manifest
                    .episodes
                    .iter()
                    .map(|e| {
                        let meta = load_metadata(root, e.episode_id)?;
                        let last = meta.snitch_track.last().copied().unwrap_or_default();
                        let cell = quantize_cell(Point2::new(last[0], last[1]), grid, meta.config.plane_half_extent)?;
                        Ok((e.episode_id, TruthLabel::Cell(cell.index(grid))))
                    })
                    .collect::<Result<BTreeMap<_, _>>>()?
            }
        }
    };
    Ok(GroundTruth { task, labels })
}

pub fn load_attributes(root: &Path) -> Result<BTreeMap<u64, cater_core::sim::DiagnosticAttributes>> {
    Ok(read_jsonl::<AttributesLine>(&root.join("attributes.jsonl"))?
        .into_iter()
        .map(|l| (l.episode_id, l.attributes))
        .collect())
}

pub fn load_splits(root: &Path) -> Result<SplitManifest> {
    read_json(&root.join(SPLITS))
}

/// Episode ids of a named split, or `None` for `"all"`.
pub fn split_ids(root: &Path, split: &str) -> Result<Option<Vec<u64>>> {
    if split == "all" {
        return Ok(None);
    }
    let splits = load_splits(root)?;
    splits
        .subset(split)
        .map(|ids| Some(ids.to_vec()))
        .ok_or_else(|| CliError::Validation(format!("unknown split {split:?}")))
}

pub fn load_predictions(path: &Path, task: Task) -> Result<PredictionSet> {
    let mut predictions = BTreeMap::new();
    for line in read_jsonl::<PredictionLine>(path)? {
        let p = match (line.scores, line.cell) {
            (Some(s), None) => Prediction::Scores(s),
            (None, Some(c)) => Prediction::Cell(c),
            _ => {
                return Err(CliError::Validation(format!(
                    "{}: episode {} needs exactly one of `scores` or `cell`",
                    path.display(),
                    line.episode_id
                )))
            }
        };
        if predictions.insert(line.episode_id, p).is_some() {
            return Err(CliError::Validation(format!(
                "{}: duplicate episode {}",
                path.display(),
                line.episode_id
            )));
        }
    }
    Ok(PredictionSet { task, predictions })
}

/// Keeps only `ids`; every id must be predicted.
pub fn restrict(preds: &PredictionSet, ids: Option<&[u64]>) -> Result<PredictionSet> {
    let Some(ids) = ids else { return Ok(preds.clone()) };
    let mut predictions = BTreeMap::new();
    for id in ids {
        let p = preds
            .predictions
            .get(id)
            .ok_or_else(|| CliError::Validation(format!("no prediction for episode {id}")))?;
        predictions.insert(*id, p.clone());
    }
    Ok(PredictionSet {
        task: preds.task,
        predictions,
    })
}

pub fn restrict_truth(truth: &GroundTruth, ids: Option<&[u64]>) -> Result<GroundTruth> {
    let Some(ids) = ids else { return Ok(truth.clone()) };
    let mut labels = BTreeMap::new();
    for id in ids {
        let l = truth
            .labels
            .get(id)
            .ok_or_else(|| CliError::Validation(format!("no label for episode {id}")))?;
        labels.insert(*id, l.clone());
    }
    Ok(GroundTruth {
        task: truth.task,
        labels,
    })
}

/// Derived rows read back from the label and attribute files.
pub fn load_rows(root: &Path) -> Result<Vec<DerivedRow>> {
    let task1 = read_jsonl::<MultiLabelLine>(&root.join("labels/task1.jsonl"))?;
    let task2 = read_jsonl::<MultiLabelLine>(&root.join("labels/task2.jsonl"))?;
    let task3 = LABEL_GRIDS
        .iter()
        .map(|g| read_jsonl::<CellLabelLine>(&root.join(task3_file(*g))))
        .collect::<Result<Vec<_>>>()?;
    let attrs = read_jsonl::<AttributesLine>(&root.join("attributes.jsonl"))?;
    let n = task1.len();
    if task2.len() != n || attrs.len() != n || task3.iter().any(|t| t.len() != n) {
        return Err(CliError::Validation("label files disagree on the episode count".into()));
    }
    let mut rows = Vec::with_capacity(n);
    for (i, (t1, t2)) in task1.into_iter().zip(task2).enumerate() {
        let id = t1.episode_id;
        let t3: Vec<CellLabelLine> = task3.iter().map(|t| t[i].clone()).collect();
        if t2.episode_id != id || attrs[i].episode_id != id || t3.iter().any(|l| l.episode_id != id) {
            return Err(CliError::Validation(format!("label files disagree at line {}", i + 1)));
        }
        rows.push(DerivedRow {
            task1: t1,
            task2: t2,
            task3: t3,
            attributes: attrs[i].clone(),
        });
    }
    Ok(rows)
}

/// Label histograms of every split subset.
pub fn split_histograms(rows: &[DerivedRow], splits: &SplitManifest) -> Histograms {
    let none = BTreeMap::new();
    let mut subsets = BTreeMap::new();
    subsets.insert("all".to_string(), histogram(rows, &none));
    for name in ["train", "val", "final_train", "test"] {
        let ids: std::collections::BTreeSet<u64> = splits.subset(name).unwrap_or_default().iter().copied().collect();
        subsets.insert(
            name.to_string(),
            histogram(rows.iter().filter(|r| ids.contains(&r.task1.episode_id)), &none),
        );
    }
    Histograms {
        schema_version: SCHEMA_VERSION,
        subsets,
    }
}
