//! Scoring of prediction sets: per-class average precision and mAP for the
//! multi-label tasks, top-k accuracy and grid L1 for localization, Monte-Carlo
//! random baselines, and attribute-binned diagnostics.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::labels::{GridCell, MultiHot, N_ATOMIC, N_COMPOSITE};
use crate::rng::{mix64, stream, Stream};
use crate::sim::DiagnosticAttributes;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "task")]
pub enum Task {
    /// 14-way atomic action recognition.
    Atomic,
    /// 301-way compositional action recognition.
    Compositional,
    /// Snitch localization on a `grid x grid` board.
    Localization { grid: u32 },
}

impl Task {
    pub fn n_classes(self) -> usize {
        match self {
            Task::Atomic => N_ATOMIC,
            Task::Compositional => N_COMPOSITE,
            Task::Localization { grid } => (grid * grid) as usize,
        }
    }

    pub fn is_multi_label(self) -> bool {
        !matches!(self, Task::Localization { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TruthLabel {
    MultiHot(MultiHot),
    Cell(usize),
}

/// Ground truth of one task keyed by episode id.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub task: Task,
    pub labels: BTreeMap<u64, TruthLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Prediction {
    Scores(Vec<f64>),
    Cell(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub task: Task,
    pub predictions: BTreeMap<u64, Prediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub task: Task,
    pub n_episodes: usize,
    /// Classes with at least one positive, i.e. those averaged into `map`.
    pub classes_evaluated: usize,
    /// Per-class AP; `None` for classes without positives.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_class_ap: Vec<Option<f64>>,
    /// Mean AP in `[0, 1]` (multi-label tasks).
    pub map: Option<f64>,
    /// Percent (localization).
    pub top1: Option<f64>,
    pub top5: Option<f64>,
    /// Mean grid-cell Manhattan distance (localization).
    pub mean_l1: Option<f64>,
}

/// Mean over positives of the precision at each positive's rank.
///
/// Items are ranked by descending score; equal scores keep index order, so
/// callers pass items sorted by episode id. Returns `None` without positives.
pub fn average_precision(scores: &[f64], positives: &[bool]) -> Option<f64> {
    debug_assert_eq!(scores.len(), positives.len());
    let total = positives.iter().filter(|p| **p).count();
    if total == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if positives[i] {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Some(sum / total as f64)
}

/// Classes ranked by descending score, ties toward the lower index.
fn ranked_classes(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

fn mismatch<T>(msg: String) -> Result<T> {
    Err(Error::SchemaMismatch(msg))
}

fn check_schema(preds: &PredictionSet, truth: &GroundTruth) -> Result<()> {
    if preds.task != truth.task {
        return mismatch(format!("predictions for {:?}, labels for {:?}", preds.task, truth.task));
    }
    let n = preds.task.n_classes();
    for (id, p) in &preds.predictions {
        let Some(label) = truth.labels.get(id) else {
            return mismatch(format!("episode {id} has no label"));
        };
        match (p, label) {
            (Prediction::Scores(s), _) if s.len() != n => {
                return mismatch(format!("episode {id}: {} scores for {n} classes", s.len()))
            }
            (Prediction::Scores(s), _) if s.iter().any(|x| x.is_nan()) => {
                return mismatch(format!("episode {id}: NaN score"))
            }
            (Prediction::Cell(c), TruthLabel::Cell(_)) if *c >= n => {
                return mismatch(format!("episode {id}: cell {c} out of range"))
            }
            (Prediction::Cell(_), TruthLabel::MultiHot(_)) => {
                return mismatch(format!("episode {id}: cell prediction for a multi-label task"))
            }
            (_, TruthLabel::MultiHot(m)) if m.len() != n => {
                return mismatch(format!("episode {id}: label has {} classes", m.len()))
            }
            (_, TruthLabel::Cell(c)) if *c >= n => {
                return mismatch(format!("episode {id}: label cell {c} out of range"))
            }
            _ => {}
        }
    }
    Ok(())
}

/// Scores every predicted episode against its label.
pub fn evaluate(preds: &PredictionSet, truth: &GroundTruth) -> Result<MetricsReport> {
    check_schema(preds, truth)?;
    let task = preds.task;
    let n_classes = task.n_classes();
    let n_episodes = preds.predictions.len();

    match task {
        Task::Atomic | Task::Compositional => {
            let mut per_class_ap = Vec::with_capacity(n_classes);
            let mut scores = Vec::with_capacity(n_episodes);
            let mut positives = Vec::with_capacity(n_episodes);
            for class in 0..n_classes {
                scores.clear();
                positives.clear();
                for (id, p) in &preds.predictions {
                    let Prediction::Scores(s) = p else { unreachable!("checked") };
                    let TruthLabel::MultiHot(m) = &truth.labels[id] else {
                        return mismatch(format!("episode {id}: localization label for a multi-label task"));
                    };
                    scores.push(s[class]);
                    positives.push(m.get(class));
                }
                per_class_ap.push(average_precision(&scores, &positives));
            }
            let defined: Vec<f64> = per_class_ap.iter().flatten().copied().collect();
            let map = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
            Ok(MetricsReport {
                task,
                n_episodes,
                classes_evaluated: defined.len(),
                per_class_ap,
                map,
                top1: None,
                top5: None,
                mean_l1: None,
            })
        }
        Task::Localization { grid } => {
            let (mut top1, mut top5, mut l1) = (0usize, 0usize, 0u64);
            let mut seen = alloc::vec![false; n_classes];
            for (id, p) in &preds.predictions {
                let TruthLabel::Cell(truth_cell) = truth.labels[id] else {
                    return mismatch(format!("episode {id}: multi-hot label for localization"));
                };
                seen[truth_cell] = true;
                let (predicted, in_top5) = match p {
                    Prediction::Cell(c) => (*c, *c == truth_cell),
                    Prediction::Scores(s) => {
                        let ranked = ranked_classes(s);
                        (ranked[0], ranked.iter().take(5).any(|c| *c == truth_cell))
                    }
                };
                top1 += usize::from(predicted == truth_cell);
                top5 += usize::from(in_top5);
                l1 += u64::from(GridCell::from_index(predicted, grid).l1(&GridCell::from_index(truth_cell, grid)));
            }
            let denom = n_episodes.max(1) as f64;
            Ok(MetricsReport {
                task,
                n_episodes,
                classes_evaluated: seen.iter().filter(|s| **s).count(),
                per_class_ap: Vec::new(),
                map: None,
                top1: Some(100.0 * top1 as f64 / denom),
                top5: Some(100.0 * top5 as f64 / denom),
                mean_l1: Some(l1 as f64 / denom),
            })
        }
    }
}

/// Uniform-random-predictor expectations on a `grid x grid` board with
/// uniformly distributed ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizationClosedForm {
    pub top1: f64,
    pub top5: f64,
    pub mean_l1: f64,
}

pub fn localization_closed_form(grid: u32) -> LocalizationClosedForm {
    let g = f64::from(grid);
    let cells = g * g;
    LocalizationClosedForm {
        top1: 100.0 / cells,
        top5: 100.0 * cells.min(5.0) / cells,
        mean_l1: 2.0 * (cells - 1.0) / (3.0 * g),
    }
}

/// Mean per-class positive rate over classes with at least one positive.
pub fn mean_class_prevalence(truth: &GroundTruth) -> Option<f64> {
    let n = truth.task.n_classes();
    let mut counts = alloc::vec![0usize; n];
    for label in truth.labels.values() {
        match label {
            TruthLabel::MultiHot(m) => {
                for i in m.positives() {
                    counts[i] += 1;
                }
            }
            TruthLabel::Cell(c) => counts[*c] += 1,
        }
    }
    let present: Vec<usize> = counts.into_iter().filter(|c| *c > 0).collect();
    if present.is_empty() {
        return None;
    }
    let episodes = truth.labels.len() as f64;
    Some(present.iter().map(|c| *c as f64 / episodes).sum::<f64>() / present.len() as f64)
}

/// One Monte-Carlo trial: uniform scores for every labeled episode.
pub fn random_trial(truth: &GroundTruth, seed: u64, trial: u64) -> Result<MetricsReport> {
    let mut rng = stream(mix64(seed ^ mix64(trial)), Stream::Baseline);
    let n = truth.task.n_classes();
    let predictions = truth
        .labels
        .keys()
        .map(|id| {
            let scores = (0..n).map(|_| rng.random::<f64>()).collect();
            (*id, Prediction::Scores(scores))
        })
        .collect();
    evaluate(
        &PredictionSet {
            task: truth.task,
            predictions,
        },
        truth,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomBaseline {
    pub trials: usize,
    /// Metrics averaged over trials.
    pub mean: MetricsReport,
    /// Standard deviation over trials of the headline metrics, in report units.
    pub std_map: Option<f64>,
    pub std_top1: Option<f64>,
    pub std_top5: Option<f64>,
    pub std_l1: Option<f64>,
    pub closed_form: Option<LocalizationClosedForm>,
    pub mean_class_prevalence: Option<f64>,
}

fn mean_std(values: impl Iterator<Item = Option<f64>>) -> (Option<f64>, Option<f64>) {
    let v: Vec<f64> = values.flatten().collect();
    if v.is_empty() {
        return (None, None);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (Some(mean), Some(libm::sqrt(var)))
}

/// Averages per-trial reports into a random baseline.
pub fn combine_trials(truth: &GroundTruth, reports: &[MetricsReport]) -> Result<RandomBaseline> {
    let Some(first) = reports.first() else {
        return mismatch("random baseline needs at least one trial".into());
    };
    let (map, std_map) = mean_std(reports.iter().map(|r| r.map));
    let (top1, std_top1) = mean_std(reports.iter().map(|r| r.top1));
    let (top5, std_top5) = mean_std(reports.iter().map(|r| r.top5));
    let (mean_l1, std_l1) = mean_std(reports.iter().map(|r| r.mean_l1));
    let per_class_ap = (0..first.per_class_ap.len())
        .map(|c| mean_std(reports.iter().map(|r| r.per_class_ap[c])).0)
        .collect();
    let closed_form = match truth.task {
        Task::Localization { grid } => Some(localization_closed_form(grid)),
        _ => None,
    };
    Ok(RandomBaseline {
        trials: reports.len(),
        mean: MetricsReport {
            task: first.task,
            n_episodes: first.n_episodes,
            classes_evaluated: first.classes_evaluated,
            per_class_ap,
            map,
            top1,
            top5,
            mean_l1,
        },
        std_map,
        std_top1,
        std_top5,
        std_l1,
        closed_form,
        mean_class_prevalence: mean_class_prevalence(truth),
    })
}

/// Monte-Carlo average of `trials` uniform-score predictors.
pub fn random_baseline(truth: &GroundTruth, trials: usize, seed: u64) -> Result<RandomBaseline> {
    let reports = (0..trials as u64)
        .map(|t| random_trial(truth, seed, t))
        .collect::<Result<Vec<_>>>()?;
    combine_trials(truth, &reports)
}

/// Episode attribute used to bin a diagnostic report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "attribute")]
pub enum Binning {
    /// One "never moved" bin, then one bin per slot.
    LastMoveFrame { slot_len: u32, frames: u32 },
    ContainedAtEnd,
    /// Unit bins `0..=max`.
    DisplacementL1 { max: u32 },
    /// Unit bins `min..=max`.
    NObjects { min: u32, max: u32 },
}

impl Binning {
    pub fn name(&self) -> &'static str {
        match self {
            Binning::LastMoveFrame { .. } => "last_move_frame",
            Binning::ContainedAtEnd => "contained_at_end",
            Binning::DisplacementL1 { .. } => "displacement_l1",
            Binning::NObjects { .. } => "n_objects",
        }
    }

    /// `[lo, hi)` value ranges, one per bin.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        match *self {
            Binning::LastMoveFrame { slot_len, frames } => {
                let mut out = alloc::vec![(0, 1)];
                out.extend((0..frames / slot_len).map(|s| ((s * slot_len).max(1), (s + 1) * slot_len)));
                out
            }
            Binning::ContainedAtEnd => alloc::vec![(0, 1), (1, 2)],
            Binning::DisplacementL1 { max } => (0..=max).map(|v| (v, v + 1)).collect(),
            Binning::NObjects { min, max } => (min..=max).map(|v| (v, v + 1)).collect(),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        match *self {
            Binning::LastMoveFrame { .. } => {
                let edges = self.edges();
                let mut out = alloc::vec![String::from("never")];
                out.extend(edges[1..].iter().map(|(lo, hi)| format!("{lo}-{}", hi - 1)));
                out
            }
            Binning::ContainedAtEnd => alloc::vec!["uncontained".into(), "contained".into()],
            _ => self.edges().iter().map(|(lo, _)| format!("{lo}")).collect(),
        }
    }

    pub fn value(&self, attrs: &DiagnosticAttributes) -> u32 {
        match self {
            Binning::LastMoveFrame { .. } => attrs.last_move_frame,
            Binning::ContainedAtEnd => u32::from(attrs.contained_at_end),
            Binning::DisplacementL1 { .. } => attrs.displacement_l1,
            Binning::NObjects { .. } => attrs.n_objects,
        }
    }

    /// Bin of `value`; values beyond the edges go to the nearest end bin.
    pub fn bin_of(&self, value: u32) -> usize {
        let edges = self.edges();
        edges
            .iter()
            .position(|(lo, hi)| *lo <= value && value < *hi)
            .unwrap_or(if value < edges[0].0 { 0 } else { edges.len() - 1 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinReport {
    pub label: String,
    pub lo: u32,
    pub hi: u32,
    pub count: usize,
    /// Top-1 percent (localization) or mAP percent; `None` for empty bins.
    pub metric: Option<f64>,
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub attribute: String,
    pub binning: Binning,
    pub metric_name: String,
    pub n_episodes: usize,
    pub bins: Vec<BinReport>,
    pub overall: Option<f64>,
}

fn headline(report: &MetricsReport) -> Option<f64> {
    match report.task {
        Task::Localization { .. } => report.top1,
        _ => report.map.map(|m| 100.0 * m),
    }
}

/// Splits the evaluated episodes by one attribute and scores every bin.
pub fn diagnose(
    preds: &PredictionSet,
    truth: &GroundTruth,
    attributes: &BTreeMap<u64, DiagnosticAttributes>,
    binning: Binning,
) -> Result<DiagnosticReport> {
    check_schema(preds, truth)?;
    let edges = binning.edges();
    let labels = binning.labels();
    let mut bins: Vec<BTreeMap<u64, Prediction>> = alloc::vec![BTreeMap::new(); edges.len()];
    for (id, p) in &preds.predictions {
        let Some(attrs) = attributes.get(id) else {
            return mismatch(format!("episode {id} has no diagnostic attributes"));
        };
        bins[binning.bin_of(binning.value(attrs))].insert(*id, p.clone());
    }
    let overall = headline(&evaluate(preds, truth)?);
    let mut out = Vec::with_capacity(edges.len());
    for ((predictions, (lo, hi)), label) in bins.into_iter().zip(edges).zip(labels) {
        let count = predictions.len();
        let metric = if count == 0 {
            None
        } else {
            headline(&evaluate(&PredictionSet { task: preds.task, predictions }, truth)?)
        };
        out.push(BinReport {
            label,
            lo,
            hi,
            count,
            metric,
            empty: count == 0,
        });
    }
    Ok(DiagnosticReport {
        attribute: binning.name().into(),
        binning,
        metric_name: if preds.task.is_multi_label() { "mAP" } else { "top-1" }.into(),
        n_episodes: preds.predictions.len(),
        bins: out,
        overall,
    })
}
