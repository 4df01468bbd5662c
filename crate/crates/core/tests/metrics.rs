use std::collections::BTreeMap;

use cater_core::eval::*;
use cater_core::labels::{MultiHot, N_ATOMIC};
use cater_core::sim::DiagnosticAttributes;
use cater_core::Error;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn ap_hand_example() {
    let ap = average_precision(&[0.9, 0.8, 0.1], &[true, false, true]).unwrap();
    assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
    assert!((ap - 0.8333).abs() < 1e-4);
    assert_eq!(average_precision(&[0.1, 0.9, 0.3], &[false, true, true]), Some(1.0));
    assert_eq!(average_precision(&[0.1, 0.2], &[false, false]), None);
}

#[test]
fn ap_ties_follow_index_and_average_to_prevalence() {
    // all scores equal: rank order is index order
    let pos = [false, true, false, true];
    let expected = (1.0 / 2.0 + 2.0 / 4.0) / 2.0;
    assert_eq!(average_precision(&[0.5; 4], &pos), Some(expected));

    let (n, p) = (200usize, 50usize);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut labels: Vec<bool> = (0..n).map(|i| i < p).collect();
    let trials = 2000;
    let mut sum = 0.0;
    for _ in 0..trials {
        labels.shuffle(&mut rng);
        sum += average_precision(&vec![0.0; n], &labels).unwrap();
    }
    let mean = sum / trials as f64;
    let prevalence = p as f64 / n as f64;
    // finite-sample excess is (1 - p/n)(H_n - 1)/n
    let harmonic: f64 = (1..=n).map(|k| 1.0 / k as f64).sum();
    let exact = prevalence + (1.0 - prevalence) * (harmonic - 1.0) / (n - 1) as f64;
    assert!((mean - exact).abs() < 0.01, "{mean} vs {exact}");
    assert!((mean - prevalence).abs() < 0.03);
}

proptest! {
    #[test]
    fn ap_invariant_under_monotone_transform(
        data in prop::collection::vec((0.0f64..1.0, any::<bool>()), 1..60)
    ) {
        let scores: Vec<f64> = data.iter().map(|d| d.0).collect();
        let pos: Vec<bool> = data.iter().map(|d| d.1).collect();
        let warped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
        prop_assert_eq!(average_precision(&scores, &pos), average_precision(&warped, &pos));
        let truth_as_scores: Vec<f64> = pos.iter().map(|p| f64::from(u8::from(*p))).collect();
        if pos.iter().any(|p| *p) {
            prop_assert_eq!(average_precision(&truth_as_scores, &pos), Some(1.0));
        }
    }
}

fn localization_truth(grid: u32, cells: &[usize]) -> GroundTruth {
    GroundTruth {
        task: Task::Localization { grid },
        labels: cells.iter().enumerate().map(|(i, c)| (i as u64, TruthLabel::Cell(*c))).collect(),
    }
}

fn cells_pred(grid: u32, cells: impl Iterator<Item = usize>) -> PredictionSet {
    PredictionSet {
        task: Task::Localization { grid },
        predictions: cells.enumerate().map(|(i, c)| (i as u64, Prediction::Cell(c))).collect(),
    }
}

#[test]
fn localization_examples() {
    let cells: Vec<usize> = (0..36).filter(|c| c % 6 != 5).collect();
    let truth = localization_truth(6, &cells);
    let perfect = evaluate(&cells_pred(6, cells.iter().copied()), &truth).unwrap();
    assert_eq!((perfect.top1, perfect.top5, perfect.mean_l1), (Some(100.0), Some(100.0), Some(0.0)));

    let adjacent = evaluate(&cells_pred(6, cells.iter().map(|c| c + 1)), &truth).unwrap();
    assert_eq!((adjacent.top1, adjacent.mean_l1), (Some(0.0), Some(1.0)));

    // one-hot scores behave like the cell itself
    let scores = PredictionSet {
        task: Task::Localization { grid: 6 },
        predictions: cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let mut s = vec![0.0; 36];
                s[*c] = 1.0;
                (i as u64, Prediction::Scores(s))
            })
            .collect(),
    };
    assert_eq!(evaluate(&scores, &truth).unwrap().top1, Some(100.0));
}

#[test]
fn schema_mismatches_are_errors() {
    let truth = localization_truth(6, &[1, 2]);
    let wrong_grid = cells_pred(4, [1usize, 2].into_iter());
    assert!(matches!(evaluate(&wrong_grid, &truth), Err(Error::SchemaMismatch(_))));
    let out_of_range = cells_pred(6, [1usize, 36].into_iter());
    assert!(matches!(evaluate(&out_of_range, &truth), Err(Error::SchemaMismatch(_))));
    let unknown = PredictionSet {
        task: Task::Localization { grid: 6 },
        predictions: BTreeMap::from([(7, Prediction::Cell(0))]),
    };
    assert!(matches!(evaluate(&unknown, &truth), Err(Error::SchemaMismatch(_))));
    let short_scores = PredictionSet {
        task: Task::Atomic,
        predictions: BTreeMap::from([(0, Prediction::Scores(vec![0.0; 3]))]),
    };
    let atomic = GroundTruth {
        task: Task::Atomic,
        labels: BTreeMap::from([(0, TruthLabel::MultiHot(MultiHot::zeros(N_ATOMIC)))]),
    };
    assert!(matches!(evaluate(&short_scores, &atomic), Err(Error::SchemaMismatch(_))));
}

#[test]
fn closed_forms() {
    let g6 = localization_closed_form(6);
    assert!((g6.top1 - 100.0 / 36.0).abs() < 1e-12);
    assert!((g6.top5 - 500.0 / 36.0).abs() < 1e-12);
    assert!((g6.mean_l1 - 35.0 / 9.0).abs() < 1e-12);
    // E|i - j| by enumeration over both axes
    for g in [4u32, 6, 8] {
        let mut sum = 0u64;
        for a in 0..g * g {
            for b in 0..g * g {
                sum += u64::from((a / g).abs_diff(b / g) + (a % g).abs_diff(b % g));
            }
        }
        let brute = sum as f64 / f64::from(g * g * g * g);
        assert!((localization_closed_form(g).mean_l1 - brute).abs() < 1e-12);
    }
}

#[test]
fn monte_carlo_matches_closed_form_within_three_sigma() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cells: Vec<usize> = (0..400).map(|_| rng.random_range(0..36)).collect();
    let truth = localization_truth(6, &cells);
    let trials = 2000;
    let base = random_baseline(&truth, trials, 5).unwrap();
    let cf = base.closed_form.unwrap();
    let se = |std: Option<f64>| 3.0 * std.unwrap() / (trials as f64).sqrt();
    assert!((base.mean.top1.unwrap() - cf.top1).abs() < se(base.std_top1));
    assert!((base.mean.top5.unwrap() - cf.top5).abs() < se(base.std_top5));
    // L1 depends on the sampled truth; compare with the exact conditional mean
    let exact_l1: f64 = cells
        .iter()
        .map(|c| {
            (0..36usize)
                .map(|p| ((p / 6).abs_diff(c / 6) + (p % 6).abs_diff(c % 6)) as f64)
                .sum::<f64>()
                / 36.0
        })
        .sum::<f64>()
        / cells.len() as f64;
    assert!((base.mean.mean_l1.unwrap() - exact_l1).abs() < se(base.std_l1));
}

#[test]
fn random_map_tracks_prevalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let labels = (0..500u64)
        .map(|i| {
            let m = MultiHot((0..N_ATOMIC).map(|c| rng.random_bool(0.1 + 0.05 * c as f64)).collect());
            (i, TruthLabel::MultiHot(m))
        })
        .collect();
    let truth = GroundTruth { task: Task::Atomic, labels };
    let base = random_baseline(&truth, 100, 1).unwrap();
    let prevalence = mean_class_prevalence(&truth).unwrap();
    assert!((base.mean.map.unwrap() - prevalence).abs() < 0.01);
    assert_eq!(base.mean_class_prevalence, Some(prevalence));
}

fn attrs(last_move_frame: u32, contained: bool) -> DiagnosticAttributes {
    DiagnosticAttributes {
        last_move_frame,
        contained_at_end: contained,
        containment_depth: u32::from(contained),
        displacement_l1: 0,
        n_objects: 6,
    }
}

#[test]
fn diagnose_examples() {
    let n = 120usize;
    let cells: Vec<usize> = (0..n).map(|i| i % 36).collect();
    let truth = localization_truth(6, &cells);
    let attributes: BTreeMap<u64, DiagnosticAttributes> =
        (0..n as u64).map(|i| (i, attrs(((i * 7) % 300) as u32, i % 3 == 0))).collect();
    let binning = Binning::LastMoveFrame { slot_len: 30, frames: 300 };

    let perfect = diagnose(&cells_pred(6, cells.iter().copied()), &truth, &attributes, binning).unwrap();
    assert_eq!(perfect.bins.len(), 11);
    assert_eq!(perfect.bins.iter().map(|b| b.count).sum::<usize>(), n);
    assert!(perfect.bins.iter().filter(|b| !b.empty).all(|b| b.metric == Some(100.0)));

    // predictor right exactly when the snitch never moved
    let guess = cells_pred(
        6,
        cells.iter().zip(0..).map(|(c, i)| if attributes[&i].last_move_frame == 0 { *c } else { (c + 1) % 36 }),
    );
    let report = diagnose(&guess, &truth, &attributes, binning).unwrap();
    assert_eq!(report.bins[0].metric, Some(100.0));
    assert!(report.bins[1..].iter().all(|b| b.metric.unwrap_or(0.0) == 0.0));

    // population-weighted bins recompose the overall accuracy
    let contained = diagnose(&guess, &truth, &attributes, Binning::ContainedAtEnd).unwrap();
    assert_eq!(contained.bins.len(), 2);
    assert_eq!(contained.bins.iter().map(|b| b.count).sum::<usize>(), n);
    let weighted: f64 = contained.bins.iter().map(|b| b.metric.unwrap_or(0.0) * b.count as f64).sum::<f64>() / n as f64;
    assert!((weighted - contained.overall.unwrap()).abs() < 1e-9);

    // empty bins are reported, not dropped
    let wide = diagnose(&guess, &truth, &attributes, Binning::NObjects { min: 3, max: 10 }).unwrap();
    assert_eq!(wide.bins.len(), 8);
    assert!(wide.bins[0].empty && wide.bins[0].metric.is_none());
    assert_eq!(wide.bins[3].count, n);
}

#[test]
fn last_move_bins() {
    let b = Binning::LastMoveFrame { slot_len: 30, frames: 300 };
    let edges = b.edges();
    assert_eq!(edges[0], (0, 1));
    assert_eq!(edges[1], (1, 30));
    assert_eq!(edges[10], (270, 300));
    assert_eq!(b.bin_of(0), 0);
    assert_eq!(b.bin_of(29), 1);
    assert_eq!(b.bin_of(30), 2);
    assert_eq!(b.bin_of(299), 10);
    assert_eq!(b.labels()[0], "never");
}
