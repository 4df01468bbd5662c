mod common;

use cater_core::episode::Episode;
use cater_core::geometry::Point2;
use cater_core::labels::*;
use cater_core::program::{ActionType, Interval};
use cater_core::sim::replay;
use cater_core::world::{SceneConfig, Shape, Size};
use cater_core::Error;
use common::*;
use proptest::prelude::*;

fn iv(a: u32, b: u32) -> Interval {
    Interval::new(a, b)
}

fn shapes_scene() -> cater_core::world::Scene {
    scene(&[
        (Shape::Snitch, Size::Medium, 0.0, 0.0),
        (Shape::Cone, Size::Large, -2.0, -2.0),
        (Shape::Cube, Size::Small, 2.0, -2.0),
        (Shape::Sphere, Size::Small, 2.0, 2.0),
        (Shape::Cylinder, Size::Small, -2.0, 2.0),
    ])
}

#[test]
fn broad_relation_examples() {
    assert_eq!(broad_relation(iv(0, 10), iv(15, 25)), BroadRelation::Before);
    assert_eq!(broad_relation(iv(0, 30), iv(5, 25)), BroadRelation::During);
    assert_eq!(broad_relation(iv(0, 10), iv(10, 20)), BroadRelation::Before);
    assert_eq!(broad_relation(iv(10, 20), iv(0, 10)), BroadRelation::After);
    assert_eq!(broad_relation(iv(0, 10), iv(0, 10)), BroadRelation::During);
}

proptest! {
    #[test]
    fn broad_relation_converse(a0 in 0u32..300, la in 1u32..30, b0 in 0u32..300, lb in 1u32..30) {
        let (a, b) = (iv(a0, a0 + la), iv(b0, b0 + lb));
        prop_assert_eq!(broad_relation(b, a), broad_relation(a, b).converse());
        // overlap iff some interior frame-time is shared
        let overlap = a.start.max(b.start) < a.end.min(b.end);
        prop_assert_eq!(overlap, broad_relation(a, b) == BroadRelation::During);
    }

    #[test]
    fn quantize_lands_in_the_containing_cell(x in -3.0f64..=3.0, y in -3.0f64..=3.0, g in prop::sample::select(vec![4u32, 6, 8])) {
        let cell = quantize_cell(Point2::new(x, y), g, 3.0).unwrap();
        prop_assert!(cell.row < g && cell.col < g);
        let c = cell.center(g, 3.0);
        let half = 3.0 / f64::from(g);
        prop_assert!((x - c.x).abs() <= half + 1e-12);
        prop_assert!((y - c.y).abs() <= half + 1e-12);
        prop_assert_eq!(quantize_cell(c, g, 3.0).unwrap(), cell);
    }
}

#[test]
fn task1_examples() {
    use ActionType::*;
    let p = program(
        shapes_scene(),
        vec![
            act(1, Slide, None, (0, 10), (-2.0, -2.0), (-1.0, -2.0)),
            act(2, Rotate, None, (3, 20), (2.0, -2.0), (2.0, -2.0)),
        ],
    );
    let t1 = derive_task1(&p);
    assert_eq!(
        t1.positives(),
        vec![
            atomic_index(Shape::Cone, Slide).unwrap().min(atomic_index(Shape::Cube, Rotate).unwrap()),
            atomic_index(Shape::Cone, Slide).unwrap().max(atomic_index(Shape::Cube, Rotate).unwrap()),
        ]
    );
    assert_eq!(derive_task1(&program(shapes_scene(), vec![])).count(), 0);

    let p = program(shapes_scene(), vec![act(1, Contain, Some(3), (0, 20), (-2.0, -2.0), (2.0, 2.0))]);
    assert_eq!(derive_task1(&p).positives(), vec![atomic_index(Shape::Cone, Contain).unwrap()]);
}

#[test]
fn task2_examples() {
    use ActionType::*;
    let p = program(
        shapes_scene(),
        vec![
            act(3, Slide, None, (0, 10), (2.0, 2.0), (1.0, 2.0)),
            act(2, Rotate, None, (40, 55), (2.0, -2.0), (2.0, -2.0)),
        ],
    );
    let t2 = derive_task2(&p);
    let slide_sphere = atomic_index(Shape::Sphere, Slide).unwrap();
    let rotate_cube = atomic_index(Shape::Cube, Rotate).unwrap();
    let expected = CompositeClass::canonical(slide_sphere, BroadRelation::Before, rotate_cube);
    assert_eq!(t2.positives(), vec![expected.index()]);

    let single = program(shapes_scene(), vec![act(3, Slide, None, (0, 10), (2.0, 2.0), (1.0, 2.0))]);
    assert_eq!(derive_task2(&single).count(), 0);

    let overlapping = program(
        shapes_scene(),
        vec![
            act(2, Rotate, None, (0, 20), (2.0, -2.0), (2.0, -2.0)),
            act(4, Rotate, None, (5, 25), (-2.0, 2.0), (-2.0, 2.0)),
            act(3, Slide, None, (10, 29), (2.0, 2.0), (1.0, 2.0)),
        ],
    );
    let t2 = derive_task2(&overlapping);
    assert_eq!(t2.count(), 3);
    assert!(t2.positives().iter().all(|i| *i >= N_BEFORE));
}

/// Direct pair enumeration over ordered pairs, keeping only the canonical form.
fn task2_oracle(ep: &Episode) -> Vec<usize> {
    let p = &ep.program;
    let mut out = std::collections::BTreeSet::new();
    for (i, a) in p.actions.iter().enumerate() {
        for (j, b) in p.actions.iter().enumerate() {
            if i == j {
                continue;
            }
            let (ca, cb) = (action_class(p, a), action_class(p, b));
            let (ia, ib) = (a.interval, b.interval);
            let rel = if ia.end <= ib.start {
                BroadRelation::Before
            } else if ib.end <= ia.start {
                continue;
            } else {
                BroadRelation::During
            };
            if rel == BroadRelation::During && ca > cb {
                continue;
            }
            out.insert(match rel {
                BroadRelation::Before => ca * 14 + cb,
                _ => {
                    let skip: usize = (0..ca).map(|r| 14 - r).sum();
                    196 + skip + (cb - ca)
                }
            });
        }
    }
    out.into_iter().collect()
}

#[test]
fn task2_matches_pair_enumeration_and_ignores_action_order() {
    let config = SceneConfig { seed: 21, ..SceneConfig::atomic() };
    for i in 0..200 {
        let (ep, _) = Episode::generate_indexed(i, &config, 10).unwrap();
        let t2 = derive_task2(&ep.program);
        assert_eq!(t2.positives(), task2_oracle(&ep));
        let mut reversed = ep.program.clone();
        reversed.actions.reverse();
        assert_eq!(derive_task2(&reversed), t2);
        assert_eq!(derive_task1(&reversed), derive_task1(&ep.program));
    }
}

#[test]
fn quantize_examples() {
    assert_eq!(quantize(Point2::new(-3.0, -3.0), 6, 3.0).unwrap(), 0);
    assert_eq!(quantize(Point2::new(0.0, 0.0), 6, 3.0).unwrap(), 21);
    assert_eq!(quantize(Point2::new(2.999, 2.999), 6, 3.0).unwrap(), 35);
    assert_eq!(quantize(Point2::new(3.0, 3.0), 6, 3.0).unwrap(), 35);
    assert_eq!(quantize_cell(Point2::new(1.2, -0.7), 6, 3.0).unwrap(), GridCell { row: 2, col: 4 });
    assert_eq!(quantize(Point2::new(1.2, -0.7), 6, 3.0).unwrap(), 16);
    assert_eq!(quantize(Point2::new(3.0 + 1e-12, 0.0), 6, 3.0).unwrap(), 23);
    assert!(matches!(quantize(Point2::new(3.1, 0.0), 6, 3.0), Err(Error::OutOfPlane { .. })));
}

fn scan(p: Point2, g: u32) -> usize {
    let size = 6.0 / f64::from(g);
    let inside = |v: f64, k: u32| {
        let lo = -3.0 + f64::from(k) * size;
        let hi = lo + size;
        v >= lo && (v < hi || (k == g - 1 && v <= hi))
    };
    for row in 0..g {
        for col in 0..g {
            if inside(p.y, row) && inside(p.x, col) {
                return (row * g + col) as usize;
            }
        }
    }
    panic!("no cell for {p:?}");
}

#[test]
fn task3_label_is_final_snitch_cell() {
    let static_snitch = program(shapes_scene(), vec![]);
    let mut s = static_snitch.clone();
    s.scene.objects[0].position = Point2::new(1.2, -0.7);
    let tl = replay(&s, &static_camera(&s.config)).unwrap();
    assert_eq!(derive_task3(&tl, 6, 3.0).unwrap(), 16);
    assert_eq!(scan(Point2::new(1.2, -0.7), 6), 16);

    let config = SceneConfig { seed: 8, ..SceneConfig::localization() };
    for i in 0..200 {
        let (ep, _) = Episode::generate_indexed(i, &config, 10).unwrap();
        let last = *ep.timeline.snitch_track.last().unwrap();
        for g in [4, 6, 8] {
            assert_eq!(derive_task3(&ep.timeline, g, 3.0).unwrap(), scan(last, g));
        }
        let c4 = GridCell::from_index(derive_task3(&ep.timeline, 4, 3.0).unwrap(), 4);
        let c8 = GridCell::from_index(derive_task3(&ep.timeline, 8, 3.0).unwrap(), 8);
        assert_eq!((c8.row / 2, c8.col / 2), (c4.row, c4.col));
        let record = ep.labels(6).unwrap();
        assert_eq!(record.task3, derive_task3(&ep.timeline, 6, 3.0).unwrap());
    }
}

#[test]
fn contained_snitch_label_follows_cone() {
    use ActionType::*;
    let p = program(
        shapes_scene(),
        vec![
            act(1, Contain, Some(0), (0, 20), (-2.0, -2.0), (0.0, 0.0)),
            act(1, Slide, None, (30, 50), (0.0, 0.0), (2.0, 2.0)),
            act(3, Slide, None, (0, 20), (2.0, 2.0), (2.0, 0.5)),
        ],
    );
    let tl = replay(&p, &static_camera(&p.config)).unwrap();
    assert_eq!(derive_task3(&tl, 6, 3.0).unwrap(), quantize(Point2::new(2.0, 2.0), 6, 3.0).unwrap());
}
