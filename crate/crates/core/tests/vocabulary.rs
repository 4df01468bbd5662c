use std::collections::BTreeSet;

use cater_core::labels::*;
use cater_core::program::ActionType;
use cater_core::world::{affords, Shape};

#[test]
fn atomic_vocab_matches_affordance_enumeration() {
    let vocab = atomic_vocab();
    let brute: Vec<(Shape, ActionType)> = Shape::ALL
        .iter()
        .flat_map(|s| ActionType::ALL.iter().map(move |a| (*s, *a)))
        .filter(|(s, a)| affords(*s, *a))
        .collect();
    assert_eq!(vocab.len(), N_ATOMIC);
    assert_eq!(brute.len(), 14);
    for (i, c) in vocab.iter().enumerate() {
        assert!(brute.contains(&(c.shape, c.action)));
        assert_eq!(atomic_index(c.shape, c.action), Some(i));
    }
    assert_eq!(atomic_index(Shape::Sphere, ActionType::Rotate), None);
    assert_eq!(atomic_index(Shape::Cube, ActionType::Contain), None);
}

#[test]
fn composite_vocab_by_brute_force() {
    let mut seen = BTreeSet::new();
    let mut triples = 0;
    for a in 0..N_ATOMIC {
        for b in 0..N_ATOMIC {
            for rel in BroadRelation::ALL {
                triples += 1;
                let c = CompositeClass::canonical(a, rel, b);
                assert_ne!(c.relation, BroadRelation::After);
                seen.insert((c.a, c.relation, c.b));
            }
        }
    }
    assert_eq!(triples, 588);
    assert_eq!(seen.len(), 301);
    let before = seen.iter().filter(|t| t.1 == BroadRelation::Before).count();
    let during = seen.iter().filter(|t| t.1 == BroadRelation::During).count();
    assert_eq!((before, during), (196, 105));
    assert_eq!((N_BEFORE, N_DURING, N_COMPOSITE), (196, 105, 301));

    let vocab = composite_vocab();
    assert_eq!(vocab.len(), 301);
    for (i, c) in vocab.iter().enumerate() {
        assert_eq!(c.index(), i);
        assert!(seen.contains(&(c.a, c.relation, c.b)));
    }
    let names: BTreeSet<String> = vocab.iter().map(|c| c.name()).collect();
    assert_eq!(names.len(), 301);
}

#[test]
fn after_is_stored_as_converse_before() {
    let rotate_cube = atomic_index(Shape::Cube, ActionType::Rotate).unwrap();
    let slide_sphere = atomic_index(Shape::Sphere, ActionType::Slide).unwrap();
    let c = CompositeClass::canonical(rotate_cube, BroadRelation::After, slide_sphere);
    assert_eq!(c.name(), "slide(sphere) before rotate(cube)");
    assert_eq!(c, CompositeClass::canonical(slide_sphere, BroadRelation::Before, rotate_cube));
    let d1 = CompositeClass::canonical(rotate_cube, BroadRelation::During, slide_sphere);
    let d2 = CompositeClass::canonical(slide_sphere, BroadRelation::During, rotate_cube);
    assert_eq!(d1, d2);
}
