//! Independent program validator.
//!
//! Re-checks a program against the scheduling rules using its own event sweep
//! rather than the scheduler's bookkeeping: affordances, slot bounds, the
//! per-slot actor budget, pose continuity, and containment legality.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::geometry::Point2;
use crate::program::{can_contain, ActionProgram, ActionType};
use crate::sim::ROTATION_DEGREES;
use crate::world::{affords, ObjectId, Shape};
use crate::{Error, Result};

fn violation<T>(msg: String) -> Result<T> {
    Err(Error::InvalidProgram(msg))
}

pub fn validate_program(program: &ActionProgram) -> Result<()> {
    let config = &program.config;
    config.validate()?;
    let scene = &program.scene;
    let n = scene.len();

    for (i, o) in scene.objects.iter().enumerate() {
        if o.spec.id as usize != i {
            return violation(format!("object at index {i} has id {}", o.spec.id));
        }
        if !config.in_plane(o.position) {
            return violation(format!("object {i} spawned off the plane"));
        }
    }
    let snitches = scene
        .objects
        .iter()
        .filter(|o| o.spec.shape == Shape::Snitch)
        .count();
    if snitches != 1 {
        return violation(format!("scene has {snitches} snitches"));
    }
    if !scene.objects.iter().any(|o| o.spec.shape == Shape::Cone) {
        return violation("scene has no cone".into());
    }

    let k = config.actors_per_slot.resolve(n);
    let mut previous_key = None;
    let mut per_slot: Vec<BTreeSet<ObjectId>> = alloc::vec![BTreeSet::new(); config.n_slots() as usize];
    for (i, a) in program.actions.iter().enumerate() {
        let key = (a.slot, a.interval.start, a.actor_id);
        if previous_key.is_some_and(|p| p > key) {
            return violation(format!("action {i} out of (slot, start) order"));
        }
        previous_key = Some(key);
        if a.actor_id as usize >= n {
            return violation(format!("action {i}: unknown actor {}", a.actor_id));
        }
        if a.slot >= config.n_slots() {
            return violation(format!("action {i}: slot {} out of range", a.slot));
        }
        let lo = a.slot * config.slot_len;
        let hi = lo + config.slot_len - 1;
        if !(lo <= a.interval.start && a.interval.start < a.interval.end && a.interval.end <= hi) {
            return violation(format!("action {i}: interval {:?} outside slot {}", a.interval, a.slot));
        }
        if a.interval.end - a.interval.start < config.min_action_frames {
            return violation(format!("action {i}: shorter than {} frames", config.min_action_frames));
        }
        let spec = scene.spec(a.actor_id);
        if !affords(spec.shape, a.action) {
            return violation(format!("action {i}: {:?} cannot {:?}", spec.shape, a.action));
        }
        if !per_slot[a.slot as usize].insert(a.actor_id) {
            return violation(format!("action {i}: actor {} acts twice in slot {}", a.actor_id, a.slot));
        }
        if !config.in_plane(a.end_pose.position) {
            return violation(format!("action {i}: destination off the plane"));
        }
        match (a.action, a.target_id) {
            (ActionType::Contain, Some(t)) => {
                if t as usize >= n || !can_contain(spec, scene.spec(t)) {
                    return violation(format!("action {i}: illegal contain target {t}"));
                }
            }
            (ActionType::Contain, None) => return violation(format!("action {i}: contain without target")),
            (_, Some(_)) => return violation(format!("action {i}: only contain takes a target")),
            (_, None) => {}
        }
        let (s, e) = (a.start_pose, a.end_pose);
        let pose_ok = match a.action {
            ActionType::Rotate => s.position == e.position && e.orientation == s.orientation + ROTATION_DEGREES,
            _ => s.orientation == e.orientation,
        };
        if !pose_ok {
            return violation(format!("action {i}: end pose inconsistent with {:?}", a.action));
        }
    }
    for (slot, actors) in per_slot.iter().enumerate() {
        if actors.len() > k {
            return violation(format!("slot {slot}: {} actors exceed K = {k}", actors.len()));
        }
    }

    sweep(program)
}

/// Replays containment and rest poses through start/end events in time order.
fn sweep(program: &ActionProgram) -> Result<()> {
    let scene = &program.scene;
    let n = scene.len();
    let mut position: Vec<Point2> = scene.objects.iter().map(|o| o.position).collect();
    let mut orientation: Vec<f64> = scene.objects.iter().map(|o| o.orientation).collect();
    let mut parent: Vec<Option<ObjectId>> = alloc::vec![None; n];

    // (frame, 0 = end / 1 = start, action index); ends at a frame precede starts.
    let mut events: Vec<(u32, u8, usize)> = Vec::with_capacity(program.actions.len() * 2);
    for (i, a) in program.actions.iter().enumerate() {
        events.push((a.interval.start, 1, i));
        events.push((a.interval.end, 0, i));
    }
    events.sort_unstable();

    for (_, kind, i) in events {
        let a = &program.actions[i];
        let actor = a.actor_id as usize;
        if kind == 1 {
            if let Some(c) = parent[actor] {
                return violation(format!("action {i}: actor {actor} is contained by {c}"));
            }
            if a.start_pose.position != position[actor] || a.start_pose.orientation != orientation[actor] {
                return violation(format!("action {i}: start pose does not match the actor's rest pose"));
            }
            let containing = parent.contains(&Some(a.actor_id));
            if containing && !matches!(a.action, ActionType::Slide | ActionType::PickPlace) {
                return violation(format!("action {i}: containing cone may only slide or pick-place"));
            }
            if a.action == ActionType::PickPlace {
                for p in parent.iter_mut() {
                    if *p == Some(a.actor_id) {
                        *p = None;
                    }
                }
            }
            if let Some(t) = a.target_id {
                let busy = program
                    .actions
                    .iter()
                    .any(|b| b.actor_id == t && b.slot == a.slot);
                if busy {
                    return violation(format!("action {i}: contain target {t} moves in the same slot"));
                }
            }
        } else {
            if a.action == ActionType::Slide {
                for id in 0..n {
                    let mut cur = id;
                    while let Some(c) = parent[cur] {
                        if c as usize == actor {
                            position[id] = a.end_pose.position;
                            break;
                        }
                        cur = c as usize;
                    }
                }
            }
            if let Some(t) = a.target_id {
                let t = t as usize;
                if parent[t].is_some() {
                    return violation(format!("action {i}: target {t} already contained"));
                }
                if position[t] != a.end_pose.position {
                    return violation(format!("action {i}: cone does not land on its target"));
                }
                let mut cur = actor;
                while let Some(c) = parent[cur] {
                    if c as usize == t {
                        return violation(format!("action {i}: containment cycle"));
                    }
                    cur = c as usize;
                }
                parent[t] = Some(a.actor_id);
            }
            position[actor] = a.end_pose.position;
            orientation[actor] = a.end_pose.orientation;
        }
    }
    Ok(())
}
