//! Stateless reference replayer.
//!
//! Evaluates every object's state at every frame from the action list alone,
//! with no state carried between frames. Slow (roughly cubic in program
//! size) and only meant to cross-check [`crate::sim::replay`].

use alloc::vec::Vec;

use crate::geometry::{Point2, Point3};
use crate::program::{ActionInstance, ActionProgram, ActionType};
use crate::sim::{interpolate_pose, ObjectState};
use crate::world::ObjectId;

/// Container of `id` at frame `t`: the most recent cone to land on it that
/// has not lifted off since.
pub fn container_at(program: &ActionProgram, id: ObjectId, t: u32) -> Option<ObjectId> {
    let landing = program
        .actions
        .iter()
        .filter(|a| a.action == ActionType::Contain && a.target_id == Some(id) && a.interval.end <= t)
        .max_by_key(|a| a.interval.end)?;
    let cone = landing.actor_id;
    let lifted = program.actions.iter().any(|a| {
        a.actor_id == cone
            && a.action == ActionType::PickPlace
            && a.interval.start > landing.interval.end
            && a.interval.start <= t
    });
    (!lifted).then_some(cone)
}

/// Frame at which `id` was last released from a container, with that container.
fn last_release(program: &ActionProgram, id: ObjectId, t: u32) -> Option<(u32, ObjectId)> {
    program
        .actions
        .iter()
        .filter(|a| a.action == ActionType::PickPlace && a.interval.start <= t)
        .filter(|a| container_at(program, id, a.interval.start.saturating_sub(1)) == Some(a.actor_id))
        .filter(|a| a.interval.start > 0)
        .map(|a| (a.interval.start, a.actor_id))
        .max_by_key(|(s, _)| *s)
}

fn last_own_action(program: &ActionProgram, id: ObjectId, t: u32) -> Option<&ActionInstance> {
    program
        .actions
        .iter()
        .filter(|a| a.actor_id == id && a.interval.start <= t)
        .max_by_key(|a| a.interval.start)
}

/// Position of `id` at frame `t`, evaluated recursively from scratch.
pub fn position_at(program: &ActionProgram, id: ObjectId, t: u32) -> Point3 {
    let mut root = id;
    while let Some(c) = container_at(program, root, t) {
        root = c;
    }
    if root != id {
        return position_at(program, root, t);
    }
    let own = last_own_action(program, id, t);
    let release = last_release(program, id, t);
    match (own, release) {
        (Some(a), Some((r, _))) if a.interval.start >= r => interpolate_pose(a, t, program.config.lift_height).0,
        (_, Some((r, cone))) => position_at(program, cone, r),
        (Some(a), None) => interpolate_pose(a, t, program.config.lift_height).0,
        (None, None) => {
            let p: Point2 = program.scene.objects[id as usize].position;
            p.with_height(0.0)
        }
    }
}

pub fn orientation_at(program: &ActionProgram, id: ObjectId, t: u32) -> f64 {
    match last_own_action(program, id, t) {
        Some(a) => interpolate_pose(a, t, program.config.lift_height).1,
        None => program.scene.objects[id as usize].orientation,
    }
}

pub fn state_at(program: &ActionProgram, id: ObjectId, t: u32) -> ObjectState {
    ObjectState {
        position: position_at(program, id, t),
        orientation: orientation_at(program, id, t),
        contained_by: container_at(program, id, t),
    }
}

/// All frames, `[t][id]`.
pub fn brute_force_frames(program: &ActionProgram) -> Vec<Vec<ObjectState>> {
    (0..program.config.frames)
        .map(|t| {
            (0..program.scene.len() as ObjectId)
                .map(|id| state_at(program, id, t))
                .collect()
        })
        .collect()
}
