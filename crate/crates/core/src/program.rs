//! Action scheduling: fills each slot of an episode with afforded,
//! collision-free actions.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{Point2, Pose2};
use crate::sim::{ground_footprint, PHASE_SUBSTEPS, ROTATION_DEGREES};
use crate::world::{affords, ObjectId, ObjectSpec, Scene, SceneConfig, Shape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionType {
    Rotate,
    PickPlace,
    Slide,
    Contain,
}

impl ActionType {
    pub const ALL: [ActionType; 4] = [
        ActionType::Rotate,
        ActionType::PickPlace,
        ActionType::Slide,
        ActionType::Contain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActionType::Rotate => "rotate",
            ActionType::PickPlace => "pick_place",
            ActionType::Slide => "slide",
            ActionType::Contain => "contain",
        }
    }

    /// Pick-place and contain leave the ground for the middle third.
    pub fn is_airborne(self) -> bool {
        matches!(self, ActionType::PickPlace | ActionType::Contain)
    }
}

/// Inclusive frame interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub start: u32,
    pub end: u32,
}

impl Interval {
    pub const fn new(start: u32, end: u32) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, t: u32) -> bool {
        self.start <= t && t <= self.end
    }

    pub fn duration(&self) -> u32 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionInstance {
    pub actor_id: ObjectId,
    pub action: ActionType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_id: Option<ObjectId>,
    pub slot: u32,
    pub interval: Interval,
    pub start_pose: Pose2,
    pub end_pose: Pose2,
}

/// The full schedule of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionProgram {
    pub scene: Scene,
    /// Ordered by `(slot, interval.start, actor_id)`.
    pub actions: Vec<ActionInstance>,
    pub config: SceneConfig,
    pub seed: u64,
}

impl ActionProgram {
    pub fn sort_actions(&mut self) {
        self.actions
            .sort_by_key(|a| (a.slot, a.interval.start, a.actor_id));
    }
}

/// Whether `target` may be covered by cone `container`.
pub fn can_contain(container: &ObjectSpec, target: &ObjectSpec) -> bool {
    if container.shape != Shape::Cone || container.id == target.id {
        return false;
    }
    match target.shape {
        Shape::Sphere | Shape::Snitch => target.radius() <= container.radius(),
        Shape::Cone => target.radius() < container.radius(),
        Shape::Cube | Shape::Cylinder => false,
    }
}

/// How a collision body occupies the plane during a slot.
#[derive(Debug, Clone, PartialEq)]
pub enum Motion {
    Static(Point2),
    Moving(ActionInstance),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Body {
    pub id: ObjectId,
    pub radius: f64,
    pub motion: Motion,
}

impl Body {
    /// Ground footprint center at fractional frame `time`; `None` while airborne.
    pub fn footprint_at(&self, time: f64) -> Option<Point2> {
        match &self.motion {
            Motion::Static(p) => Some(*p),
            Motion::Moving(action) => ground_footprint(action, time),
        }
    }
}

/// A swept disc sampled over time; `None` samples are airborne and exempt.
#[derive(Debug, Clone, PartialEq)]
pub struct SweptPath {
    pub radius: f64,
    pub samples: Vec<(f64, Option<Point2>)>,
}

impl SweptPath {
    /// Samples `action`'s footprint over `[from, to]` at `PHASE_SUBSTEPS` points per frame.
    pub fn of_action(action: &ActionInstance, radius: f64, from: u32, to: u32) -> Self {
        let steps = (to - from) * PHASE_SUBSTEPS;
        let samples = (0..=steps)
            .map(|i| {
                let time = from as f64 + i as f64 / PHASE_SUBSTEPS as f64;
                (time, ground_footprint(action, time))
            })
            .collect();
        Self { radius, samples }
    }
}

/// The world as seen by a proposal: rest state at the start of the slot plus
/// every body's motion accepted so far in this slot.
#[derive(Debug, Clone)]
pub struct SlotSnapshot<'a> {
    pub config: &'a SceneConfig,
    pub specs: Vec<ObjectSpec>,
    pub slot: u32,
    pub slot_start: u32,
    pub slot_end: u32,
    /// Rest poses at the start of the slot.
    pub poses: Vec<Pose2>,
    /// Containment links at the start of the slot.
    pub contained_by: Vec<Option<ObjectId>>,
    pub bodies: Vec<Body>,
    acted: Vec<bool>,
    targeted: Vec<bool>,
}

impl<'a> SlotSnapshot<'a> {
    pub fn new(
        config: &'a SceneConfig,
        specs: Vec<ObjectSpec>,
        slot: u32,
        poses: Vec<Pose2>,
        contained_by: Vec<Option<ObjectId>>,
    ) -> Self {
        let n = specs.len();
        let bodies = specs
            .iter()
            .filter(|s| contained_by[s.id as usize].is_none())
            .map(|s| Body {
                id: s.id,
                radius: s.radius(),
                motion: Motion::Static(poses[s.id as usize].position),
            })
            .collect();
        let slot_start = slot * config.slot_len;
        Self {
            config,
            specs,
            slot,
            slot_start,
            slot_end: slot_start + config.slot_len - 1,
            poses,
            contained_by,
            bodies,
            acted: alloc::vec![false; n],
            targeted: alloc::vec![false; n],
        }
    }

    pub fn is_containing(&self, id: ObjectId) -> bool {
        self.contained_by.contains(&Some(id))
    }

    /// Free to act: uncontained at slot start, not yet acted, not covered this slot.
    pub fn can_act(&self, id: ObjectId) -> bool {
        let i = id as usize;
        self.contained_by[i].is_none() && !self.acted[i] && !self.targeted[i]
    }

    pub fn contain_targets(&self, actor: ObjectId) -> Vec<ObjectId> {
        if self.is_containing(actor) {
            return Vec::new();
        }
        let cone = &self.specs[actor as usize];
        self.specs
            .iter()
            .filter(|t| {
                let i = t.id as usize;
                self.contained_by[i].is_none()
                    && !self.acted[i]
                    && !self.targeted[i]
                    && can_contain(cone, t)
            })
            .map(|t| t.id)
            .collect()
    }

    /// Actions the actor may attempt this slot.
    pub fn allowed_actions(&self, actor: ObjectId) -> Vec<ActionType> {
        let shape = self.specs[actor as usize].shape;
        let containing = self.is_containing(actor);
        ActionType::ALL
            .into_iter()
            .filter(|a| affords(shape, *a))
            .filter(|a| !containing || matches!(a, ActionType::Slide | ActionType::PickPlace))
            .filter(|a| *a != ActionType::Contain || !self.contain_targets(actor).is_empty())
            .collect()
    }

    /// Records an accepted action so later proposals avoid it.
    pub fn accept(&mut self, action: &ActionInstance) {
        let actor = action.actor_id;
        self.acted[actor as usize] = true;
        if let Some(body) = self.bodies.iter_mut().find(|b| b.id == actor) {
            body.motion = Motion::Moving(action.clone());
        }
        match action.action {
            ActionType::Contain => {
                let target = action.target_id.expect("contain has a target");
                self.targeted[target as usize] = true;
            }
            ActionType::PickPlace => {
                // Lifting a cone leaves its direct contents behind as new bodies.
                for (i, c) in self.contained_by.iter().enumerate() {
                    if *c == Some(actor) {
                        let spec = &self.specs[i];
                        self.bodies.push(Body {
                            id: spec.id,
                            radius: spec.radius(),
                            motion: Motion::Static(action.start_pose.position),
                        });
                    }
                }
            }
            _ => {}
        }
    }
}

/// True iff at every non-airborne sample the path keeps at least the sum of
/// radii from every body not listed in `exempt`.
pub fn collision_free(path: &SweptPath, snapshot: &SlotSnapshot<'_>, exempt: &[ObjectId]) -> bool {
    let bodies: Vec<&Body> = snapshot
        .bodies
        .iter()
        .filter(|b| !exempt.contains(&b.id))
        .collect();
    path.samples.iter().all(|(time, at)| {
        let Some(p) = at else { return true };
        bodies.iter().all(|b| match b.footprint_at(*time) {
            Some(q) => {
                let (dx, dy) = (p.x - q.x, p.y - q.y);
                let min = path.radius + b.radius;
                dx * dx + dy * dy >= min * min
            }
            None => true,
        })
    })
}

fn random_interval<R: Rng + ?Sized>(snapshot: &SlotSnapshot<'_>, rng: &mut R) -> Interval {
    let min = snapshot.config.min_action_frames;
    let start = rng.random_range(snapshot.slot_start..=snapshot.slot_end - min);
    let end = rng.random_range(start + min..=snapshot.slot_end);
    Interval::new(start, end)
}

fn random_destination<R: Rng + ?Sized>(from: Point2, config: &SceneConfig, rng: &mut R) -> Point2 {
    let distance = rng.random_range(config.move_min..=config.move_max);
    let (s, c) = libm::sincos(rng.random_range(0.0..TAU));
    Point2::new(from.x + distance * c, from.y + distance * s)
}

/// Tries to build one collision-free action of the given kind.
pub fn propose_action_of<R: Rng + ?Sized>(
    kind: ActionType,
    actor: ObjectId,
    snapshot: &SlotSnapshot<'_>,
    rng: &mut R,
) -> Option<ActionInstance> {
    let config = snapshot.config;
    let spec = &snapshot.specs[actor as usize];
    if !snapshot.can_act(actor) || !affords(spec.shape, kind) {
        return None;
    }
    let start_pose = snapshot.poses[actor as usize];
    let targets = match kind {
        ActionType::Contain => {
            let t = snapshot.contain_targets(actor);
            if t.is_empty() {
                return None;
            }
            t
        }
        _ => Vec::new(),
    };
    if snapshot.is_containing(actor) && !matches!(kind, ActionType::Slide | ActionType::PickPlace) {
        return None;
    }

    for _ in 0..config.proposal_attempts {
        let interval = random_interval(snapshot, rng);
        let (end_pose, target_id) = match kind {
            ActionType::Rotate => (
                Pose2::new(start_pose.position, start_pose.orientation + ROTATION_DEGREES),
                None,
            ),
            ActionType::Slide | ActionType::PickPlace => {
                let dest = random_destination(start_pose.position, config, rng);
                if !config.in_plane(dest) {
                    continue;
                }
                (Pose2::new(dest, start_pose.orientation), None)
            }
            ActionType::Contain => {
                let target = *targets.choose(rng).expect("non-empty");
                let dest = snapshot.poses[target as usize].position;
                (Pose2::new(dest, start_pose.orientation), Some(target))
            }
        };
        let action = ActionInstance {
            actor_id: actor,
            action: kind,
            target_id,
            slot: snapshot.slot,
            interval,
            start_pose,
            end_pose,
        };
        let path = SweptPath::of_action(&action, spec.radius(), snapshot.slot_start, snapshot.slot_end);
        let exempt: &[ObjectId] = match target_id {
            Some(t) => &[actor, t],
            None => &[actor],
        };
        if collision_free(&path, snapshot, exempt) {
            return Some(action);
        }
    }
    None
}

/// Draws an allowed action type for `actor` and tries to realize it.
pub fn propose_action<R: Rng + ?Sized>(
    actor: ObjectId,
    snapshot: &SlotSnapshot<'_>,
    rng: &mut R,
) -> Option<ActionInstance> {
    if !snapshot.can_act(actor) {
        return None;
    }
    let allowed = snapshot.allowed_actions(actor);
    let kind = *allowed.choose(rng)?;
    propose_action_of(kind, actor, snapshot, rng)
}

/// Rest state carried between slots while scheduling.
#[derive(Debug, Clone)]
struct RestState {
    poses: Vec<Pose2>,
    contained_by: Vec<Option<ObjectId>>,
}

impl RestState {
    fn has_ancestor(&self, mut id: ObjectId, ancestor: ObjectId) -> bool {
        while let Some(c) = self.contained_by[id as usize] {
            if c == ancestor {
                return true;
            }
            id = c;
        }
        false
    }

    fn apply(&mut self, action: &ActionInstance) {
        let actor = action.actor_id;
        match action.action {
            ActionType::Rotate => {}
            ActionType::Slide => {
                let end = action.end_pose.position;
                for id in 0..self.poses.len() as ObjectId {
                    if self.has_ancestor(id, actor) {
                        self.poses[id as usize].position = end;
                    }
                }
            }
            ActionType::PickPlace => {
                for c in self.contained_by.iter_mut() {
                    if *c == Some(actor) {
                        *c = None;
                    }
                }
            }
            ActionType::Contain => {
                let target = action.target_id.expect("contain has a target");
                self.contained_by[target as usize] = Some(actor);
            }
        }
        self.poses[actor as usize] = action.end_pose;
    }
}

/// Schedules every slot of an episode.
///
/// At the start of each slot up to `K` uncontained objects are visited in
/// random order and each tries one afforded action, checked against the
/// motions already accepted in that slot.
pub fn schedule_episode<R: Rng + ?Sized>(
    scene: &Scene,
    config: &SceneConfig,
    seed: u64,
    rng: &mut R,
) -> ActionProgram {
    let specs: Vec<ObjectSpec> = scene.objects.iter().map(|o| o.spec).collect();
    let n = specs.len();
    let k = config.actors_per_slot.resolve(n);
    let mut rest = RestState {
        poses: scene
            .objects
            .iter()
            .map(|o| Pose2::new(o.position, o.orientation))
            .collect(),
        contained_by: alloc::vec![None; n],
    };
    let mut actions = Vec::new();

    for slot in 0..config.n_slots() {
        let mut snapshot = SlotSnapshot::new(
            config,
            specs.clone(),
            slot,
            rest.poses.clone(),
            rest.contained_by.clone(),
        );
        let mut order: Vec<ObjectId> = (0..n as ObjectId)
            .filter(|id| rest.contained_by[*id as usize].is_none())
            .collect();
        order.shuffle(rng);
        order.truncate(k);

        let mut accepted = Vec::new();
        for actor in order {
            if let Some(action) = propose_action(actor, &snapshot, rng) {
                snapshot.accept(&action);
                accepted.push(action);
            }
        }
        for action in &accepted {
            rest.apply(action);
        }
        actions.extend(accepted);
    }

    let mut program = ActionProgram {
        scene: scene.clone(),
        actions,
        config: config.clone(),
        seed,
    };
    program.sort_actions();
    program
}
