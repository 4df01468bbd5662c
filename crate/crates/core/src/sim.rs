//! Kinematic replay of an action program into per-frame world state.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::camera::{CameraPose, CameraSchedule};
use crate::geometry::{Point2, Point3};
use crate::labels::{quantize_cell, GridCell};
use crate::program::{ActionInstance, ActionProgram, ActionType};
use crate::validate::validate_program;
use crate::world::{ObjectId, SceneConfig};
use crate::{Error, Result};

/// Turn applied by one rotate action.
pub const ROTATION_DEGREES: f64 = 90.0;

/// Collision samples per frame when sweeping a motion.
pub const PHASE_SUBSTEPS: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    /// `z` is the height above the plane.
    pub position: Point3,
    /// Heading about the vertical axis, degrees.
    pub orientation: f64,
    pub contained_by: Option<ObjectId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTimeline {
    /// `frames[t][id]`.
    pub frames: Vec<Vec<ObjectState>>,
    pub camera: Vec<CameraPose>,
    pub snitch_track: Vec<Point2>,
}

impl EpisodeTimeline {
    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn state(&self, id: ObjectId, t: usize) -> &ObjectState {
        &self.frames[t][id as usize]
    }
}

fn progress(action: &ActionInstance, time: f64) -> f64 {
    let span = f64::from(action.interval.end - action.interval.start);
    (time - f64::from(action.interval.start)) / span
}

/// Planar footprint center of the actor at fractional frame `time`, or
/// `None` during the horizontal (airborne) phase of a pick-place.
pub fn ground_footprint(action: &ActionInstance, time: f64) -> Option<Point2> {
    let (start, end) = (action.start_pose.position, action.end_pose.position);
    if time <= f64::from(action.interval.start) {
        return Some(start);
    }
    if time >= f64::from(action.interval.end) {
        return Some(end);
    }
    let f = progress(action, time);
    match action.action {
        ActionType::Rotate => Some(start),
        ActionType::Slide => Some(start.lerp(end, f)),
        ActionType::PickPlace | ActionType::Contain => {
            let phase = 3.0 * f;
            if phase <= 1.0 {
                Some(start)
            } else if phase >= 2.0 {
                Some(end)
            } else {
                None
            }
        }
    }
}

/// Actor pose at fractional frame `time`: `(position, orientation)`.
///
/// Slides interpolate linearly on the plane, rotations turn by 90 degrees in
/// place, and pick-place/contain run three equal phases: lift to
/// `lift_height`, carry horizontally, descend.
pub fn interpolate_pose_at(action: &ActionInstance, time: f64, lift_height: f64) -> (Point3, f64) {
    let (start, end) = (action.start_pose, action.end_pose);
    if time <= f64::from(action.interval.start) {
        return (start.position.with_height(0.0), start.orientation);
    }
    if time >= f64::from(action.interval.end) {
        return (end.position.with_height(0.0), end.orientation);
    }
    let f = progress(action, time);
    match action.action {
        ActionType::Rotate => (
            start.position.with_height(0.0),
            start.orientation + ROTATION_DEGREES * f,
        ),
        ActionType::Slide => (
            start.position.lerp(end.position, f).with_height(0.0),
            start.orientation,
        ),
        ActionType::PickPlace | ActionType::Contain => {
            let phase = 3.0 * f;
            let position = if phase <= 1.0 {
                start.position.with_height(lift_height * phase)
            } else if phase < 2.0 {
                start
                    .position
                    .lerp(end.position, phase - 1.0)
                    .with_height(lift_height)
            } else {
                end.position.with_height(lift_height * (3.0 - phase))
            };
            (position, start.orientation)
        }
    }
}

pub fn interpolate_pose(action: &ActionInstance, t: u32, lift_height: f64) -> (Point3, f64) {
    interpolate_pose_at(action, f64::from(t), lift_height)
}

/// Replays a validated program frame by frame.
pub fn replay(program: &ActionProgram, camera: &CameraSchedule) -> Result<EpisodeTimeline> {
    validate_program(program)?;
    let config = &program.config;
    let frames = config.frames as usize;
    if camera.poses.len() != frames {
        return Err(Error::InvalidProgram(alloc::format!(
            "camera schedule has {} poses for {} frames",
            camera.poses.len(),
            frames
        )));
    }
    let snitch = program
        .scene
        .snitch_id()
        .ok_or_else(|| Error::InvalidProgram("scene has no snitch".into()))?;

    let mut state: Vec<ObjectState> = program
        .scene
        .objects
        .iter()
        .map(|o| ObjectState {
            position: o.position.with_height(0.0),
            orientation: o.orientation,
            contained_by: None,
        })
        .collect();

    let mut timeline = EpisodeTimeline {
        frames: Vec::with_capacity(frames),
        camera: camera.poses.clone(),
        snitch_track: Vec::with_capacity(frames),
    };
    // Actions are sorted by (slot, start); a cursor walks the active window.
    let mut first_pending = 0usize;
    for t in 0..config.frames {
        while first_pending < program.actions.len()
            && program.actions[first_pending].interval.end < t
        {
            first_pending += 1;
        }
        let active = program.actions[first_pending..]
            .iter()
            .take_while(|a| a.slot * config.slot_len <= t)
            .filter(|a| a.interval.contains(t));

        let mut landings = Vec::new();
        for action in active {
            let actor = action.actor_id;
            if action.action == ActionType::PickPlace && action.interval.start == t {
                for s in state.iter_mut() {
                    if s.contained_by == Some(actor) {
                        s.contained_by = None;
                    }
                }
            }
            let (position, orientation) = interpolate_pose(action, t, config.lift_height);
            let s = &mut state[actor as usize];
            s.position = position;
            s.orientation = orientation;
            if action.action == ActionType::Contain && action.interval.end == t {
                landings.push((action.target_id.expect("validated"), actor));
            }
        }
        for (target, cone) in landings {
            state[target as usize].contained_by = Some(cone);
        }
        for id in 0..state.len() {
            if state[id].contained_by.is_some() {
                let mut root = id;
                while let Some(c) = state[root].contained_by {
                    root = c as usize;
                }
                state[id].position = state[root].position;
            }
        }
        timeline.snitch_track.push(state[snitch as usize].position.xy());
        timeline.frames.push(state.clone());
    }
    Ok(timeline)
}

/// Containers of `id` at frame `t`, innermost first.
pub fn containment_stack(timeline: &EpisodeTimeline, id: ObjectId, t: usize) -> Vec<ObjectId> {
    let frame = &timeline.frames[t];
    let mut stack = Vec::new();
    let mut current = id;
    while let Some(c) = frame[current as usize].contained_by {
        if stack.contains(&c) || stack.len() > frame.len() {
            break;
        }
        stack.push(c);
        current = c;
    }
    stack
}

/// Per-episode quantities used to bin localization results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosticAttributes {
    /// Last frame at which the snitch's plane position changed; 0 if it never moved.
    pub last_move_frame: u32,
    pub contained_at_end: bool,
    pub containment_depth: u32,
    /// Grid-cell Manhattan distance between the first and last snitch cells.
    pub displacement_l1: u32,
    pub n_objects: u32,
}

pub fn episode_attributes(
    timeline: &EpisodeTimeline,
    snitch: ObjectId,
    config: &SceneConfig,
) -> DiagnosticAttributes {
    let track = &timeline.snitch_track;
    let last_move_frame = (1..track.len())
        .rev()
        .find(|&t| track[t] != track[t - 1])
        .unwrap_or(0) as u32;
    let last = track.len() - 1;
    let depth = containment_stack(timeline, snitch, last).len() as u32;
    let cell = |p: Point2| -> GridCell {
        quantize_cell(p, config.grid_resolution, config.plane_half_extent)
            .expect("snitch stays on the plane")
    };
    let (a, b) = (cell(track[0]), cell(track[last]));
    DiagnosticAttributes {
        last_move_frame,
        contained_at_end: depth > 0,
        containment_depth: depth,
        displacement_l1: a.row.abs_diff(b.row) + a.col.abs_diff(b.col),
        n_objects: timeline.frames[0].len() as u32,
    }
}
