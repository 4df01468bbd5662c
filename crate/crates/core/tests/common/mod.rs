#![allow(dead_code)]

use cater_core::camera::{camera_schedule, CameraSchedule};
use cater_core::geometry::{Point2, Pose2};
use cater_core::program::{ActionInstance, ActionProgram, ActionType, Interval};
use cater_core::rng::{stream, Stream};
use cater_core::world::{Color, Material, ObjectSpec, PlacedObject, Scene, SceneConfig, Shape, Size};

/// Scene from `(shape, size, x, y)` tuples; ids follow the slice order.
pub fn scene(objects: &[(Shape, Size, f64, f64)]) -> Scene {
    Scene {
        objects: objects
            .iter()
            .enumerate()
            .map(|(i, (shape, size, x, y))| PlacedObject {
                spec: ObjectSpec {
                    id: i as u32,
                    shape: *shape,
                    size: *size,
                    color: if *shape == Shape::Snitch { Color::Gold } else { Color::Red },
                    material: Material::Rubber,
                },
                position: Point2::new(*x, *y),
                orientation: 0.0,
            })
            .collect(),
    }
}

pub fn act(
    actor: u32,
    kind: ActionType,
    target: Option<u32>,
    (start, end): (u32, u32),
    from: (f64, f64),
    to: (f64, f64),
) -> ActionInstance {
    let config = SceneConfig::default();
    let orientation = 0.0;
    ActionInstance {
        actor_id: actor,
        action: kind,
        target_id: target,
        slot: start / config.slot_len,
        interval: Interval::new(start, end),
        start_pose: Pose2::new(Point2::new(from.0, from.1), orientation),
        end_pose: Pose2::new(
            Point2::new(to.0, to.1),
            if kind == ActionType::Rotate { orientation + 90.0 } else { orientation },
        ),
    }
}

pub fn program(scene: Scene, actions: Vec<ActionInstance>) -> ActionProgram {
    let mut p = ActionProgram {
        scene,
        actions,
        config: SceneConfig::default(),
        seed: 0,
    };
    p.sort_actions();
    p
}

pub fn static_camera(config: &SceneConfig) -> CameraSchedule {
    let mut rng = stream(0, Stream::Camera);
    camera_schedule(config.camera_mode, config, &mut rng).unwrap()
}

/// Large cone 0, medium cone 1, snitch 2: the medium cone covers the
/// snitch, the large cone covers both, slides them to the origin, then
/// lifts off again.
pub fn nested_program() -> ActionProgram {
    use ActionType::*;
    let s = scene(&[
        (Shape::Cone, Size::Large, -2.0, -2.0),
        (Shape::Cone, Size::Medium, 2.0, -2.0),
        (Shape::Snitch, Size::Medium, 2.0, 2.0),
    ]);
    program(
        s,
        vec![
            act(1, Contain, Some(2), (2, 20), (2.0, -2.0), (2.0, 2.0)),
            act(0, Contain, Some(1), (31, 50), (-2.0, -2.0), (2.0, 2.0)),
            act(0, Slide, None, (61, 80), (2.0, 2.0), (0.0, 0.0)),
            act(0, PickPlace, None, (91, 110), (0.0, 0.0), (-2.0, 2.0)),
        ],
    )
}
