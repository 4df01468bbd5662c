//! The object universe: shapes, appearance, affordances, footprint geometry,
//! scene configuration and initial spawning.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{Point2, Point3};
use crate::program::ActionType;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Cube,
    Sphere,
    Cylinder,
    Cone,
    Snitch,
}

impl Shape {
    pub const ALL: [Shape; 5] = [
        Shape::Cube,
        Shape::Sphere,
        Shape::Cylinder,
        Shape::Cone,
        Shape::Snitch,
    ];

    /// Shapes drawn for the random (non-snitch) part of a scene.
    pub const RANDOM: [Shape; 4] = [Shape::Cube, Shape::Sphere, Shape::Cylinder, Shape::Cone];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Cube => "cube",
            Shape::Sphere => "sphere",
            Shape::Cylinder => "cylinder",
            Shape::Cone => "cone",
            Shape::Snitch => "snitch",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Size {
    Small,
    Medium,
    Large,
}

impl Size {
    pub const ALL: [Size; 3] = [Size::Small, Size::Medium, Size::Large];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Color {
    Gray,
    Red,
    Blue,
    Green,
    Brown,
    Purple,
    Cyan,
    Yellow,
    /// Reserved for the snitch.
    Gold,
}

impl Color {
    /// The eight colors random objects are drawn from.
    pub const PALETTE: [Color; 8] = [
        Color::Gray,
        Color::Red,
        Color::Blue,
        Color::Green,
        Color::Brown,
        Color::Purple,
        Color::Cyan,
        Color::Yellow,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Material {
    Rubber,
    Metal,
}

pub type ObjectId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub id: ObjectId,
    pub shape: Shape,
    pub size: Size,
    pub color: Color,
    pub material: Material,
}

impl ObjectSpec {
    pub fn snitch(id: ObjectId) -> Self {
        Self {
            id,
            shape: Shape::Snitch,
            size: Size::Medium,
            color: Color::Gold,
            material: Material::Metal,
        }
    }

    pub fn radius(&self) -> f64 {
        footprint_radius(self.shape, self.size)
    }
}

/// Actions each shape can perform, in `ActionType` order.
pub fn affordances(shape: Shape) -> &'static [ActionType] {
    use ActionType::*;
    match shape {
        Shape::Cube | Shape::Cylinder | Shape::Snitch => &[Rotate, PickPlace, Slide],
        Shape::Sphere => &[PickPlace, Slide],
        Shape::Cone => &[PickPlace, Slide, Contain],
    }
}

pub fn affords(shape: Shape, action: ActionType) -> bool {
    affordances(shape).contains(&action)
}

/// Radius of the collision disc on the ground plane, in plane units.
pub fn footprint_radius(_shape: Shape, size: Size) -> f64 {
    match size {
        Size::Small => 0.35,
        Size::Medium => 0.525,
        Size::Large => 0.70,
    }
}

/// `K`, the number of objects considered for an action in each slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActorsPerSlot {
    Fixed(u32),
    All,
}

impl ActorsPerSlot {
    pub fn resolve(self, n_objects: usize) -> usize {
        match self {
            ActorsPerSlot::Fixed(k) => (k as usize).min(n_objects),
            ActorsPerSlot::All => n_objects,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CameraMode {
    Static,
    Moving,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub n_objects_min: u32,
    pub n_objects_max: u32,
    pub actors_per_slot: ActorsPerSlot,
    pub frames: u32,
    pub slot_len: u32,
    pub fps: u32,
    pub plane_half_extent: f64,
    pub grid_resolution: u32,
    pub camera_mode: CameraMode,
    pub seed: u64,
    /// Shortest action, as `end - start` in frames.
    pub min_action_frames: u32,
    /// Apex height of pick-place and contain motions.
    pub lift_height: f64,
    /// Range of the planar displacement drawn for slide and pick-place.
    pub move_min: f64,
    pub move_max: f64,
    /// Collision-free proposals tried per actor before giving up.
    pub proposal_attempts: u32,
    /// Rejection-sampling attempts per object when spawning.
    pub placement_attempts: u32,
    pub static_camera: Point3,
    pub vertical_fov_deg: f64,
    pub image_width: u32,
    pub image_height: u32,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            n_objects_min: 5,
            n_objects_max: 10,
            actors_per_slot: ActorsPerSlot::Fixed(2),
            frames: 300,
            slot_len: 30,
            fps: 24,
            plane_half_extent: 3.0,
            grid_resolution: 6,
            camera_mode: CameraMode::Static,
            seed: 0,
            min_action_frames: 6,
            lift_height: 2.0,
            move_min: 0.5,
            move_max: 3.0,
            proposal_attempts: 20,
            placement_attempts: 1000,
            static_camera: Point3::new(7.5, -6.5, 5.3),
            vertical_fov_deg: 40.0,
            image_width: 320,
            image_height: 240,
        }
    }
}

impl SceneConfig {
    /// Few actors per slot, for the action recognition tasks.
    pub fn atomic() -> Self {
        Self::default()
    }

    /// Every object may act in every slot, for snitch localization.
    pub fn localization() -> Self {
        Self {
            actors_per_slot: ActorsPerSlot::All,
            ..Self::default()
        }
    }

    pub fn n_slots(&self) -> u32 {
        self.frames / self.slot_len
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: alloc::string::String| Err(Error::InvalidConfig(msg));
        if self.frames == 0 || self.slot_len == 0 {
            return fail(format!("frames ({}) and slot_len ({}) must be positive", self.frames, self.slot_len));
        }
        if !self.frames.is_multiple_of(self.slot_len) {
            return fail(format!("frames ({}) not divisible by slot_len ({})", self.frames, self.slot_len));
        }
        if self.min_action_frames == 0 || self.min_action_frames >= self.slot_len {
            return fail(format!(
                "min_action_frames ({}) must lie in [1, slot_len)",
                self.min_action_frames
            ));
        }
        if self.n_objects_min < 2 {
            return fail("a scene needs at least a snitch and a cone (n_objects_min >= 2)".into());
        }
        if self.n_objects_min > self.n_objects_max {
            return fail(format!(
                "n_objects_min ({}) exceeds n_objects_max ({})",
                self.n_objects_min, self.n_objects_max
            ));
        }
        if self.actors_per_slot == ActorsPerSlot::Fixed(0) {
            return fail("actors_per_slot must be at least 1".into());
        }
        if !(self.plane_half_extent > footprint_radius(Shape::Cone, Size::Large)) {
            return fail(format!("plane_half_extent {} too small", self.plane_half_extent));
        }
        if self.grid_resolution == 0 {
            return fail("grid_resolution must be positive".into());
        }
        if self.fps == 0 {
            return fail("fps must be positive".into());
        }
        if !(self.lift_height > 0.0) {
            return fail("lift_height must be positive".into());
        }
        if !(self.move_min >= 0.0 && self.move_min <= self.move_max && self.move_max > 0.0) {
            return fail(format!("invalid move range [{}, {}]", self.move_min, self.move_max));
        }
        if self.proposal_attempts == 0 || self.placement_attempts == 0 {
            return fail("attempt budgets must be positive".into());
        }
        if !(self.vertical_fov_deg > 0.0 && self.vertical_fov_deg < 180.0) {
            return fail(format!("vertical_fov_deg {} outside (0, 180)", self.vertical_fov_deg));
        }
        if self.image_width == 0 || self.image_height == 0 {
            return fail("image dimensions must be positive".into());
        }
        if !(self.static_camera.z > 0.0) {
            return fail("static camera must sit above the ground plane".into());
        }
        Ok(())
    }

    /// Whether a center lies on the plane.
    pub fn in_plane(&self, p: Point2) -> bool {
        let h = self.plane_half_extent;
        p.x >= -h && p.x <= h && p.y >= -h && p.y <= h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedObject {
    pub spec: ObjectSpec,
    pub position: Point2,
    pub orientation: f64,
}

/// Objects at frame 0. Object ids equal their index in `objects`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub objects: Vec<PlacedObject>,
}

impl Scene {
    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn spec(&self, id: ObjectId) -> &ObjectSpec {
        &self.objects[id as usize].spec
    }

    pub fn snitch_id(&self) -> Option<ObjectId> {
        self.objects
            .iter()
            .find(|o| o.spec.shape == Shape::Snitch)
            .map(|o| o.spec.id)
    }
}

fn random_spec<R: Rng + ?Sized>(id: ObjectId, shape: Shape, rng: &mut R) -> ObjectSpec {
    ObjectSpec {
        id,
        shape,
        size: *Size::ALL.choose(rng).expect("non-empty"),
        color: *Color::PALETTE.choose(rng).expect("non-empty"),
        material: if rng.random_bool(0.5) {
            Material::Metal
        } else {
            Material::Rubber
        },
    }
}

/// Spawns a random scene: one snitch, at least one cone, and random objects
/// up to `N`, placed without overlapping footprints.
pub fn spawn_scene<R: Rng + ?Sized>(config: &SceneConfig, rng: &mut R) -> Result<Scene> {
    config.validate()?;
    let n = rng.random_range(config.n_objects_min..=config.n_objects_max) as usize;

    let mut specs = Vec::with_capacity(n);
    specs.push(ObjectSpec::snitch(0));
    specs.push(random_spec(1, Shape::Cone, rng));
    for id in 2..n {
        let shape = *Shape::RANDOM.choose(rng).expect("non-empty");
        specs.push(random_spec(id as ObjectId, shape, rng));
    }

    let h = config.plane_half_extent;
    let mut objects: Vec<PlacedObject> = Vec::with_capacity(n);
    for (index, spec) in specs.into_iter().enumerate() {
        let r = spec.radius();
        let mut placed = None;
        for _ in 0..config.placement_attempts {
            let p = Point2::new(rng.random_range(-h + r..=h - r), rng.random_range(-h + r..=h - r));
            let free = objects
                .iter()
                .all(|o| o.position.distance(p) >= o.spec.radius() + r);
            if free {
                placed = Some(p);
                break;
            }
        }
        let position = placed.ok_or(Error::Placement {
            object_index: index,
            attempts: config.placement_attempts,
        })?;
        let orientation = rng.random_range(0.0..360.0);
        objects.push(PlacedObject {
            spec,
            position,
            orientation,
        });
    }
    Ok(Scene { objects })
}
