//! Camera schedules, pinhole projection, and the image/ground homography.

use alloc::vec::Vec;

use nalgebra::{Matrix3, Vector3};
use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{Point2, Point3};
use crate::world::{CameraMode, SceneConfig};
use crate::{Error, Result};

/// Horizontal coordinates moving cameras visit.
pub const WAYPOINT_XY: [f64; 2] = [-10.0, 10.0];
/// Heights moving cameras visit.
pub const WAYPOINT_Z: [f64; 3] = [8.0, 10.0, 12.0];
/// Shared first viewpoint of every moving-camera episode.
pub const MOVING_START: Point3 = Point3::new(10.0, -10.0, 10.0);

/// Largest tolerated `|H|_F * |H^-1|_F` for the ground homography.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub location: Point3,
    pub look_at: Point3,
    pub up: Point3,
}

impl CameraPose {
    /// A camera at `location` aimed at the world origin with `+z` up.
    pub fn looking_at_origin(location: Point3) -> Self {
        Self {
            location,
            look_at: Point3::new(0.0, 0.0, 0.0),
            up: Point3::new(0.0, 0.0, 1.0),
        }
    }

    /// Orthonormal `(right, up, forward)` camera axes in world coordinates.
    fn basis(&self) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
        let forward = (v(self.look_at) - v(self.location)).normalize();
        let mut right = forward.cross(&v(self.up));
        if right.norm() < 1e-12 {
            right = Vector3::new(1.0, 0.0, 0.0);
        }
        let right = right.normalize();
        let up = right.cross(&forward);
        (right, up, forward)
    }
}

fn v(p: Point3) -> Vector3<f64> {
    Vector3::new(p.x, p.y, p.z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub width: u32,
    pub height: u32,
    pub vertical_fov_deg: f64,
}

impl Default for Intrinsics {
    fn default() -> Self {
        Self {
            width: 320,
            height: 240,
            vertical_fov_deg: 40.0,
        }
    }
}

impl Intrinsics {
    pub fn from_config(config: &SceneConfig) -> Self {
        Self {
            width: config.image_width,
            height: config.image_height,
            vertical_fov_deg: config.vertical_fov_deg,
        }
    }

    pub fn focal_px(&self) -> f64 {
        let half = (self.vertical_fov_deg * 0.5).to_radians();
        0.5 * f64::from(self.height) / libm::tan(half)
    }

    pub fn principal_point(&self) -> Pixel {
        Pixel {
            u: 0.5 * f64::from(self.width),
            v: 0.5 * f64::from(self.height),
        }
    }

    pub fn contains(&self, px: Pixel) -> bool {
        px.u >= 0.0 && px.v >= 0.0 && px.u <= f64::from(self.width) && px.v <= f64::from(self.height)
    }
}

/// Image coordinates: `u` to the right, `v` down, origin at the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraSchedule {
    pub mode: CameraMode,
    /// Static: one location. Moving: one location per slot boundary.
    pub waypoints: Vec<Point3>,
    pub poses: Vec<CameraPose>,
}

/// The 12 locations a moving camera may visit.
pub fn waypoint_set() -> Vec<Point3> {
    let mut out = Vec::with_capacity(12);
    for x in WAYPOINT_XY {
        for y in WAYPOINT_XY {
            for z in WAYPOINT_Z {
                out.push(Point3::new(x, y, z));
            }
        }
    }
    out
}

/// Consecutive waypoints may not change both horizontal coordinates.
pub fn waypoint_step_allowed(from: Point3, to: Point3) -> bool {
    from.x == to.x || from.y == to.y
}

impl CameraSchedule {
    /// Rebuilds per-frame poses from stored waypoints.
    pub fn from_waypoints(mode: CameraMode, waypoints: Vec<Point3>, config: &SceneConfig) -> Result<Self> {
        let frames = config.frames as usize;
        let poses = match mode {
            CameraMode::Static => {
                let [location] = waypoints[..] else {
                    return Err(Error::InvalidProgram("static camera needs exactly one waypoint".into()));
                };
                alloc::vec![CameraPose::looking_at_origin(location); frames]
            }
            CameraMode::Moving => {
                if waypoints.len() != config.n_slots() as usize + 1 {
                    return Err(Error::InvalidProgram(alloc::format!(
                        "moving camera needs {} waypoints, got {}",
                        config.n_slots() + 1,
                        waypoints.len()
                    )));
                }
                let len = config.slot_len;
                (0..config.frames)
                    .map(|t| {
                        let (k, i) = ((t / len) as usize, t % len);
                        let f = f64::from(i) / f64::from(len);
                        CameraPose::looking_at_origin(waypoints[k].lerp(waypoints[k + 1], f))
                    })
                    .collect()
            }
        };
        if poses.iter().any(|p| v(p.location).norm() == 0.0) {
            return Err(Error::InvalidProgram("camera located at the origin".into()));
        }
        Ok(Self {
            mode,
            waypoints,
            poses,
        })
    }
}

/// Draws the camera schedule of one episode.
pub fn camera_schedule<R: Rng + ?Sized>(
    mode: CameraMode,
    config: &SceneConfig,
    rng: &mut R,
) -> Result<CameraSchedule> {
    let waypoints = match mode {
        CameraMode::Static => alloc::vec![config.static_camera],
        CameraMode::Moving => {
            let all = waypoint_set();
            let mut current = MOVING_START;
            let mut out = alloc::vec![current];
            for _ in 0..config.n_slots() {
                let next: Vec<Point3> = all
                    .iter()
                    .copied()
                    .filter(|w| waypoint_step_allowed(current, *w))
                    .collect();
                current = *next.choose(rng).expect("at least the current location");
                out.push(current);
            }
            out
        }
    };
    CameraSchedule::from_waypoints(mode, waypoints, config)
}

/// Pinhole projection with the principal point at the image center.
pub fn project(point: Point3, pose: &CameraPose, intrinsics: &Intrinsics) -> Result<Pixel> {
    let (right, up, forward) = pose.basis();
    let d = v(point) - v(pose.location);
    let depth = d.dot(&forward);
    if !(depth > 1e-9) {
        return Err(Error::BehindCamera);
    }
    let f = intrinsics.focal_px();
    let c = intrinsics.principal_point();
    Ok(Pixel {
        u: c.u + f * d.dot(&right) / depth,
        v: c.v - f * d.dot(&up) / depth,
    })
}

/// Axis-aligned image box of an upright object footprint of `radius`,
/// treated as a `2r x 2r x 2r` block resting at `base`.
pub fn project_object_box(
    base: Point3,
    radius: f64,
    pose: &CameraPose,
    intrinsics: &Intrinsics,
) -> Result<[f64; 4]> {
    let mut bbox = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for dx in [-radius, radius] {
        for dy in [-radius, radius] {
            for dz in [0.0, 2.0 * radius] {
                let px = project(Point3::new(base.x + dx, base.y + dy, base.z + dz), pose, intrinsics)?;
                bbox[0] = bbox[0].min(px.u);
                bbox[1] = bbox[1].min(px.v);
                bbox[2] = bbox[2].max(px.u);
                bbox[3] = bbox[3].max(px.v);
            }
        }
    }
    Ok(bbox)
}

/// Homography between the `z = 0` plane and the image.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundHomography {
    /// Maps homogeneous ground points `(x, y, 1)` to homogeneous pixels.
    pub matrix: Matrix3<f64>,
    pub inverse: Matrix3<f64>,
    pub condition: f64,
}

/// Builds the image/ground homography for one camera pose.
pub fn ground_homography(pose: &CameraPose, intrinsics: &Intrinsics) -> Result<GroundHomography> {
    if pose.location.z.abs() < 1e-9 {
        return Err(Error::NearSingular {
            condition: f64::INFINITY,
        });
    }
    let (right, up, forward) = pose.basis();
    let origin = v(pose.location);
    let f = intrinsics.focal_px();
    let c = intrinsics.principal_point();
    // Camera coordinates of (x, y, 0) are affine in (x, y): axis . (p - origin).
    let row = |axis: Vector3<f64>| Vector3::new(axis.x, axis.y, -axis.dot(&origin));
    let (r, u, w) = (row(right), row(up), row(forward));
    let matrix = Matrix3::from_rows(&[
        (r * f + w * c.u).transpose(),
        (-u * f + w * c.v).transpose(),
        w.transpose(),
    ]);
    let inverse = matrix.try_inverse().ok_or(Error::NearSingular {
        condition: f64::INFINITY,
    })?;
    let condition = matrix.norm() * inverse.norm();
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::NearSingular { condition });
    }
    Ok(GroundHomography {
        matrix,
        inverse,
        condition,
    })
}

impl GroundHomography {
    pub fn ground_to_image(&self, p: Point2) -> Result<Pixel> {
        let h = self.matrix * Vector3::new(p.x, p.y, 1.0);
        if !(h.z > 1e-12) {
            return Err(Error::BehindCamera);
        }
        Ok(Pixel {
            u: h.x / h.z,
            v: h.y / h.z,
        })
    }

    pub fn image_to_ground(&self, px: Pixel) -> Result<Point2> {
        let g = self.inverse * Vector3::new(px.u, px.v, 1.0);
        // g.z is the reciprocal depth of the ray's ground hit; non-positive
        // means the pixel lies at or above the horizon.
        if !(g.z > 1e-15) {
            return Err(Error::BehindCamera);
        }
        Ok(Point2::new(g.x / g.z, g.y / g.z))
    }
}

/// Convenience wrapper: builds the homography and maps one pixel to the plane.
pub fn image_to_ground(px: Pixel, pose: &CameraPose, intrinsics: &Intrinsics) -> Result<Point2> {
    ground_homography(pose, intrinsics)?.image_to_ground(px)
}
