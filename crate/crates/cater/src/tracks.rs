//! Per-frame image-space tracks: projected snitch position, object boxes,
//! and the fixed-size initial box a tracker would start from.

use cater_core::camera::{project, project_object_box, Intrinsics};
use cater_core::episode::Episode;
use cater_core::geometry::Point3;
use cater_core::Error;
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Side of the square tracker initialization box, in pixels.
pub const DEFAULT_BOX: f64 = 24.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectBox {
    pub id: u32,
    /// `[u_min, v_min, u_max, v_max]`; `None` when a corner is behind the camera.
    pub bbox: Option<[f64; 4]>,
    pub contained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTrack {
    pub frame: u32,
    /// Pixel of the snitch's ground contact point.
    pub snitch_px: Option<[f64; 2]>,
    pub behind_camera: bool,
    pub in_view: bool,
    pub snitch_contained: bool,
    pub objects: Vec<ObjectBox>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackFile {
    pub schema_version: u32,
    pub episode_id: u64,
    pub image_width: u32,
    pub image_height: u32,
    pub box_size: f64,
    /// Box of `box_size` centered on the frame-0 snitch pixel.
    pub init_box: Option<[f64; 4]>,
    pub frames: Vec<FrameTrack>,
}

impl TrackFile {
    pub fn final_pixel(&self) -> Option<[f64; 2]> {
        self.frames.last().and_then(|f| f.snitch_px)
    }
}

fn or_behind<T>(r: cater_core::Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::BehindCamera) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub fn export_tracks(ep: &Episode, box_size: f64) -> Result<TrackFile> {
    let config = &ep.program.config;
    let intr = Intrinsics::from_config(config);
    let snitch = ep.snitch_id() as usize;
    let mut frames = Vec::with_capacity(ep.timeline.frames.len());
    for (t, states) in ep.timeline.frames.iter().enumerate() {
        let pose = &ep.camera.poses[t];
        let s = states[snitch].position;
        let px = or_behind(project(Point3::new(s.x, s.y, s.z), pose, &intr))?;
        let objects = ep
            .program
            .scene
            .objects
            .iter()
            .zip(states)
            .map(|(o, st)| {
                Ok(ObjectBox {
                    id: o.spec.id,
                    bbox: or_behind(project_object_box(st.position, o.spec.radius(), pose, &intr))?,
                    contained: st.contained_by.is_some(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        frames.push(FrameTrack {
            frame: t as u32,
            snitch_px: px.map(|p| [p.u, p.v]),
            behind_camera: px.is_none(),
            in_view: px.is_some_and(|p| intr.contains(p)),
            snitch_contained: states[snitch].contained_by.is_some(),
            objects,
        });
    }
    let init_box = frames.first().and_then(|f| f.snitch_px).map(|[u, v]| {
        let h = box_size / 2.0;
        [u - h, v - h, u + h, v + h]
    });
    Ok(TrackFile {
        schema_version: crate::format::SCHEMA_VERSION,
        episode_id: ep.id,
        image_width: config.image_width,
        image_height: config.image_height,
        box_size,
        init_box,
        frames,
    })
}
