//! One generated episode: spawn, schedule, camera, replay.

use serde::{Deserialize, Serialize};

use crate::camera::{camera_schedule, CameraSchedule};
use crate::labels::{derive_labels, LabelRecord};
use crate::program::{schedule_episode, ActionProgram};
use crate::rng::{episode_seed, stream, Stream};
use crate::sim::{episode_attributes, replay, DiagnosticAttributes, EpisodeTimeline};
use crate::world::{spawn_scene, SceneConfig};
use crate::{Error, Result};

/// Grid resolutions labeled for every episode.
pub const LABEL_GRIDS: [u32; 3] = [4, 6, 8];

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub id: u64,
    pub seed: u64,
    pub program: ActionProgram,
    pub camera: CameraSchedule,
    pub timeline: EpisodeTimeline,
}

/// Outcome of generating one corpus slot, including rejected seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationAttempts {
    pub episode_id: u64,
    /// Attempt index of the accepted seed.
    pub attempt: u32,
    pub seed: u64,
    pub failed_seeds: alloc::vec::Vec<u64>,
}

impl Episode {
    /// Generates an episode from its own seed; deterministic in `(config, seed)`.
    pub fn generate(id: u64, config: &SceneConfig, seed: u64) -> Result<Self> {
        let scene = spawn_scene(config, &mut stream(seed, Stream::Spawn))?;
        let program = schedule_episode(&scene, config, seed, &mut stream(seed, Stream::Schedule));
        let camera = camera_schedule(config.camera_mode, config, &mut stream(seed, Stream::Camera))?;
        let timeline = replay(&program, &camera)?;
        Ok(Self {
            id,
            seed,
            program,
            camera,
            timeline,
        })
    }

    /// Generates corpus episode `index` from `config.seed`, re-drawing the
    /// seed when placement fails.
    pub fn generate_indexed(
        index: u64,
        config: &SceneConfig,
        max_attempts: u32,
    ) -> Result<(Self, GenerationAttempts)> {
        let mut failed_seeds = alloc::vec::Vec::new();
        let mut last_err = None;
        for attempt in 0..max_attempts {
            let seed = episode_seed(config.seed, index, attempt);
            match Self::generate(index, config, seed) {
                Ok(ep) => {
                    return Ok((
                        ep,
                        GenerationAttempts {
                            episode_id: index,
                            attempt,
                            seed,
                            failed_seeds,
                        },
                    ))
                }
                Err(e @ Error::Placement { .. }) => {
                    failed_seeds.push(seed);
                    last_err = Some(e);
                }
                Err(e) => return Err(e),
            }
        }
        Err(last_err.unwrap_or_else(|| Error::InvalidConfig("max_attempts must be positive".into())))
    }

    pub fn snitch_id(&self) -> crate::world::ObjectId {
        self.program.scene.snitch_id().expect("validated scenes have a snitch")
    }

    pub fn labels(&self, grid: u32) -> Result<LabelRecord> {
        derive_labels(self.id, &self.program, &self.timeline, grid)
    }

    pub fn attributes(&self) -> DiagnosticAttributes {
        episode_attributes(&self.timeline, self.snitch_id(), &self.program.config)
    }
}
