//! Core model of the CATER tabletop universe.
//!
//! Everything in this crate is a pure function of its inputs: scene spawning,
//! action scheduling, kinematic replay, camera geometry, ground-truth labels and
//! scoring. It builds without `std` (only `alloc` is required) so the same code
//! can be embedded in renderers, evaluation servers, or bindings.
//!
//! The typical pipeline for one episode is
//!
//! ```
//! use cater_core::{episode::Episode, world::SceneConfig};
//!
//! let config = SceneConfig::default();
//! let episode = Episode::generate(0, &config, 42).unwrap();
//! assert_eq!(episode.timeline.frames.len(), config.frames as usize);
//! ```
#![no_std]
#![forbid(unsafe_code)]
// `!(x > y)` checks double as NaN rejection.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod camera;
pub mod episode;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod labels;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod program;
pub mod rng;
pub mod sim;
pub mod validate;
pub mod world;

pub use error::{Error, Result};
