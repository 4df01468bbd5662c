//! Dataset production around `cater-core`: corpus files, splits, label
//! derivation, scoring, diagnostics, track export and schematics.

pub mod corpus;
pub mod error;
pub mod format;
pub mod report;
pub mod split;
pub mod tracks;
pub mod viz;

pub use error::{CliError, Result};
