use core::fmt;

use alloc::string::String;

/// Errors raised by the core model.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// The scene configuration violates one of its invariants.
    InvalidConfig(String),
    /// Rejection sampling could not place every object on the plane.
    Placement { object_index: usize, attempts: u32 },
    /// A program failed validation; the message names the first violation.
    InvalidProgram(String),
    /// A point lies behind (or on) the camera plane.
    BehindCamera,
    /// The image/ground homography is singular or badly conditioned.
    NearSingular { condition: f64 },
    /// A point lies outside the plane beyond the clamp tolerance.
    OutOfPlane { x: f64, y: f64 },
    /// Predictions and labels disagree on task, vocabulary, or episode ids.
    SchemaMismatch(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidConfig(msg) => write!(f, "invalid scene config: {msg}"),
            Error::Placement {
                object_index,
                attempts,
            } => write!(
                f,
                "could not place object {object_index} after {attempts} attempts"
            ),
            Error::InvalidProgram(msg) => write!(f, "invalid action program: {msg}"),
            Error::BehindCamera => write!(f, "point is behind the camera"),
            Error::NearSingular { condition } => {
                write!(f, "ground homography is near-singular (condition {condition:e})")
            }
            Error::OutOfPlane { x, y } => write!(f, "point ({x}, {y}) lies outside the plane"),
            Error::SchemaMismatch(msg) => write!(f, "schema mismatch: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
