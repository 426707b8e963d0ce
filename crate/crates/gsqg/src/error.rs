//! Error taxonomy shared by the whole crate. Every failure carries enough
//! context to act on it, and `Error::exit_code` fixes the process-level
//! contract: 2 parse/config, 3 geometry/resolution, 4 accuracy, 5 contact halt.

use crate::vec2::Vec2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Location and severity data for a detected boundary contact or entanglement.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContactReport {
    pub time: f64,
    pub step_index: u64,
    /// Patch indices involved (equal for a self-contact).
    pub patch_a: usize,
    pub patch_b: usize,
    /// Approximate contact location.
    pub position: Vec2,
    /// Separation at detection time; zero or negative means crossing segments.
    pub separation: f64,
    pub detail: String,
}

#[derive(Error, Debug)]
pub enum Error {
    /// Malformed or inconsistent configuration input.
    #[error("parse error: {0}")]
    Parse(String),

    /// Input geometry violates a structural requirement (orientation,
    /// simplicity, node count, degenerate folds, ...).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// Sampling too coarse for the requested operation.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// A parameter lies outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Quadrature or extrapolation failed to reach the requested tolerance.
    #[error("accuracy error: {message} (achieved {achieved:.3e}, target {target:.3e})")]
    Accuracy {
        message: String,
        achieved: f64,
        target: f64,
    },

    /// Time step could not be stabilised within the halving budget.
    #[error("stiffness error: {0}")]
    Stiffness(String),

    /// Boundary contact or entanglement detected; the run halts here.
    #[error("contact halt at t={:.6}: {}", .0.time, .0.detail)]
    Contact(ContactReport),

    /// Checkpoint carries an incompatible schema version.
    #[error("checkpoint schema version {found} not supported (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    /// Checkpoint payload does not match its integrity digest.
    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn accuracy(message: impl Into<String>, achieved: f64, target: f64) -> Error {
        Error::Accuracy {
            message: message.into(),
            achieved,
            target,
        }
    }

    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Parameter(_) => 2,
            Error::SchemaVersion { .. } | Error::Integrity(_) => 2,
            Error::Geometry(_) | Error::Resolution(_) => 3,
            Error::Accuracy { .. } | Error::Stiffness(_) => 4,
            Error::Contact(_) => 5,
            Error::Io(_) => 1,
        }
    }
}
