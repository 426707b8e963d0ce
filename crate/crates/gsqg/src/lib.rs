//! Contour dynamics for active-scalar patches with power-law kernels, with
//! the measurement tools needed to monitor boundary regularity and watch for
//! splash-like behaviour while the patches move.

pub mod curve;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod quad;
pub mod scenario;
pub mod search;
pub mod vec2;
pub mod velocity;

pub use error::{Error, Result};
pub use vec2::Vec2;
