//! Formation geometry: slot generation, whole-formation transforms and
//! drone-to-slot assignment. Everything here is a pure function of its inputs.

mod assign;
mod formation;
mod transform;
mod vec;

pub use assign::{assign, Assignment, MAX_ASSIGN};
pub use formation::{generate, Formation, FormationKind, FormationSpec};
pub use transform::{rotate, scale, translate};
pub use vec::{normalize_yaw, yaw_difference, Pose, Vec3};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid formation spec: {0}")]
    InvalidSpec(String),
    #[error("scale factor must be positive, got {0}")]
    InvalidFactor(f64),
    #[error("{drones} drones cannot be matched to {slots} slots")]
    SizeMismatch { drones: usize, slots: usize },
    #[error("assignment supports at most {MAX_ASSIGN} drones, got {0}")]
    TooManyDrones(usize),
}
