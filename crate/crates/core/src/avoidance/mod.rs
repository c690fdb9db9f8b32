//! Pairwise conflict detection and resolution for straight-line transitions.
//!
//! Drones are points; `d_safe` covers physical radius plus margin.

mod cpa;
mod resolve;

pub use cpa::{classify, cpa, detect, Conflict, Scenario, Trajectory};
pub use resolve::{resolve, Adjustment, AdjustmentKind, ResolvedPlan, ALTITUDE_OFFSET, MAX_DELAY_STEPS};

use thiserror::Error;

/// Separation used when nothing else is configured, m.
pub const DEFAULT_SAFE_DISTANCE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AvoidanceError {
    #[error("drone id {0} appears more than once in the plan")]
    DuplicateDroneId(u32),
    #[error("invalid trajectory for drone {drone_id}: {reason}")]
    InvalidTrajectory { drone_id: u32, reason: String },
    #[error("safe distance must be positive, got {0}")]
    InvalidSafeDistance(f64),
    #[error("conflict between drones {} and {} (separation {d_star:.3} m) cannot be resolved", pair.0, pair.1)]
    Unresolvable { pair: (u32, u32), d_star: f64 },
}
