//! Deterministic kinematic swarm simulator.

mod drone;
pub mod led;
mod preview;
mod rtf;
mod trace;
mod world;

pub use drone::{DroneState, FlightMode, ManualControl};
pub use led::{led_frame, Color, Effect, EffectSpec, Group};
pub use preview::{preview_run, PreviewOptions};
pub use rtf::{measure_rtf, orbit_workload, RtfSample};
pub use trace::{read_jsonl, write_jsonl, Trace, TraceDrone, TraceEntry, TraceLine};
pub use world::{spawn_swarm, SimClock, SimConfig, SimEvent, Simulator, SwarmCommand, MAX_DRONES};

use crate::avoidance::AvoidanceError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("swarm size must be between 1 and {MAX_DRONES}, got {0}")]
    InvalidCount(usize),
    #[error("unknown drone {0}")]
    UnknownDrone(u32),
    #[error("drone {0} is not airborne")]
    NotAirborne(u32),
    #[error("invalid command: {0}")]
    InvalidCommand(String),
    #[error(transparent)]
    Unresolvable(#[from] AvoidanceError),
}
