//! Block-based drone swarm programming.
//!
//! * [`geometry`]: formations, transforms and slot assignment.
//! * [`avoidance`]: closest-point-of-approach conflict detection and resolution.
//! * [`lang`]: the block program format, storage and interpreter.
//! * [`sim`]: the deterministic kinematic swarm simulator, LED effects and traces.
//! * [`engine`]: simulator + interpreter composed into one tick loop, plus a
//!   real-time host thread.

pub mod avoidance;
pub mod engine;
pub mod geometry;
pub mod lang;
pub mod sim;

pub use geometry::{Pose, Vec3};

/// The guide's code listings, compiled and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/formations.md")]
    mod formations {}
    #[doc = include_str!("../../../book/src/avoidance.md")]
    mod avoidance {}
    #[doc = include_str!("../../../book/src/programs.md")]
    mod programs {}
    #[doc = include_str!("../../../book/src/interpreter.md")]
    mod interpreter {}
    #[doc = include_str!("../../../book/src/simulator.md")]
    mod simulator {}
    #[doc = include_str!("../../../book/src/station.md")]
    mod station {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
