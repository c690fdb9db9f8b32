use super::led::Color;
use crate::geometry::{Pose, Vec3};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlightMode {
    Landed,
    TakingOff,
    Hovering,
    Navigating,
    Landing,
}

impl FlightMode {
    pub fn is_airborne(self) -> bool {
        self != FlightMode::Landed
    }

    pub fn name(self) -> &'static str {
        match self {
            FlightMode::Landed => "Landed",
            FlightMode::TakingOff => "TakingOff",
            FlightMode::Hovering => "Hovering",
            FlightMode::Navigating => "Navigating",
            FlightMode::Landing => "Landing",
        }
    }
}

impl fmt::Display for FlightMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Velocity command from manual (first-person) control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManualControl {
    /// World-frame velocity, m/s, already clamped to the drone's max speed.
    pub velocity: Vec3,
    /// rad/s
    pub yaw_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroneState {
    pub id: u32,
    pub pose: Pose,
    pub velocity: Vec3,
    pub mode: FlightMode,
    pub led: Color,
    /// Remaining charge, fraction in [0, 1].
    pub battery: f64,
    /// Synthetic load, fraction in [0, 1].
    pub cpu: f64,
    pub target: Option<Pose>,
    pub max_speed: f64,
    /// Speed used to approach `target`, never above `max_speed`.
    pub cruise_speed: f64,
    /// The drone holds position until sim time reaches this value.
    pub depart_at: f64,
    pub manual: Option<ManualControl>,
}

impl DroneState {
    pub fn landed(id: u32, position: Vec3, max_speed: f64) -> Self {
        Self {
            id,
            pose: Pose::at(position),
            velocity: Vec3::ZERO,
            mode: FlightMode::Landed,
            led: Color::BLACK,
            battery: 1.0,
            cpu: 0.0,
            target: None,
            max_speed,
            cruise_speed: max_speed,
            depart_at: 0.0,
            manual: None,
        }
    }

    pub fn position(&self) -> Vec3 {
        self.pose.position
    }
}
