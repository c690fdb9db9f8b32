//! Safe-area guard: airborne drones that leave the box are landed.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sib_core::engine::{Supervisor, SupervisorOutput};
use sib_core::sim::{DroneState, FlightMode, SimClock, SwarmCommand};
use sib_core::Vec3;
use std::any::Any;
use std::collections::BTreeSet;

pub const VIOLATION_TOPIC: &str = "safe_area_violation";

/// Closed axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SafeArea {
    pub min: Vec3,
    pub max: Vec3,
    pub enabled: bool,
}

impl Default for SafeArea {
    fn default() -> Self {
        Self {
            min: Vec3::new(-10.0, -10.0, 0.0),
            max: Vec3::new(10.0, 10.0, 5.0),
            enabled: false,
        }
    }
}

impl SafeArea {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err("safe area bounds must be finite".into());
        }
        if self.enabled && (self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z) {
            return Err("safe area min must not exceed max on any axis".into());
        }
        Ok(())
    }

    /// Boundary points are inside.
    pub fn contains(&self, p: Vec3) -> bool {
        (self.min.x..=self.max.x).contains(&p.x)
            && (self.min.y..=self.max.y).contains(&p.y)
            && (self.min.z..=self.max.z).contains(&p.z)
    }
}

#[derive(Debug, Default)]
pub struct SafeAreaGuard {
    area: SafeArea,
    /// Drones whose current violation has already been reported.
    violating: BTreeSet<u32>,
}

impl SafeAreaGuard {
    pub fn new(area: SafeArea) -> Self {
        Self {
            area,
            violating: BTreeSet::new(),
        }
    }

    pub fn area(&self) -> SafeArea {
        self.area
    }

    pub fn set_area(&mut self, area: SafeArea) {
        self.area = area;
        self.violating.clear();
    }

    /// Land commands and violation events for the given state.
    pub fn enforce(&mut self, clock: SimClock, drones: &[DroneState]) -> SupervisorOutput {
        let mut out = SupervisorOutput::default();
        if !self.area.enabled {
            self.violating.clear();
            return out;
        }
        for d in drones {
            let outside = !self.area.contains(d.position());
            if !outside || d.mode == FlightMode::Landed {
                // the episode ends once the drone is back inside or on the ground
                self.violating.remove(&d.id);
                continue;
            }
            if d.mode != FlightMode::Landing {
                out.commands.push(SwarmCommand::Land { drone: d.id });
            }
            if self.violating.insert(d.id) {
                out.events.push((VIOLATION_TOPIC.to_string(), violation(clock, d)));
            }
        }
        out
    }
}

fn violation(clock: SimClock, d: &DroneState) -> Value {
    let p = d.position();
    json!({
        "drone": d.id,
        "position": {"x": p.x, "y": p.y, "z": p.z},
        "tick": clock.tick_count,
    })
}

impl Supervisor for SafeAreaGuard {
    fn inspect(&mut self, clock: SimClock, drones: &[DroneState]) -> SupervisorOutput {
        self.enforce(clock, drones)
    }

    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hovering(id: u32, p: Vec3) -> DroneState {
        let mut d = DroneState::landed(id, p, 1.0);
        d.mode = FlightMode::Hovering;
        d
    }

    fn area() -> SafeArea {
        SafeArea {
            min: Vec3::new(-4.0, -4.0, 0.0),
            max: Vec3::new(4.0, 4.0, 3.0),
            enabled: true,
        }
    }

    #[test]
    fn outside_is_landed_once_reported() {
        let mut g = SafeAreaGuard::new(area());
        let drones = [hovering(0, Vec3::new(5.0, 0.0, 1.0))];
        let out = g.enforce(SimClock::new(0.05), &drones);
        assert_eq!(out.commands, vec![SwarmCommand::Land { drone: 0 }]);
        assert_eq!(out.events.len(), 1);
        let again = g.enforce(SimClock::new(0.05), &drones);
        assert!(again.events.is_empty());
    }

    #[test]
    fn boundary_is_inside() {
        let mut g = SafeAreaGuard::new(area());
        let out = g.enforce(SimClock::new(0.05), &[hovering(0, Vec3::new(4.0, -4.0, 3.0))]);
        assert!(out.commands.is_empty() && out.events.is_empty());
    }

    #[test]
    fn disabled_does_nothing() {
        let mut g = SafeAreaGuard::new(SafeArea {
            enabled: false,
            ..area()
        });
        let out = g.enforce(SimClock::new(0.05), &[hovering(0, Vec3::new(50.0, 0.0, 1.0))]);
        assert!(out.commands.is_empty());
    }

    #[test]
    fn inverted_box_rejected() {
        let bad = SafeArea {
            min: Vec3::new(1.0, 0.0, 0.0),
            max: Vec3::new(0.0, 1.0, 1.0),
            enabled: true,
        };
        assert!(bad.validate().is_err());
    }
}
