//! Real-time factor measurement.
//!
//! The benchmark workload: every drone takes off to 1 m, then even ids orbit
//! their spawn point on a 0.5 m circle (one revolution per 10 s, a fresh
//! navigate command every tick) while odd ids hover. Each tick also does the
//! work a live station does: an all-pairs separation scan, telemetry encoding
//! and trace recording.

use super::{DroneState, FlightMode, SimConfig, SimError, SwarmCommand};
use crate::engine::{Engine, EngineEvent};
use crate::geometry::Vec3;
use std::f64::consts::TAU;
use std::time::Instant;

const SPACING: f64 = 1.5;
const ORBIT_RADIUS: f64 = 0.5;
const ORBIT_PERIOD: f64 = 10.0;
const CRUISE_Z: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RtfSample {
    /// s
    pub window_wall: f64,
    /// s
    pub window_sim: f64,
    pub rtf: f64,
}

impl RtfSample {
    pub fn new(window_sim: f64, window_wall: f64) -> Self {
        Self {
            window_wall,
            window_sim,
            rtf: window_sim / window_wall,
        }
    }
}

/// Commands for one tick of the orbit workload.
pub fn orbit_workload(drones: &[DroneState], sim_time: f64) -> Vec<SwarmCommand> {
    let phase = TAU * sim_time / ORBIT_PERIOD;
    drones
        .iter()
        .filter(|d| d.id % 2 == 0 && matches!(d.mode, FlightMode::Hovering | FlightMode::Navigating))
        .map(|d| {
            let center = Vec3::new(d.id as f64 * SPACING, 0.0, CRUISE_Z);
            let point = center + Vec3::new(ORBIT_RADIUS * phase.cos(), ORBIT_RADIUS * phase.sin(), 0.0);
            SwarmCommand::Navigate {
                drone: d.id,
                position: point,
                yaw: Some(phase),
                speed: d.max_speed,
            }
        })
        .collect()
}

fn min_separation(drones: &[DroneState]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in drones.iter().enumerate() {
        for b in &drones[i + 1..] {
            best = best.min(a.position().distance_squared(b.position()));
        }
    }
    best.sqrt()
}

/// Runs the workload for `sim_duration` simulated seconds as fast as possible.
pub fn measure_rtf(n_drones: usize, sim_duration: f64) -> Result<RtfSample, SimError> {
    if !(sim_duration > 0.0 && sim_duration.is_finite()) {
        return Err(SimError::InvalidCommand(format!(
            "duration must be positive, got {sim_duration}"
        )));
    }
    let config = SimConfig::default();
    let mut engine = Engine::new(config, n_drones, SPACING)?;
    let ticks = (sim_duration / config.tick_dt).round().max(1.0) as u64;
    let mut trace = Vec::with_capacity(ticks as usize);
    let mut closest = f64::INFINITY;

    let start = Instant::now();
    engine.command(SwarmCommand::TakeoffAll { z: CRUISE_Z })?;
    for _ in 0..ticks {
        for cmd in orbit_workload(engine.drones(), engine.clock().sim_time()) {
            engine.command(cmd)?;
        }
        engine.step();
        closest = closest.min(min_separation(engine.drones()));
        for e in engine.drain_events() {
            if let EngineEvent::Telemetry(states) = e.event {
                let frame = serde_json::to_vec(&states).expect("telemetry serializes");
                std::hint::black_box(frame);
            }
        }
        trace.push(engine.snapshot());
    }
    let wall = start.elapsed().as_secs_f64();
    std::hint::black_box((closest, trace));
    let window_sim = engine.clock().sim_time();
    Ok(RtfSample::new(window_sim, wall.max(f64::MIN_POSITIVE)))
}
