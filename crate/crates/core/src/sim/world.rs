//! The kinematic swarm: fixed-step first-order motion toward targets, the
//! flight-mode state machine, battery and CPU stubs, and the active LED effect.

use super::drone::{DroneState, FlightMode, ManualControl};
use super::led::{frame_colors, group_members, Color, EffectSpec};
use super::SimError;
use crate::avoidance::{self, Adjustment, Trajectory};
use crate::geometry::{normalize_yaw, yaw_difference, Pose, Vec3};
use serde::{Deserialize, Serialize};

pub const MAX_DRONES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Fixed step, s.
    pub tick_dt: f64,
    /// m/s
    pub max_speed: f64,
    /// rad/s
    pub max_yaw_rate: f64,
    /// Distance at which take-off and landing count as complete, m.
    pub nav_tolerance: f64,
    /// Minimum separation enforced on planned transitions, m.
    pub d_safe: f64,
    /// Airborne time from full to empty battery, s.
    pub battery_life: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            tick_dt: 0.05,
            max_speed: 1.0,
            max_yaw_rate: 1.0,
            nav_tolerance: 0.2,
            d_safe: avoidance::DEFAULT_SAFE_DISTANCE,
            battery_life: 600.0,
            seed: 0,
        }
    }
}

/// Simulated time kept as an integer tick count so it never drifts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimClock {
    pub tick_dt: f64,
    pub tick_count: u64,
}

impl SimClock {
    pub fn new(tick_dt: f64) -> Self {
        Self {
            tick_dt,
            tick_count: 0,
        }
    }

    pub fn sim_time(&self) -> f64 {
        self.tick_count as f64 * self.tick_dt
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SwarmCommand {
    /// Every landed (or landing) drone climbs vertically to `z`.
    TakeoffAll { z: f64 },
    LandAll,
    Land { drone: u32 },
    /// Hold the current pose. `None` addresses every flying drone; a landing
    /// in progress is never interrupted.
    Hover { drone: Option<u32> },
    Navigate { drone: u32, position: Vec3, yaw: Option<f64>, speed: f64 },
    /// Simultaneous transition, checked and de-conflicted before acceptance.
    SetTargets { targets: Vec<(u32, Pose)>, speed: f64 },
    Led(EffectSpec),
    ManualVelocity { drone: u32, velocity: Vec3, yaw_rate: f64, body_frame: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SimEvent {
    ModeChanged { drone: u32, from: FlightMode, to: FlightMode },
    Arrived { drone: u32 },
    BatteryDepleted { drone: u32 },
}

#[derive(Debug, Clone)]
struct ActiveEffect {
    spec: EffectSpec,
    start_tick: u64,
    members: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct Simulator {
    config: SimConfig,
    clock: SimClock,
    drones: Vec<DroneState>,
    effect: Option<ActiveEffect>,
}

/// `n` landed drones on the x axis, ids `0..n`.
pub fn spawn_swarm(n: usize, spacing: f64, max_speed: f64) -> Result<Vec<DroneState>, SimError> {
    if !(1..=MAX_DRONES).contains(&n) {
        return Err(SimError::InvalidCount(n));
    }
    let mut drones: Vec<DroneState> = (0..n)
        .map(|i| DroneState::landed(i as u32, Vec3::new(i as f64 * spacing, 0.0, 0.0), max_speed))
        .collect();
    let cpu = cpu_load(n);
    for d in &mut drones {
        d.cpu = cpu;
    }
    Ok(drones)
}

fn cpu_load(n: usize) -> f64 {
    (0.2 + 0.01 * n as f64).min(1.0)
}

impl Simulator {
    pub fn new(config: SimConfig, drones: Vec<DroneState>) -> Self {
        Self {
            clock: SimClock::new(config.tick_dt),
            config,
            drones,
            effect: None,
        }
    }

    pub fn with_swarm(config: SimConfig, n: usize, spacing: f64) -> Result<Self, SimError> {
        Ok(Self::new(config, spawn_swarm(n, spacing, config.max_speed)?))
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn config_mut(&mut self) -> &mut SimConfig {
        &mut self.config
    }

    pub fn clock(&self) -> SimClock {
        self.clock
    }

    pub fn sim_time(&self) -> f64 {
        self.clock.sim_time()
    }

    pub fn drones(&self) -> &[DroneState] {
        &self.drones
    }

    /// Replaces the swarm; the clock keeps running.
    pub fn respawn(&mut self, n: usize, spacing: f64) -> Result<(), SimError> {
        self.drones = spawn_swarm(n, spacing, self.config.max_speed)?;
        self.effect = None;
        Ok(())
    }

    fn index_of(&self, id: u32) -> Result<usize, SimError> {
        self.drones
            .iter()
            .position(|d| d.id == id)
            .ok_or(SimError::UnknownDrone(id))
    }

    /// Applies a command at the current tick boundary. Returns the
    /// de-confliction adjustments for `SetTargets`, empty otherwise.
    pub fn command(&mut self, cmd: SwarmCommand) -> Result<Vec<Adjustment>, SimError> {
        let now = self.sim_time();
        match cmd {
            SwarmCommand::TakeoffAll { z } => {
                if !(z.is_finite() && z > 0.0) {
                    return Err(SimError::InvalidCommand(format!("takeoff altitude must be positive, got {z}")));
                }
                let speed = self.config.max_speed;
                for d in &mut self.drones {
                    if matches!(d.mode, FlightMode::Landed | FlightMode::Landing) {
                        let p = d.position();
                        set_goal(d, Pose::new(Vec3::new(p.x, p.y, z), d.pose.yaw), speed, now);
                        d.mode = FlightMode::TakingOff;
                    }
                }
            }
            SwarmCommand::LandAll => {
                let ids: Vec<u32> = self.drones.iter().map(|d| d.id).collect();
                for id in ids {
                    self.command(SwarmCommand::Land { drone: id })?;
                }
            }
            SwarmCommand::Land { drone } => {
                let i = self.index_of(drone)?;
                let speed = self.config.max_speed;
                let d = &mut self.drones[i];
                if d.mode.is_airborne() && d.mode != FlightMode::Landing {
                    let p = d.position();
                    set_goal(d, Pose::new(Vec3::new(p.x, p.y, 0.0), d.pose.yaw), speed, now);
                    d.mode = FlightMode::Landing;
                }
            }
            SwarmCommand::Hover { drone } => {
                let ids: Vec<usize> = match drone {
                    Some(id) => vec![self.index_of(id)?],
                    None => (0..self.drones.len()).collect(),
                };
                for i in ids {
                    let d = &mut self.drones[i];
                    if matches!(d.mode, FlightMode::TakingOff | FlightMode::Hovering | FlightMode::Navigating) {
                        d.target = Some(d.pose);
                        d.manual = None;
                        d.depart_at = now;
                        d.mode = FlightMode::Hovering;
                    }
                }
            }
            SwarmCommand::Navigate {
                drone,
                position,
                yaw,
                speed,
            } => {
                let i = self.index_of(drone)?;
                check_speed(speed)?;
                if !position.is_finite() {
                    return Err(SimError::InvalidCommand("navigation target must be finite".into()));
                }
                let d = &mut self.drones[i];
                ensure_flying(d)?;
                let goal = Pose::new(position, yaw.unwrap_or(d.pose.yaw));
                set_goal(d, goal, speed, now);
                d.mode = FlightMode::Navigating;
            }
            SwarmCommand::SetTargets { targets, speed } => {
                check_speed(speed)?;
                return self.set_targets(&targets, speed);
            }
            SwarmCommand::Led(spec) => {
                if !(spec.rate.is_finite() && spec.rate > 0.0) {
                    return Err(SimError::InvalidCommand(format!("LED rate must be positive, got {}", spec.rate)));
                }
                let altitudes: Vec<f64> = self.drones.iter().map(|d| d.position().z).collect();
                let seed = effect_seed(self.config.seed, self.clock.tick_count);
                let members = group_members(
                    spec.group,
                    self.drones.len(),
                    seed,
                    Some(&altitudes),
                    self.config.nav_tolerance,
                );
                self.effect = Some(ActiveEffect {
                    spec,
                    start_tick: self.clock.tick_count,
                    members,
                });
                self.paint_leds();
            }
            SwarmCommand::ManualVelocity {
                drone,
                velocity,
                yaw_rate,
                body_frame,
            } => {
                let i = self.index_of(drone)?;
                if !(velocity.is_finite() && yaw_rate.is_finite()) {
                    return Err(SimError::InvalidCommand("manual command must be finite".into()));
                }
                let max_yaw_rate = self.config.max_yaw_rate;
                let d = &mut self.drones[i];
                if !matches!(d.mode, FlightMode::Hovering | FlightMode::Navigating) {
                    return Err(SimError::NotAirborne(drone));
                }
                let mut v = if body_frame {
                    velocity.rotated_z(d.pose.yaw)
                } else {
                    velocity
                };
                let norm = v.norm();
                if norm > d.max_speed {
                    v = v * (d.max_speed / norm);
                }
                d.manual = Some(ManualControl {
                    velocity: v,
                    yaw_rate: yaw_rate.clamp(-max_yaw_rate, max_yaw_rate),
                });
                d.target = None;
                d.mode = FlightMode::Hovering;
            }
        }
        Ok(Vec::new())
    }

    fn set_targets(&mut self, targets: &[(u32, Pose)], speed: f64) -> Result<Vec<Adjustment>, SimError> {
        let mut goals: Vec<Option<Pose>> = vec![None; self.drones.len()];
        for &(id, pose) in targets {
            let i = self.index_of(id)?;
            ensure_flying(&self.drones[i])?;
            if !pose.position.is_finite() {
                return Err(SimError::InvalidCommand("formation target must be finite".into()));
            }
            goals[i] = Some(pose);
        }
        let plan: Vec<Trajectory> = self
            .drones
            .iter()
            .zip(&goals)
            .map(|(d, goal)| match goal {
                Some(g) if g.position != d.position() => {
                    Trajectory::moving(d.id, d.position(), g.position, speed.min(d.max_speed))
                }
                _ => Trajectory::stationary(d.id, d.position()),
            })
            .collect();
        let resolved = avoidance::resolve(&plan, self.config.d_safe)?;

        let now = self.sim_time();
        for ((d, goal), traj) in self.drones.iter_mut().zip(&goals).zip(&resolved.trajectories) {
            if let Some(g) = goal {
                set_goal(d, Pose::new(traj.goal, g.yaw), speed, now + traj.depart_time);
                d.mode = FlightMode::Navigating;
            }
        }
        Ok(resolved.adjustments)
    }

    /// Advances one fixed step.
    pub fn tick(&mut self) -> Vec<SimEvent> {
        let dt = self.config.tick_dt;
        let now = self.sim_time();
        let cfg = self.config;
        let cpu = cpu_load(self.drones.len());
        let mut events = Vec::new();

        for d in &mut self.drones {
            d.cpu = cpu;
            let before = d.mode;
            if d.mode == FlightMode::Landed {
                d.velocity = Vec3::ZERO;
                continue;
            }

            d.battery = (d.battery - dt / cfg.battery_life).max(0.0);
            if d.battery == 0.0 && d.mode != FlightMode::Landing {
                events.push(SimEvent::BatteryDepleted { drone: d.id });
                let p = d.position();
                set_goal(d, Pose::new(Vec3::new(p.x, p.y, 0.0), d.pose.yaw), cfg.max_speed, now);
                d.mode = FlightMode::Landing;
            }

            let mut arrived = false;
            if let Some(m) = d.manual {
                d.pose.position += m.velocity * dt;
                d.pose.yaw = normalize_yaw(d.pose.yaw + m.yaw_rate * dt);
                d.velocity = m.velocity;
            } else if let Some(goal) = d.target {
                let moving_time = (dt - (d.depart_at - now).max(0.0)).max(0.0);
                let speed = d.cruise_speed.min(d.max_speed);
                let step = speed * moving_time;
                let offset = goal.position - d.position();
                let dist = offset.norm();
                if dist <= step * (1.0 + 1e-9) {
                    d.velocity = if dist > 0.0 {
                        offset * ((dist / dt).min(speed) / dist)
                    } else {
                        Vec3::ZERO
                    };
                    arrived = dist > 0.0 || d.mode == FlightMode::Navigating;
                    d.pose.position = goal.position;
                } else {
                    let dir = offset * (1.0 / dist);
                    d.pose.position += dir * step;
                    d.velocity = dir * (step / dt);
                }
                let turn = yaw_difference(goal.yaw, d.pose.yaw);
                let max_turn = cfg.max_yaw_rate * moving_time;
                d.pose.yaw = if turn.abs() <= max_turn {
                    goal.yaw
                } else {
                    normalize_yaw(d.pose.yaw + max_turn.copysign(turn))
                };
            } else {
                d.velocity = Vec3::ZERO;
            }

            match d.mode {
                FlightMode::TakingOff => {
                    if let Some(goal) = d.target {
                        if (d.position().z - goal.position.z).abs() <= cfg.nav_tolerance {
                            d.mode = FlightMode::Hovering;
                        }
                    }
                }
                FlightMode::Navigating => {
                    if arrived {
                        d.mode = FlightMode::Hovering;
                        events.push(SimEvent::Arrived { drone: d.id });
                    }
                }
                FlightMode::Landing => {
                    if d.position().z <= cfg.nav_tolerance {
                        d.mode = FlightMode::Landed;
                        d.velocity = Vec3::ZERO;
                        d.target = None;
                    }
                }
                FlightMode::Hovering | FlightMode::Landed => {}
            }
            if d.mode != before {
                events.push(SimEvent::ModeChanged {
                    drone: d.id,
                    from: before,
                    to: d.mode,
                });
            }
        }

        self.clock.tick_count += 1;
        self.paint_leds();
        events
    }

    fn paint_leds(&mut self) {
        let Some(effect) = &self.effect else {
            return;
        };
        if effect.members.len() != self.drones.len() {
            return;
        }
        let frame = self.clock.tick_count - effect.start_tick;
        let colors = frame_colors(&effect.spec, &effect.members, frame, self.config.tick_dt);
        for (d, c) in self.drones.iter_mut().zip(colors) {
            if let Some(c) = c {
                d.led = c;
            }
        }
    }

    pub fn leds(&self) -> Vec<Color> {
        self.drones.iter().map(|d| d.led).collect()
    }

    /// True when no drone is moving or waiting to depart.
    pub fn is_settled(&self) -> bool {
        let now = self.sim_time();
        self.drones.iter().all(|d| match d.mode {
            FlightMode::Landed => true,
            FlightMode::TakingOff | FlightMode::Navigating | FlightMode::Landing => false,
            FlightMode::Hovering => match (d.manual, d.target) {
                (Some(m), _) => m.velocity == Vec3::ZERO,
                (None, Some(t)) => t.position == d.position() && d.depart_at <= now,
                (None, None) => true,
            },
        })
    }
}

fn set_goal(d: &mut DroneState, goal: Pose, speed: f64, depart_at: f64) {
    d.target = Some(goal);
    d.cruise_speed = speed.min(d.max_speed);
    d.depart_at = depart_at;
    d.manual = None;
}

fn ensure_flying(d: &DroneState) -> Result<(), SimError> {
    match d.mode {
        FlightMode::Landed | FlightMode::Landing => Err(SimError::NotAirborne(d.id)),
        _ => Ok(()),
    }
}

fn check_speed(speed: f64) -> Result<(), SimError> {
    if speed.is_finite() && speed > 0.0 {
        Ok(())
    } else {
        Err(SimError::InvalidCommand(format!("speed must be positive, got {speed}")))
    }
}

fn effect_seed(seed: u64, tick: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = seed ^ tick.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::led::{Effect, Group};

    fn airborne(n: usize) -> Simulator {
        let mut sim = Simulator::with_swarm(SimConfig::default(), n, 1.0).unwrap();
        sim.command(SwarmCommand::TakeoffAll { z: 1.0 }).unwrap();
        for _ in 0..40 {
            sim.tick();
        }
        assert!(sim.drones().iter().all(|d| d.mode == FlightMode::Hovering));
        sim
    }

    #[test]
    fn spawn_line() {
        let d = spawn_swarm(4, 1.0, 1.0).unwrap();
        let xs: Vec<f64> = d.iter().map(|d| d.position().x).collect();
        assert_eq!(xs, vec![0.0, 1.0, 2.0, 3.0]);
        assert!(d.iter().all(|d| d.mode == FlightMode::Landed && d.battery == 1.0 && d.led == Color::BLACK));
        let one = spawn_swarm(1, 1.0, 1.0).unwrap();
        assert_eq!(one[0].position(), Vec3::ZERO);
        for n in 1..=50 {
            let ids: Vec<u32> = spawn_swarm(n, 1.0, 1.0).unwrap().iter().map(|d| d.id).collect();
            assert_eq!(ids, (0..n as u32).collect::<Vec<_>>());
        }
        assert_eq!(spawn_swarm(0, 1.0, 1.0).unwrap_err(), SimError::InvalidCount(0));
        assert!(spawn_swarm(257, 1.0, 1.0).is_err());
    }

    #[test]
    fn takeoff_all_sets_targets() {
        let mut sim = Simulator::with_swarm(SimConfig::default(), 3, 1.0).unwrap();
        sim.command(SwarmCommand::TakeoffAll { z: 1.0 }).unwrap();
        for d in sim.drones() {
            assert_eq!(d.mode, FlightMode::TakingOff);
            assert_eq!(d.target.unwrap().position.z, 1.0);
        }
    }

    #[test]
    fn navigate_landed_is_rejected() {
        let mut sim = Simulator::with_swarm(SimConfig::default(), 1, 1.0).unwrap();
        let err = sim
            .command(SwarmCommand::Navigate {
                drone: 0,
                position: Vec3::new(1.0, 0.0, 1.0),
                yaw: None,
                speed: 1.0,
            })
            .unwrap_err();
        assert_eq!(err, SimError::NotAirborne(0));
        assert_eq!(
            sim.command(SwarmCommand::Land { drone: 9 }).unwrap_err(),
            SimError::UnknownDrone(9)
        );
    }

    #[test]
    fn one_meter_takes_twenty_ticks() {
        let mut sim = airborne(1);
        let start = sim.drones()[0].position();
        sim.command(SwarmCommand::Navigate {
            drone: 0,
            position: start + Vec3::new(1.0, 0.0, 0.0),
            yaw: None,
            speed: 1.0,
        })
        .unwrap();
        for tick in 1..=20 {
            sim.tick();
            let expect = if tick < 20 { FlightMode::Navigating } else { FlightMode::Hovering };
            assert_eq!(sim.drones()[0].mode, expect, "tick {tick}");
        }
        assert_eq!(sim.drones()[0].position(), start + Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn hovering_without_target_stays_put() {
        let mut sim = airborne(2);
        sim.command(SwarmCommand::ManualVelocity {
            drone: 0,
            velocity: Vec3::ZERO,
            yaw_rate: 0.0,
            body_frame: true,
        })
        .unwrap();
        let before = sim.drones()[0].pose;
        for _ in 0..100 {
            sim.tick();
        }
        assert_eq!(sim.drones()[0].pose, before);
    }

    #[test]
    fn landing_reaches_landed() {
        let mut sim = airborne(2);
        sim.command(SwarmCommand::LandAll).unwrap();
        for _ in 0..30 {
            sim.tick();
        }
        for d in sim.drones() {
            assert_eq!(d.mode, FlightMode::Landed);
            assert!(d.position().z <= 0.2);
            assert_eq!(d.velocity, Vec3::ZERO);
        }
    }

    #[test]
    fn manual_velocity_clamped_and_body_frame() {
        let mut sim = airborne(1);
        sim.command(SwarmCommand::ManualVelocity {
            drone: 0,
            velocity: Vec3::new(5.0, 0.0, 0.0),
            yaw_rate: 0.0,
            body_frame: true,
        })
        .unwrap();
        let x0 = sim.drones()[0].position().x;
        for _ in 0..20 {
            sim.tick();
        }
        assert!((sim.drones()[0].position().x - x0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn battery_depletion_forces_landing() {
        let cfg = SimConfig {
            battery_life: 2.0,
            ..SimConfig::default()
        };
        let mut sim = Simulator::with_swarm(cfg, 1, 1.0).unwrap();
        sim.command(SwarmCommand::TakeoffAll { z: 5.0 }).unwrap();
        let mut depleted = 0;
        let mut last = 1.0;
        for _ in 0..200 {
            let events = sim.tick();
            depleted += events
                .iter()
                .filter(|e| matches!(e, SimEvent::BatteryDepleted { .. }))
                .count();
            let b = sim.drones()[0].battery;
            assert!(b <= last);
            last = b;
        }
        assert_eq!(depleted, 1);
        assert_eq!(sim.drones()[0].mode, FlightMode::Landed);
    }

    #[test]
    fn led_fill_applies_immediately() {
        let mut sim = Simulator::with_swarm(SimConfig::default(), 3, 1.0).unwrap();
        let red = Color::new(255, 0, 0);
        sim.command(SwarmCommand::Led(EffectSpec::new(Effect::Fill, Group::All, red, 1.0))).unwrap();
        assert_eq!(sim.leds(), vec![red; 3]);
    }

    #[test]
    fn set_targets_rejects_landed() {
        let mut sim = Simulator::with_swarm(SimConfig::default(), 2, 1.0).unwrap();
        let err = sim
            .command(SwarmCommand::SetTargets {
                targets: vec![(0, Pose::at(Vec3::new(0.0, 0.0, 1.0)))],
                speed: 1.0,
            })
            .unwrap_err();
        assert_eq!(err, SimError::NotAirborne(0));
    }
}
