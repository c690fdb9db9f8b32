use super::AvoidanceError;
use crate::geometry::Vec3;
use serde::{Deserialize, Serialize};

/// A straight constant-speed transition. The drone holds `start` until
/// `depart_time`, flies to `goal` at `speed` and then holds `goal`.
/// `speed == 0` encodes a stationary drone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub drone_id: u32,
    pub start: Vec3,
    pub goal: Vec3,
    pub speed: f64,
    pub depart_time: f64,
}

impl Trajectory {
    pub fn moving(drone_id: u32, start: Vec3, goal: Vec3, speed: f64) -> Self {
        Self {
            drone_id,
            start,
            goal,
            speed,
            depart_time: 0.0,
        }
    }

    pub fn stationary(drone_id: u32, at: Vec3) -> Self {
        Self {
            drone_id,
            start: at,
            goal: at,
            speed: 0.0,
            depart_time: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), AvoidanceError> {
        let bad = |reason: &str| AvoidanceError::InvalidTrajectory {
            drone_id: self.drone_id,
            reason: reason.to_string(),
        };
        if !(self.start.is_finite() && self.goal.is_finite()) {
            return Err(bad("non-finite endpoint"));
        }
        if !(self.speed.is_finite() && self.speed >= 0.0) {
            return Err(bad("speed must be finite and nonnegative"));
        }
        if self.speed == 0.0 && self.start != self.goal {
            return Err(bad("a stationary drone must have start == goal"));
        }
        if !(self.depart_time.is_finite() && self.depart_time >= 0.0) {
            return Err(bad("depart_time must be finite and nonnegative"));
        }
        Ok(())
    }

    /// True when the drone never moves.
    pub fn is_stationary(&self) -> bool {
        self.speed == 0.0 || self.start == self.goal
    }

    pub fn duration(&self) -> f64 {
        if self.is_stationary() {
            0.0
        } else {
            self.start.distance(self.goal) / self.speed
        }
    }

    pub fn arrival_time(&self) -> f64 {
        self.depart_time + self.duration()
    }

    /// Velocity while in motion; zero for a stationary drone.
    pub fn velocity(&self) -> Vec3 {
        if self.is_stationary() {
            Vec3::ZERO
        } else {
            (self.goal - self.start) * (1.0 / self.duration())
        }
    }

    pub fn position_at(&self, t: f64) -> Vec3 {
        if t <= self.depart_time || self.is_stationary() {
            self.start
        } else if t >= self.arrival_time() {
            self.goal
        } else {
            self.start + self.velocity() * (t - self.depart_time)
        }
    }

    fn velocity_at(&self, t: f64) -> Vec3 {
        if t > self.depart_time && t < self.arrival_time() {
            self.velocity()
        } else {
            Vec3::ZERO
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    /// At least one of the two drones does not move.
    StationaryMoving,
    /// Both move along parallel or antiparallel lines.
    Parallel,
    NonParallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conflict {
    pub pair: (u32, u32),
    /// Time of closest approach, s.
    pub t_star: f64,
    /// Separation at `t_star`, m.
    pub d_star: f64,
    pub scenario: Scenario,
}

const PARALLEL_EPS: f64 = 1e-9;

pub fn classify(a: &Trajectory, b: &Trajectory) -> Scenario {
    match (a.velocity().normalized(), b.velocity().normalized()) {
        (Some(ua), Some(ub)) => {
            if ua.cross(ub).norm() < PARALLEL_EPS {
                Scenario::Parallel
            } else {
                Scenario::NonParallel
            }
        }
        _ => Scenario::StationaryMoving,
    }
}

/// Exact closest point of approach over the whole maneuver.
///
/// Motion is piecewise linear (hold, move, hold) so the time axis is split at
/// every departure and arrival; on each piece the squared separation is a
/// quadratic whose constrained minimum is closed form. The earliest global
/// minimizer is reported.
pub fn cpa(a: &Trajectory, b: &Trajectory) -> Conflict {
    let t0 = a.depart_time.min(b.depart_time);
    let t1 = a.arrival_time().max(b.arrival_time());
    let mut cuts = vec![
        t0,
        t1,
        a.depart_time,
        a.arrival_time(),
        b.depart_time,
        b.arrival_time(),
    ];
    cuts.retain(|&t| t >= t0 && t <= t1);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let sep2 = |t: f64| (b.position_at(t) - a.position_at(t)).norm_squared();
    let mut best_t = t0;
    let mut best_d2 = sep2(t0);

    for piece in cuts.windows(2) {
        let (s, e) = (piece[0], piece[1]);
        let mid = 0.5 * (s + e);
        let w = b.velocity_at(mid) - a.velocity_at(mid);
        let r = b.position_at(s) - a.position_at(s);
        let ww = w.norm_squared();
        let tc = if ww > 0.0 {
            (s - r.dot(w) / ww).clamp(s, e)
        } else {
            s
        };
        let d2 = (r + w * (tc - s)).norm_squared();
        if d2 < best_d2 {
            best_d2 = d2;
            best_t = tc;
        }
        // piece end, which the next piece re-evaluates from fresh positions
        let d2e = sep2(e);
        if d2e < best_d2 {
            best_d2 = d2e;
            best_t = e;
        }
    }

    Conflict {
        pair: (a.drone_id, b.drone_id),
        t_star: best_t,
        d_star: best_d2.sqrt(),
        scenario: classify(a, b),
    }
}

/// Every pair whose closest approach is below `d_safe`, sorted by `(t_star, pair)`.
/// Pairs are reported with the smaller drone id first.
pub fn detect(plan: &[Trajectory], d_safe: f64) -> Result<Vec<Conflict>, AvoidanceError> {
    check_safe_distance(d_safe)?;
    let mut ids: Vec<u32> = plan.iter().map(|t| t.drone_id).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(AvoidanceError::DuplicateDroneId(w[0]));
    }
    for t in plan {
        t.validate()?;
    }
    let mut out = Vec::new();
    for (i, a) in plan.iter().enumerate() {
        for b in &plan[i + 1..] {
            let (lo, hi) = if a.drone_id < b.drone_id { (a, b) } else { (b, a) };
            let c = cpa(lo, hi);
            if c.d_star < d_safe {
                out.push(c);
            }
        }
    }
    out.sort_by(|x, y| x.t_star.total_cmp(&y.t_star).then(x.pair.cmp(&y.pair)));
    Ok(out)
}

pub(super) fn check_safe_distance(d_safe: f64) -> Result<(), AvoidanceError> {
    if d_safe.is_finite() && d_safe > 0.0 {
        Ok(())
    } else {
        Err(AvoidanceError::InvalidSafeDistance(d_safe))
    }
}
