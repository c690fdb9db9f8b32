use super::cpa::{check_safe_distance, detect, Trajectory};
use super::AvoidanceError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Delay increments a drone may receive before its goal is lifted.
pub const MAX_DELAY_STEPS: u32 = 20;
/// Goal z offset applied once delays are exhausted, m.
pub const ALTITUDE_OFFSET: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdjustmentKind {
    Delay,
    AltitudeOffset,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Adjustment {
    pub drone_id: u32,
    pub kind: AdjustmentKind,
    /// Seconds for a delay, meters for an altitude offset. Always positive.
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedPlan {
    pub trajectories: Vec<Trajectory>,
    pub adjustments: Vec<Adjustment>,
}

#[derive(Debug, Default, Clone, Copy)]
struct Ladder {
    delays: u32,
    lifted: bool,
}

impl Ladder {
    /// Next rung, or `None` when the drone has nothing left to give.
    fn escalate(self) -> Option<Ladder> {
        if self.delays < MAX_DELAY_STEPS {
            Some(Ladder {
                delays: self.delays + 1,
                ..self
            })
        } else if !self.lifted {
            Some(Ladder {
                delays: 0,
                lifted: true,
            })
        } else {
            None
        }
    }

    fn apply(self, original: &Trajectory, d_safe: f64) -> Trajectory {
        let mut t = *original;
        if self.delays > 0 {
            t.depart_time += self.delays as f64 * d_safe / original.speed;
        }
        if self.lifted {
            t.goal.z += ALTITUDE_OFFSET;
        }
        t
    }
}

/// Removes every conflict by delaying or lifting lower-priority drones.
///
/// Priority is ascending drone id: in each conflict the drone with the larger
/// id yields. A yielding drone first departs later in steps of
/// `d_safe / speed` (up to [`MAX_DELAY_STEPS`]), then has its goal raised by
/// [`ALTITUDE_OFFSET`] and walks the delay ladder once more. A stationary
/// drone cannot yield, so its moving partner does. Goals never move in x or y.
pub fn resolve(plan: &[Trajectory], d_safe: f64) -> Result<ResolvedPlan, AvoidanceError> {
    check_safe_distance(d_safe)?;
    let mut current = plan.to_vec();
    let index: BTreeMap<u32, usize> = plan
        .iter()
        .enumerate()
        .map(|(i, t)| (t.drone_id, i))
        .collect();
    let mut ladders = vec![Ladder::default(); plan.len()];

    loop {
        let conflicts = detect(&current, d_safe)?;
        let Some(first) = conflicts.first() else {
            break;
        };
        let (lo, hi) = first.pair;
        let (ilo, ihi) = (index[&lo], index[&hi]);
        let yielding = if !plan[ihi].is_stationary() {
            ihi
        } else if !plan[ilo].is_stationary() {
            ilo
        } else {
            return Err(AvoidanceError::Unresolvable {
                pair: first.pair,
                d_star: first.d_star,
            });
        };
        let Some(next) = ladders[yielding].escalate() else {
            return Err(AvoidanceError::Unresolvable {
                pair: first.pair,
                d_star: first.d_star,
            });
        };
        ladders[yielding] = next;
        current[yielding] = next.apply(&plan[yielding], d_safe);
    }

    let mut adjustments = Vec::new();
    for (t, ladder) in plan.iter().zip(&ladders) {
        if ladder.delays > 0 {
            adjustments.push(Adjustment {
                drone_id: t.drone_id,
                kind: AdjustmentKind::Delay,
                amount: ladder.delays as f64 * d_safe / t.speed,
            });
        }
        if ladder.lifted {
            adjustments.push(Adjustment {
                drone_id: t.drone_id,
                kind: AdjustmentKind::AltitudeOffset,
                amount: ALTITUDE_OFFSET,
            });
        }
    }
    Ok(ResolvedPlan {
        trajectories: current,
        adjustments,
    })
}
