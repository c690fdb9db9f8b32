//! Optimal drone-to-slot matching.
//!
//! Minimizes the sum of squared travel distances with the O(n³) shortest
//! augmenting path form of the Hungarian method. Among all optimal matchings
//! the lexicographically smallest `slot_of` is returned: the dual potentials
//! identify the tight edges, and every optimal matching is a perfect matching
//! on those edges, so drones are pinned one at a time to their smallest
//! feasible tight slot.

use super::formation::Formation;
use super::vec::Vec3;
use super::GeometryError;

pub const MAX_ASSIGN: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `slot_of[drone]` is the slot index the drone flies to.
    pub slot_of: Vec<usize>,
    /// Sum of squared distances, m².
    pub total_cost: f64,
}

pub fn assign(current: &[Vec3], target: &Formation) -> Result<Assignment, GeometryError> {
    let n = current.len();
    if n != target.len() {
        return Err(GeometryError::SizeMismatch {
            drones: n,
            slots: target.len(),
        });
    }
    if n > MAX_ASSIGN {
        return Err(GeometryError::TooManyDrones(n));
    }
    if n == 0 {
        return Ok(Assignment {
            slot_of: Vec::new(),
            total_cost: 0.0,
        });
    }
    let cost: Vec<Vec<f64>> = current
        .iter()
        .map(|c| target.positions().map(|s| c.distance_squared(s)).collect())
        .collect();

    let (row_pot, col_pot, slot_of) = hungarian(&cost);
    let slot_of = lexicographic_tight_matching(&cost, &row_pot, &col_pot, slot_of);
    let total_cost = slot_of.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    Ok(Assignment {
        slot_of,
        total_cost,
    })
}

/// Returns row potentials, column potentials and an optimal `row -> column` matching.
fn hungarian(cost: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let n = cost.len();
    // 1-based with a virtual column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        let mut min_to = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if reduced < min_to[j] {
                    min_to[j] = reduced;
                    way[j] = j0;
                }
                if min_to[j] < delta {
                    delta = min_to[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut slot_of = vec![0usize; n];
    for j in 1..=n {
        slot_of[row_of[j] - 1] = j - 1;
    }
    (u[1..].to_vec(), v[1..].to_vec(), slot_of)
}

fn lexicographic_tight_matching(
    cost: &[Vec<f64>],
    row_pot: &[f64],
    col_pot: &[f64],
    mut slot_of: Vec<usize>,
) -> Vec<usize> {
    let n = cost.len();
    let scale = cost
        .iter()
        .flat_map(|r| r.iter())
        .fold(1.0f64, |m, &c| m.max(c.abs()));
    let eps = 1e-9 * scale;
    let tight: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| cost[i][j] - row_pot[i] - col_pot[j] <= eps)
                .collect()
        })
        .collect();
    // the optimal matching itself is tight; keep it reachable regardless of rounding
    let tight: Vec<Vec<usize>> = tight
        .into_iter()
        .enumerate()
        .map(|(i, mut t)| {
            if !t.contains(&slot_of[i]) {
                t.push(slot_of[i]);
                t.sort_unstable();
            }
            t
        })
        .collect();

    let mut drone_at = vec![0usize; n];
    for (i, &j) in slot_of.iter().enumerate() {
        drone_at[j] = i;
    }

    for i in 0..n {
        for &j in &tight[i] {
            if j == slot_of[i] {
                break;
            }
            // try to move drone i onto slot j: the displaced drone must reach
            // slot_of[i] via an alternating path through unpinned drones
            let freed = slot_of[i];
            let displaced = drone_at[j];
            if displaced < i {
                continue;
            }
            let mut visited = vec![false; n];
            visited[j] = true;
            let mut path = Vec::new();
            if augment(displaced, freed, i, &tight, &drone_at, &mut visited, &mut path) {
                // path holds (drone, new slot) pairs along the alternating path
                for &(d, s) in &path {
                    slot_of[d] = s;
                    drone_at[s] = d;
                }
                slot_of[i] = j;
                drone_at[j] = i;
                break;
            }
        }
    }
    slot_of
}

#[allow(clippy::too_many_arguments)]
fn augment(
    drone: usize,
    goal: usize,
    pinned_below: usize,
    tight: &[Vec<usize>],
    drone_at: &[usize],
    visited: &mut [bool],
    path: &mut Vec<(usize, usize)>,
) -> bool {
    for &s in &tight[drone] {
        if visited[s] {
            continue;
        }
        visited[s] = true;
        if s == goal {
            path.push((drone, s));
            return true;
        }
        let next = drone_at[s];
        if next <= pinned_below {
            continue;
        }
        if augment(next, goal, pinned_below, tight, drone_at, visited, path) {
            path.push((drone, s));
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn already_in_place_is_identity() {
        let target = Formation::from_positions([
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(1.0, 0.0, 1.0),
            Vec3::new(2.0, 0.0, 1.0),
        ]);
        let current: Vec<Vec3> = target.positions().collect();
        let a = assign(&current, &target).unwrap();
        assert_eq!(a.slot_of, vec![0, 1, 2]);
        assert_eq!(a.total_cost, 0.0);
    }

    #[test]
    fn crossed_pair_is_swapped() {
        let current = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(10.0, 0.0, 0.0)];
        let target = Formation::from_positions([Vec3::new(10.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 0.0)]);
        let a = assign(&current, &target).unwrap();
        assert_eq!(a.slot_of, vec![1, 0]);
        assert_eq!(a.total_cost, 0.0);
    }

    #[test]
    fn ties_pick_lexicographically_smallest() {
        // all drones at one point: every permutation costs the same
        let current = vec![Vec3::ZERO; 5];
        let target = Formation::from_positions((0..5).map(|k| Vec3::new(0.0, (k as f64).cos(), (k as f64).sin())));
        let a = assign(&current, &target).unwrap();
        assert_eq!(a.slot_of, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn size_mismatch() {
        let target = Formation::from_positions([Vec3::ZERO]);
        assert!(matches!(
            assign(&[Vec3::ZERO, Vec3::ZERO], &target),
            Err(GeometryError::SizeMismatch { .. })
        ));
    }

    #[test]
    fn large_instance_is_a_permutation() {
        let n = 256;
        let current: Vec<Vec3> = (0..n).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        let target = Formation::from_positions((0..n).map(|i| Vec3::new((n - 1 - i) as f64, 1.0, 0.0)));
        let a = assign(&current, &target).unwrap();
        let mut seen = a.slot_of.clone();
        seen.sort_unstable();
        assert_eq!(seen, (0..n).collect::<Vec<_>>());
        // matching each drone to the slot directly above it is optimal
        assert!((a.total_cost - n as f64).abs() < 1e-6);
    }
}
