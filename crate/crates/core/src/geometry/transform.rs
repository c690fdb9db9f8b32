//! Rigid and similarity transforms applied to a whole formation.
//!
//! Scaling and rotation act about the formation centroid so a formation stays
//! in place while it is edited. Slots move by an offset relative to their own
//! position, so the identity transforms are exact.

use super::formation::Formation;
use super::vec::{normalize_yaw, Pose, Vec3};
use super::GeometryError;

pub fn translate(f: &Formation, offset: Vec3) -> Formation {
    Formation {
        slots: f
            .slots
            .iter()
            .map(|p| Pose {
                position: p.position + offset,
                yaw: p.yaw,
            })
            .collect(),
    }
}

pub fn scale(f: &Formation, factor: f64) -> Result<Formation, GeometryError> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(GeometryError::InvalidFactor(factor));
    }
    let c = f.centroid();
    Ok(Formation {
        slots: f
            .slots
            .iter()
            .map(|p| Pose {
                position: p.position + (p.position - c) * (factor - 1.0),
                yaw: p.yaw,
            })
            .collect(),
    })
}

/// Rotates positions about the vertical axis through the centroid and adds
/// `angle` to every slot yaw.
pub fn rotate(f: &Formation, angle: f64) -> Formation {
    let c = f.centroid();
    Formation {
        slots: f
            .slots
            .iter()
            .map(|p| Pose {
                position: {
                    let d = p.position - c;
                    p.position + (d.rotated_z(angle) - d)
                },
                yaw: normalize_yaw(p.yaw + angle),
            })
            .collect(),
    }
}
