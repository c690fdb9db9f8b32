//! Formation generators.
//!
//! Every generator is deterministic and places slots by a fixed convention so
//! that slot `k` of a given spec is always the same point:
//!
//! * `Line`: along +x from the origin, one `spacing` apart.
//! * `Circle`: centered on the z axis, slot `k` at angle `2πk/n` counter-clockwise from +x.
//! * `Square`, `Triangle`: `n` slots evenly spaced by arc length along the perimeter,
//!   counter-clockwise, starting at `(-side/2, -side/2)` (square) or the top vertex
//!   (triangle). With `n` equal to the vertex count the slots are exactly the vertices.
//! * `Cube`: an `m×m×m` lattice with `m` the smallest integer such that `m³ >= n`,
//!   filled x-fastest and truncated to `n`; min corner at `(0, 0, altitude)`.
//! * `Pyramid`: square layers of side counts `L, L-1, …, 1`, base first.
//! * `Sphere`: Fibonacci lattice on a sphere centered at `(0, 0, altitude)`.

use super::vec::{Pose, Vec3};
use super::GeometryError;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FormationKind {
    Line,
    Circle,
    Square,
    Triangle,
    Cube,
    Pyramid,
    Sphere,
}

impl FormationKind {
    pub const ALL: [FormationKind; 7] = [
        FormationKind::Line,
        FormationKind::Circle,
        FormationKind::Square,
        FormationKind::Triangle,
        FormationKind::Cube,
        FormationKind::Pyramid,
        FormationKind::Sphere,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FormationKind::Line => "line",
            FormationKind::Circle => "circle",
            FormationKind::Square => "square",
            FormationKind::Triangle => "triangle",
            FormationKind::Cube => "cube",
            FormationKind::Pyramid => "pyramid",
            FormationKind::Sphere => "sphere",
        }
    }
}

impl fmt::Display for FormationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FormationKind {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FormationKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| GeometryError::InvalidSpec(format!("unknown formation kind `{s}`")))
    }
}

/// Parameters for [`generate`].
///
/// `size` is the spacing for `Line`, the radius for `Circle`/`Sphere`, the side
/// for `Square`/`Triangle`, the edge for `Cube` and the base side for `Pyramid`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormationSpec {
    pub kind: FormationKind,
    pub n: usize,
    pub size: f64,
    /// Pyramid apex height above the base layer.
    pub height: f64,
    /// z of planar formations; base z of `Cube`/`Pyramid`; center z of `Sphere`.
    pub altitude: f64,
}

impl FormationSpec {
    pub fn new(kind: FormationKind, n: usize, size: f64) -> Self {
        Self {
            kind,
            n,
            size,
            height: size,
            altitude: 0.0,
        }
    }

    pub fn with_altitude(mut self, altitude: f64) -> Self {
        self.altitude = altitude;
        self
    }

    pub fn with_height(mut self, height: f64) -> Self {
        self.height = height;
        self
    }

    fn validate(&self) -> Result<(), GeometryError> {
        if self.n < 1 {
            return Err(GeometryError::InvalidSpec("n must be at least 1".into()));
        }
        if !(self.size.is_finite() && self.size > 0.0) {
            return Err(GeometryError::InvalidSpec(format!(
                "size must be positive, got {}",
                self.size
            )));
        }
        if !self.altitude.is_finite() {
            return Err(GeometryError::InvalidSpec("altitude must be finite".into()));
        }
        if self.kind == FormationKind::Pyramid && !(self.height.is_finite() && self.height > 0.0) {
            return Err(GeometryError::InvalidSpec(format!(
                "pyramid height must be positive, got {}",
                self.height
            )));
        }
        Ok(())
    }
}

/// An ordered list of target poses, one per drone.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Formation {
    pub slots: Vec<Pose>,
}

impl Formation {
    pub fn from_positions(points: impl IntoIterator<Item = Vec3>) -> Self {
        Self {
            slots: points.into_iter().map(Pose::at).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.slots.iter().map(|p| p.position)
    }

    /// Mean of the slot positions (origin for an empty formation).
    pub fn centroid(&self) -> Vec3 {
        if self.slots.is_empty() {
            return Vec3::ZERO;
        }
        let sum = self.positions().fold(Vec3::ZERO, |acc, p| acc + p);
        sum * (1.0 / self.slots.len() as f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&FormationJson::from(self)).expect("formation serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let doc: FormationJson = serde_json::from_str(text)?;
        Ok(doc.into())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SlotJson {
    x: f64,
    y: f64,
    z: f64,
    yaw: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FormationJson {
    slots: Vec<SlotJson>,
}

impl From<&Formation> for FormationJson {
    fn from(f: &Formation) -> Self {
        FormationJson {
            slots: f
                .slots
                .iter()
                .map(|p| SlotJson {
                    x: p.position.x,
                    y: p.position.y,
                    z: p.position.z,
                    yaw: p.yaw,
                })
                .collect(),
        }
    }
}

impl From<FormationJson> for Formation {
    fn from(doc: FormationJson) -> Self {
        Formation {
            slots: doc
                .slots
                .into_iter()
                .map(|s| Pose::new(Vec3::new(s.x, s.y, s.z), s.yaw))
                .collect(),
        }
    }
}

/// Generates the slot positions for `spec`. All yaws are zero.
pub fn generate(spec: &FormationSpec) -> Result<Formation, GeometryError> {
    spec.validate()?;
    let n = spec.n;
    let alt = spec.altitude;
    let points = match spec.kind {
        FormationKind::Line => (0..n)
            .map(|k| Vec3::new(k as f64 * spec.size, 0.0, alt))
            .collect(),
        FormationKind::Circle => circle(n, spec.size, alt),
        FormationKind::Square => {
            if n == 1 {
                vec![Vec3::new(0.0, 0.0, alt)]
            } else {
                let h = spec.size / 2.0;
                let corners = [
                    Vec3::new(-h, -h, alt),
                    Vec3::new(h, -h, alt),
                    Vec3::new(h, h, alt),
                    Vec3::new(-h, h, alt),
                ];
                perimeter(&corners, n)
            }
        }
        FormationKind::Triangle => {
            if n == 1 {
                vec![Vec3::new(0.0, 0.0, alt)]
            } else {
                // circumradius of an equilateral triangle with the given side
                let r = spec.size / 3f64.sqrt();
                let corners = [
                    Vec3::new(0.0, r, alt),
                    Vec3::new(-spec.size / 2.0, -r / 2.0, alt),
                    Vec3::new(spec.size / 2.0, -r / 2.0, alt),
                ];
                perimeter(&corners, n)
            }
        }
        FormationKind::Cube => cube(n, spec.size, alt),
        FormationKind::Pyramid => pyramid(n, spec.size, spec.height, alt),
        FormationKind::Sphere => sphere(n, spec.size, alt),
    };
    debug_assert_eq!(points.len(), n);
    Ok(Formation::from_positions(points))
}

fn circle(n: usize, radius: f64, alt: f64) -> Vec<Vec3> {
    (0..n)
        .map(|k| {
            let angle = 2.0 * PI * k as f64 / n as f64;
            Vec3::new(radius * angle.cos(), radius * angle.sin(), alt)
        })
        .collect()
}

/// Evenly spaced points by arc length along the closed polygon `corners`.
fn perimeter(corners: &[Vec3], n: usize) -> Vec<Vec3> {
    let m = corners.len();
    let edges: Vec<f64> = (0..m)
        .map(|i| corners[i].distance(corners[(i + 1) % m]))
        .collect();
    let total: f64 = edges.iter().sum();
    (0..n)
        .map(|k| {
            // position along the perimeter in units of edges, exact at vertices when n % m == 0
            let mut remaining = k as f64 * total / n as f64;
            let mut edge = 0;
            while edge + 1 < m && remaining >= edges[edge] - 1e-12 * total {
                remaining -= edges[edge];
                edge += 1;
            }
            let remaining = remaining.max(0.0);
            let a = corners[edge];
            let b = corners[(edge + 1) % m];
            if remaining == 0.0 {
                a
            } else {
                a + (b - a) * (remaining / edges[edge])
            }
        })
        .collect()
}

fn cube(n: usize, edge: f64, alt: f64) -> Vec<Vec3> {
    if n == 1 {
        return vec![Vec3::new(0.0, 0.0, alt)];
    }
    let mut m = 1usize;
    while m * m * m < n {
        m += 1;
    }
    let step = edge / (m - 1) as f64;
    (0..n)
        .map(|i| {
            let (ix, iy, iz) = (i % m, (i / m) % m, i / (m * m));
            Vec3::new(ix as f64 * step, iy as f64 * step, alt + iz as f64 * step)
        })
        .collect()
}

fn pyramid(n: usize, base_side: f64, height: f64, alt: f64) -> Vec<Vec3> {
    let mut layers = 1usize;
    while layers * (layers + 1) * (2 * layers + 1) / 6 < n {
        layers += 1;
    }
    if layers == 1 {
        return vec![Vec3::new(0.0, 0.0, alt)];
    }
    let step = base_side / (layers - 1) as f64;
    let rise = height / (layers - 1) as f64;
    let mut out = Vec::with_capacity(n);
    'layers: for level in 0..layers {
        let count = layers - level;
        let offset = (count - 1) as f64 / 2.0;
        let z = alt + level as f64 * rise;
        for j in 0..count {
            for i in 0..count {
                if out.len() == n {
                    break 'layers;
                }
                out.push(Vec3::new(
                    (i as f64 - offset) * step,
                    (j as f64 - offset) * step,
                    z,
                ));
            }
        }
    }
    out
}

fn sphere(n: usize, radius: f64, alt: f64) -> Vec<Vec3> {
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    let turn = 2.0 * PI * (1.0 - 1.0 / golden);
    (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let ring = (1.0 - z * z).max(0.0).sqrt();
            let azimuth = turn * k as f64;
            let unit = Vec3::new(ring * azimuth.cos(), ring * azimuth.sin(), z);
            // renormalize so the radius holds to rounding
            let unit = unit * (1.0 / unit.norm());
            Vec3::new(radius * unit.x, radius * unit.y, alt + radius * unit.z)
        })
        .collect()
}
