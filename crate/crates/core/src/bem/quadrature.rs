//! Symmetric Gauss rules on triangles (Dunavant), in barycentric coordinates
//! with weights summing to one.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Triangle quadrature rule, named by point count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TriangleRule {
    P1,
    P3,
    P6,
    P12,
    /// The 12-point rule applied on the four midpoint subtriangles.
    P48,
}

impl TriangleRule {
    pub fn from_points(n: usize) -> Result<Self> {
        match n {
            1 => Ok(TriangleRule::P1),
            3 => Ok(TriangleRule::P3),
            6 => Ok(TriangleRule::P6),
            12 => Ok(TriangleRule::P12),
            48 => Ok(TriangleRule::P48),
            _ => Err(Error::InvalidArgument(format!(
                "triangle rule must have 1, 3, 6, 12 or 48 points, got {n}"
            ))),
        }
    }

    pub fn num_points(self) -> usize {
        match self {
            TriangleRule::P1 => 1,
            TriangleRule::P3 => 3,
            TriangleRule::P6 => 6,
            TriangleRule::P12 => 12,
            TriangleRule::P48 => 48,
        }
    }

    /// Highest total polynomial degree integrated exactly.
    pub fn degree(self) -> usize {
        match self {
            TriangleRule::P1 => 1,
            TriangleRule::P3 => 2,
            TriangleRule::P6 => 4,
            TriangleRule::P12 | TriangleRule::P48 => 6,
        }
    }

    /// Rule used for near-field and singular pairs.
    pub fn elevated(self) -> Self {
        match self {
            TriangleRule::P1 => TriangleRule::P3,
            TriangleRule::P3 => TriangleRule::P6,
            TriangleRule::P6 => TriangleRule::P12,
            TriangleRule::P12 | TriangleRule::P48 => TriangleRule::P48,
        }
    }

    /// `(barycentric coordinates, weight)` pairs.
    pub fn points(self) -> &'static [([f64; 3], f64)] {
        static P48: OnceLock<Vec<([f64; 3], f64)>> = OnceLock::new();
        match self {
            TriangleRule::P1 => &P1_POINTS,
            TriangleRule::P3 => &P3_POINTS,
            TriangleRule::P6 => P6_POINTS.get_or_init(|| orbit_rule(&P6_ORBITS)),
            TriangleRule::P12 => P12_POINTS.get_or_init(|| orbit_rule(&P12_ORBITS)),
            TriangleRule::P48 => P48.get_or_init(subdivided_p12),
        }
    }
}

static P1_POINTS: [([f64; 3], f64); 1] = [([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1.0)];
static P3_POINTS: [([f64; 3], f64); 3] = [
    ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
];
static P6_POINTS: OnceLock<Vec<([f64; 3], f64)>> = OnceLock::new();
static P12_POINTS: OnceLock<Vec<([f64; 3], f64)>> = OnceLock::new();

// (a, b, weight): points are the distinct permutations of (a, a, 1-2a) when
// b is None, else of (a, b, 1-a-b).
const P6_ORBITS: [(f64, Option<f64>, f64); 2] = [
    (0.445948490915965, None, 0.223381589678011),
    (0.091576213509771, None, 0.109951743655322),
];
const P12_ORBITS: [(f64, Option<f64>, f64); 3] = [
    (0.249286745170910, None, 0.116786275726379),
    (0.063089014491502, None, 0.050844906370207),
    (0.053145049844817, Some(0.310352451033784), 0.082851075618374),
];

fn orbit_rule(orbits: &[(f64, Option<f64>, f64)]) -> Vec<([f64; 3], f64)> {
    let mut pts = Vec::new();
    for &(a, b, w) in orbits {
        match b {
            None => {
                let c = 1.0 - 2.0 * a;
                pts.extend([([c, a, a], w), ([a, c, a], w), ([a, a, c], w)]);
            }
            Some(b) => {
                let c = 1.0 - a - b;
                for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
                    pts.push((p, w));
                }
            }
        }
    }
    // absorb the 15-digit rounding of the tabulated weights
    let total: f64 = pts.iter().map(|p| p.1).sum();
    pts.iter_mut().for_each(|p| p.1 /= total);
    pts
}

fn subdivided_p12() -> Vec<([f64; 3], f64)> {
    let v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mid = |i: usize, j: usize| [0.5 * (v[i][0] + v[j][0]), 0.5 * (v[i][1] + v[j][1]), 0.5 * (v[i][2] + v[j][2])];
    let (m01, m12, m20) = (mid(0, 1), mid(1, 2), mid(2, 0));
    let subs = [[v[0], m01, m20], [m01, v[1], m12], [m20, m12, v[2]], [m01, m12, m20]];
    let mut pts = Vec::with_capacity(48);
    for s in subs {
        for &(l, w) in TriangleRule::P12.points() {
            let mut b = [0.0; 3];
            for k in 0..3 {
                b[k] = l[0] * s[0][k] + l[1] * s[1][k] + l[2] * s[2][k];
            }
            pts.push((b, 0.25 * w));
        }
    }
    pts
}
