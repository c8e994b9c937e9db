//! Built-in planar shapes and their level sets.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{BoundingBox, ImplicitDomain, LevelSet};
use crate::error::{Error, Result};
use crate::numeric::golden_min;

/// JSON shape description, e.g. `{"shape": "stadium", "L": 2.0, "r": 1.0}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ShapeSpec {
    Disk {
        #[serde(rename = "R")]
        radius: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    /// `|x/a|^m + |y/b|^m < 1` with even `m ≥ 2`.
    Superellipse {
        a: f64,
        b: f64,
        m: u32,
    },
    /// Points within `r` of the segment `[−L/2, L/2] × {0}`.
    Stadium {
        #[serde(rename = "L")]
        length: f64,
        r: f64,
    },
    /// Points within `rho` of a convex polygon.
    RoundedPolygon {
        vertices: Vec<[f64; 2]>,
        rho: f64,
    },
    /// Points within `r` of the lower half-disk of radius `L/2`; the boundary
    /// has a single straight piece of length `L` on top.
    RoundedHalfDisk {
        #[serde(rename = "L")]
        length: f64,
        r: f64,
    },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidShape(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

impl ShapeSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ShapeSpec::Disk { .. } => "disk",
            ShapeSpec::Ellipse { .. } => "ellipse",
            ShapeSpec::Superellipse { .. } => "superellipse",
            ShapeSpec::Stadium { .. } => "stadium",
            ShapeSpec::RoundedPolygon { .. } => "rounded_polygon",
            ShapeSpec::RoundedHalfDisk { .. } => "rounded_half_disk",
        }
    }

    /// Whether the built-in is strictly convex (no straight boundary pieces).
    pub fn is_strictly_convex(&self) -> bool {
        matches!(
            self,
            ShapeSpec::Disk { .. } | ShapeSpec::Ellipse { .. } | ShapeSpec::Superellipse { .. }
        )
    }

    pub fn build(&self) -> Result<ImplicitDomain> {
        let (level_set, tight, r_max): (Arc<dyn LevelSet<2>>, BoundingBox, f64) = match self {
            &ShapeSpec::Disk { radius } => {
                positive("R", radius)?;
                (
                    Arc::new(Disk { radius }),
                    BoundingBox {
                        min: [-radius; 2],
                        max: [radius; 2],
                    },
                    radius,
                )
            }
            &ShapeSpec::Ellipse { a, b } => {
                positive("a", a)?;
                positive("b", b)?;
                (
                    Arc::new(Ellipse { a, b }),
                    BoundingBox {
                        min: [-a, -b],
                        max: [a, b],
                    },
                    a.max(b),
                )
            }
            &ShapeSpec::Superellipse { a, b, m } => {
                positive("a", a)?;
                positive("b", b)?;
                if m < 2 || m % 2 != 0 {
                    return Err(Error::InvalidShape(format!(
                        "superellipse exponent m must be even and >= 2, got {m}"
                    )));
                }
                let se = Superellipse { a, b, m: m as i32 };
                let r_max = se.max_radius();
                (
                    Arc::new(se),
                    BoundingBox {
                        min: [-a, -b],
                        max: [a, b],
                    },
                    r_max,
                )
            }
            &ShapeSpec::Stadium { length, r } => {
                positive("L", length)?;
                positive("r", r)?;
                let hx = 0.5 * length + r;
                (
                    Arc::new(Stadium {
                        half_length: 0.5 * length,
                        r,
                    }),
                    BoundingBox {
                        min: [-hx, -r],
                        max: [hx, r],
                    },
                    hx,
                )
            }
            &ShapeSpec::RoundedHalfDisk { length, r } => {
                positive("L", length)?;
                positive("r", r)?;
                let outer = 0.5 * length + r;
                (
                    Arc::new(RoundedHalfDisk {
                        half_length: 0.5 * length,
                        r,
                    }),
                    BoundingBox {
                        min: [-outer, -outer],
                        max: [outer, r],
                    },
                    outer,
                )
            }
            ShapeSpec::RoundedPolygon { vertices, rho } => {
                positive("rho", *rho)?;
                let poly = RoundedPolygon::new(vertices, *rho)?;
                let mut min = [f64::INFINITY; 2];
                let mut max = [f64::NEG_INFINITY; 2];
                for v in &poly.vertices {
                    for k in 0..2 {
                        min[k] = min[k].min(v[k] - rho);
                        max[k] = max[k].max(v[k] + rho);
                    }
                }
                let r_max = poly
                    .vertices
                    .iter()
                    .map(|v| v[0].hypot(v[1]))
                    .fold(0.0, f64::max)
                    + rho;
                (Arc::new(poly), BoundingBox { min, max }, r_max)
            }
        };
        let length_scale = tight.width().max(tight.height());
        let bbox = tight.padded(0.05 * length_scale);
        Ok(
            ImplicitDomain::new(self.name(), level_set, bbox, r_max, length_scale)?
                .with_spec(self.clone()),
        )
    }
}

#[derive(Clone, Debug)]
pub struct Disk {
    pub radius: f64,
}

impl LevelSet<2> for Disk {
    fn value(&self, x: &[f64; 2]) -> f64 {
        x[0].hypot(x[1]) - self.radius
    }

    fn gradient(&self, x: &[f64; 2]) -> [f64; 2] {
        let n = x[0].hypot(x[1]);
        if n == 0.0 {
            return [0.0, 0.0];
        }
        [x[0] / n, x[1] / n]
    }
}

/// Gauge form `√((x/a)² + (y/b)²) − 1`.
#[derive(Clone, Debug)]
pub struct Ellipse {
    pub a: f64,
    pub b: f64,
}

impl LevelSet<2> for Ellipse {
    fn value(&self, x: &[f64; 2]) -> f64 {
        (x[0] / self.a).hypot(x[1] / self.b) - 1.0
    }

    fn gradient(&self, x: &[f64; 2]) -> [f64; 2] {
        let g = (x[0] / self.a).hypot(x[1] / self.b);
        if g == 0.0 {
            return [0.0, 0.0];
        }
        [x[0] / (self.a * self.a * g), x[1] / (self.b * self.b * g)]
    }
}

/// Gauge form `((x/a)^m + (y/b)^m)^{1/m} − 1`.
#[derive(Clone, Debug)]
pub struct Superellipse {
    pub a: f64,
    pub b: f64,
    pub m: i32,
}

impl Superellipse {
    fn sum(&self, x: &[f64; 2]) -> f64 {
        (x[0] / self.a).powi(self.m) + (x[1] / self.b).powi(self.m)
    }

    fn max_radius(&self) -> f64 {
        // Radial function 1/g(ω) on the first quadrant (the shape has both
        // axis symmetries); dense scan, then golden refinement.
        let radius = |w: f64| {
            let (s, c) = w.sin_cos();
            1.0 / self.sum(&[c, s]).powf(1.0 / self.m as f64)
        };
        let n = 4096;
        let step = std::f64::consts::FRAC_PI_2 / n as f64;
        let best = (0..=n)
            .map(|i| i as f64 * step)
            .max_by(|x, y| radius(*x).total_cmp(&radius(*y)))
            .unwrap_or(0.0);
        let lo = (best - step).max(0.0);
        let hi = (best + step).min(std::f64::consts::FRAC_PI_2);
        let (_, neg) = golden_min(|w| -radius(w), lo, hi, 1e-14);
        -neg * (1.0 + 1e-12)
    }
}

impl LevelSet<2> for Superellipse {
    fn value(&self, x: &[f64; 2]) -> f64 {
        self.sum(x).powf(1.0 / self.m as f64) - 1.0
    }

    fn gradient(&self, x: &[f64; 2]) -> [f64; 2] {
        let s = self.sum(x);
        if s == 0.0 {
            return [0.0, 0.0];
        }
        let scale = s.powf(1.0 / self.m as f64 - 1.0);
        [
            scale * (x[0] / self.a).powi(self.m - 1) / self.a,
            scale * (x[1] / self.b).powi(self.m - 1) / self.b,
        ]
    }
}

/// `dist(x, [−L/2, L/2] × {0}) − r`.
#[derive(Clone, Debug)]
pub struct Stadium {
    pub half_length: f64,
    pub r: f64,
}

impl LevelSet<2> for Stadium {
    fn value(&self, x: &[f64; 2]) -> f64 {
        let dx = (x[0].abs() - self.half_length).max(0.0);
        dx.hypot(x[1]) - self.r
    }

    fn gradient(&self, x: &[f64; 2]) -> [f64; 2] {
        let dx = (x[0].abs() - self.half_length).max(0.0);
        let d = dx.hypot(x[1]);
        if d == 0.0 {
            return [0.0, 0.0];
        }
        [x[0].signum() * dx / d, x[1] / d]
    }
}

/// Signed distance to the half-disk `{|x| ≤ L/2, y ≤ 0}`, minus `r`.
#[derive(Clone, Debug)]
pub struct RoundedHalfDisk {
    pub half_length: f64,
    pub r: f64,
}

impl RoundedHalfDisk {
    fn signed_distance(&self, x: &[f64; 2]) -> (f64, [f64; 2]) {
        let rho = self.half_length;
        let (px, py) = (x[0], x[1]);
        if py <= 0.0 {
            let n = px.hypot(py);
            let radial = n - rho;
            if n > rho || radial > py {
                let g = if n == 0.0 {
                    [0.0, 0.0]
                } else {
                    [px / n, py / n]
                };
                (radial, g)
            } else {
                (py, [0.0, 1.0])
            }
        } else if px.abs() <= rho {
            (py, [0.0, 1.0])
        } else {
            let dx = px.abs() - rho;
            let d = dx.hypot(py);
            (d, [px.signum() * dx / d, py / d])
        }
    }
}

impl LevelSet<2> for RoundedHalfDisk {
    fn value(&self, x: &[f64; 2]) -> f64 {
        self.signed_distance(x).0 - self.r
    }

    fn gradient(&self, x: &[f64; 2]) -> [f64; 2] {
        self.signed_distance(x).1
    }
}

/// Signed distance to a convex polygon, minus `rho`.
#[derive(Clone, Debug)]
pub struct RoundedPolygon {
    /// Counter-clockwise.
    pub vertices: Vec<[f64; 2]>,
    pub rho: f64,
}

impl RoundedPolygon {
    pub fn new(vertices: &[[f64; 2]], rho: f64) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidShape(
                "rounded_polygon needs at least 3 vertices".into(),
            ));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidShape(
                "rounded_polygon vertices must be finite".into(),
            ));
        }
        let cross = |i: usize| {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
        };
        let signs: Vec<f64> = (0..n).map(cross).collect();
        let all_pos = signs.iter().all(|&s| s > 0.0);
        let all_neg = signs.iter().all(|&s| s < 0.0);
        if !(all_pos || all_neg) {
            return Err(Error::InvalidShape(
                "rounded_polygon vertices must form a strictly convex polygon".into(),
            ));
        }
        let mut vertices = vertices.to_vec();
        if all_neg {
            vertices.reverse();
        }
        Ok(Self { vertices, rho })
    }

    fn signed_distance(&self, x: &[f64; 2]) -> (f64, [f64; 2]) {
        let n = self.vertices.len();
        let mut inside = true;
        let mut best_d2 = f64::INFINITY;
        let mut best_q = [0.0; 2];
        let mut best_edge_normal = [0.0; 2];
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let e = [b[0] - a[0], b[1] - a[1]];
            let len2 = e[0] * e[0] + e[1] * e[1];
            let w = [x[0] - a[0], x[1] - a[1]];
            // Outward normal of a counter-clockwise edge.
            let len = len2.sqrt();
            let outward = [e[1] / len, -e[0] / len];
            if outward[0] * w[0] + outward[1] * w[1] > 0.0 {
                inside = false;
            }
            let t = ((w[0] * e[0] + w[1] * e[1]) / len2).clamp(0.0, 1.0);
            let q = [a[0] + t * e[0], a[1] + t * e[1]];
            let d2 = (x[0] - q[0]).powi(2) + (x[1] - q[1]).powi(2);
            if d2 < best_d2 {
                best_d2 = d2;
                best_q = q;
                best_edge_normal = outward;
            }
        }
        let d = best_d2.sqrt();
        let sign = if inside { -1.0 } else { 1.0 };
        let grad = if d == 0.0 {
            best_edge_normal
        } else {
            [sign * (x[0] - best_q[0]) / d, sign * (x[1] - best_q[1]) / d]
        };
        (sign * d, grad)
    }
}

impl LevelSet<2> for RoundedPolygon {
    fn value(&self, x: &[f64; 2]) -> f64 {
        self.signed_distance(x).0 - self.rho
    }

    fn gradient(&self, x: &[f64; 2]) -> [f64; 2] {
        self.signed_distance(x).1
    }
}
