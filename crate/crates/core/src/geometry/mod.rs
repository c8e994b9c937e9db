//! Implicit domains `Ω = {φ < 0}`, directions, reflections and inward normals.
//!
//! Reflections and normals are dimension-generic; boundary extraction and the
//! built-in shapes are planar.

mod boundary;
mod shapes;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub use boundary::{extract_boundary, Boundary, BoundarySample};
pub use shapes::{
    Disk, Ellipse, RoundedHalfDisk, RoundedPolygon, ShapeSpec, Stadium, Superellipse,
};

/// Smallest admissible level-set gradient norm on the boundary.
pub const MIN_GRADIENT_NORM: f64 = 1e-8;

/// Unit vector on `S^{N-1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction<const N: usize>([f64; N]);

impl<const N: usize> Direction<N> {
    /// Normalizes `components`; fails on the zero vector or non-finite input.
    pub fn new(components: [f64; N]) -> Result<Self> {
        if components.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteDirection);
        }
        let norm = norm(&components);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroDirection);
        }
        let mut out = components;
        for c in out.iter_mut() {
            *c /= norm;
        }
        // One extra pass pulls | |v| - 1 | down to rounding level.
        let n2 = norm_sq(&out);
        let corr = 1.0 / n2.sqrt();
        for c in out.iter_mut() {
            *c *= corr;
        }
        Ok(Self(out))
    }

    pub fn components(&self) -> &[f64; N] {
        &self.0
    }

    pub fn dot(&self, x: &[f64; N]) -> f64 {
        dot(&self.0, x)
    }
}

impl<const N: usize> std::ops::Neg for Direction<N> {
    type Output = Self;

    fn neg(self) -> Self {
        let mut out = self.0;
        for c in out.iter_mut() {
            *c = -*c;
        }
        Self(out)
    }
}

impl Direction<2> {
    /// `(cos θ, sin θ)`.
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self([c, s])
    }

    pub fn angle(&self) -> f64 {
        self.0[1].atan2(self.0[0])
    }
}

/// A level-set function and its gradient.
///
/// Implementations must be pure: no interior mutability, so domains can be
/// shared across threads.
pub trait LevelSet<const N: usize>: Send + Sync {
    fn value(&self, x: &[f64; N]) -> f64;
    fn gradient(&self, x: &[f64; N]) -> [f64; N];
}

impl<const N: usize, F, G> LevelSet<N> for (F, G)
where
    F: Fn(&[f64; N]) -> f64 + Send + Sync,
    G: Fn(&[f64; N]) -> [f64; N] + Send + Sync,
{
    fn value(&self, x: &[f64; N]) -> f64 {
        (self.0)(x)
    }

    fn gradient(&self, x: &[f64; N]) -> [f64; N] {
        (self.1)(x)
    }
}

/// Axis-aligned box.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct BoundingBox {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl BoundingBox {
    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn center(&self) -> [f64; 2] {
        [
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
        ]
    }

    pub fn padded(&self, margin: f64) -> Self {
        Self {
            min: [self.min[0] - margin, self.min[1] - margin],
            max: [self.max[0] + margin, self.max[1] + margin],
        }
    }
}

/// A bounded open planar set `{φ < 0}` with C¹ boundary.
#[derive(Clone)]
pub struct ImplicitDomain {
    level_set: Arc<dyn LevelSet<2>>,
    bbox: BoundingBox,
    r_max: f64,
    length_scale: f64,
    name: String,
    spec: Option<ShapeSpec>,
}

impl fmt::Debug for ImplicitDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImplicitDomain")
            .field("name", &self.name)
            .field("bbox", &self.bbox)
            .field("r_max", &self.r_max)
            .field("length_scale", &self.length_scale)
            .finish()
    }
}

impl ImplicitDomain {
    /// Wraps a user level set.
    ///
    /// `bbox` must contain the closure of the domain with `φ > 0` on its
    /// faces; `r_max` bounds `|x|` over the closure; `length_scale` sets the
    /// default tolerances (use the diameter when known).
    pub fn new(
        name: impl Into<String>,
        level_set: Arc<dyn LevelSet<2>>,
        bbox: BoundingBox,
        r_max: f64,
        length_scale: f64,
    ) -> Result<Self> {
        if !(bbox.width() > 0.0 && bbox.height() > 0.0) {
            return Err(Error::InvalidShape(
                "bounding box must have positive extent".into(),
            ));
        }
        if !(r_max > 0.0 && length_scale > 0.0) {
            return Err(Error::InvalidShape(
                "r_max and length_scale must be positive".into(),
            ));
        }
        Ok(Self {
            level_set,
            bbox,
            r_max,
            length_scale,
            name: name.into(),
            spec: None,
        })
    }

    pub fn from_spec(spec: &ShapeSpec) -> Result<Self> {
        spec.build()
    }

    pub(crate) fn with_spec(mut self, spec: ShapeSpec) -> Self {
        self.spec = Some(spec);
        self
    }

    pub fn phi(&self, x: &[f64; 2]) -> f64 {
        self.level_set.value(x)
    }

    pub fn grad_phi(&self, x: &[f64; 2]) -> [f64; 2] {
        self.level_set.gradient(x)
    }

    pub fn level_set(&self) -> &dyn LevelSet<2> {
        self.level_set.as_ref()
    }

    pub fn bounding_box(&self) -> BoundingBox {
        self.bbox
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Longest side of the tight bounding box; the diameter for every
    /// centrally symmetric built-in except rotated polygons.
    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn spec(&self) -> Option<&ShapeSpec> {
        self.spec.as_ref()
    }

    /// Default boundary resolution: `length_scale / 400`.
    pub fn default_resolution(&self) -> f64 {
        self.length_scale / 400.0
    }

    /// Default projection tolerance: `1e-10 · length_scale`.
    pub fn default_tol_proj(&self) -> f64 {
        1e-10 * self.length_scale
    }

    /// `a(ν)`, computed on a freshly extracted boundary at default resolution.
    pub fn support_min(&self, nu: &Direction<2>) -> Result<f64> {
        let boundary = extract_boundary(self, self.default_resolution())?;
        boundary.support_min(self, nu, 1e-9 * self.length_scale)
    }

    /// Newton projection onto `{φ = 0}` along the gradient.
    pub fn project(&self, x0: &[f64; 2]) -> Result<[f64; 2]> {
        project_to_zero(self.level_set(), x0, self.default_tol_proj())
    }
}

/// Newton projection of `x0` onto the zero set of `ls` along the gradient.
pub fn project_to_zero<const N: usize>(
    ls: &(impl LevelSet<N> + ?Sized),
    x0: &[f64; N],
    tol_proj: f64,
) -> Result<[f64; N]> {
    let mut x = *x0;
    let mut f = ls.value(&x);
    let floor = 1e-6 * tol_proj;
    for _ in 0..64 {
        if f.abs() <= floor {
            break;
        }
        let g = ls.gradient(&x);
        let n2 = norm_sq(&g);
        if n2.sqrt() < MIN_GRADIENT_NORM {
            return Err(Error::DegenerateGradient {
                norm: n2.sqrt(),
                point: x.to_vec(),
            });
        }
        let mut next = x;
        for k in 0..N {
            next[k] -= f * g[k] / n2;
        }
        let f_next = ls.value(&next);
        if f_next.abs() >= f.abs() {
            // Rounding floor reached.
            break;
        }
        x = next;
        f = f_next;
    }
    if f.abs() > tol_proj {
        return Err(Error::NotOnBoundary {
            phi: f,
            tol: tol_proj,
        });
    }
    Ok(x)
}

/// `x + 2(λ − x·ν)ν`: reflection across the hyperplane `{x·ν = λ}`.
pub fn reflect_point<const N: usize>(x: &[f64; N], nu: &Direction<N>, lambda: f64) -> [f64; N] {
    let shift = 2.0 * (lambda - nu.dot(x));
    let mut out = *x;
    for (o, n) in out.iter_mut().zip(nu.components()) {
        *o += shift * n;
    }
    out
}

/// `−∇φ/|∇φ|` at a boundary point.
pub fn inward_normal<const N: usize>(
    ls: &(impl LevelSet<N> + ?Sized),
    x: &[f64; N],
    tol_proj: f64,
) -> Result<Direction<N>> {
    let phi = ls.value(x);
    if phi.abs() > tol_proj {
        return Err(Error::NotOnBoundary { phi, tol: tol_proj });
    }
    unit_inward(ls, x)
}

pub(crate) fn unit_inward<const N: usize>(
    ls: &(impl LevelSet<N> + ?Sized),
    x: &[f64; N],
) -> Result<Direction<N>> {
    let g = ls.gradient(x);
    let n = norm(&g);
    if n.is_nan() || n < MIN_GRADIENT_NORM {
        return Err(Error::DegenerateGradient {
            norm: n,
            point: x.to_vec(),
        });
    }
    let mut out = g;
    for c in out.iter_mut() {
        *c = -*c / n;
    }
    Ok(Direction(out))
}

pub(crate) fn dot<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq<const N: usize>(a: &[f64; N]) -> f64 {
    dot(a, a)
}

pub(crate) fn norm<const N: usize>(a: &[f64; N]) -> f64 {
    norm_sq(a).sqrt()
}
