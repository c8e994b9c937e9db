//! Independent reference for the stopping parameter on analytic shapes.
//!
//! The boundary is an explicit parametrization `t ↦ x(t)` with a closed-form
//! inward normal; section and band-edge points are found by bisection in `t`.
//! The first failing `λ` is located by a hierarchical scan: a uniform pass at
//! spacing `L/400`, then the failing interval is rescanned 20 times finer
//! until the spacing is at most `tol_lambda/2`.

#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

pub const SAMPLES: usize = 4000;

#[derive(Clone, Copy, Debug)]
pub enum Analytic {
    Disk { r: f64 },
    Ellipse { a: f64, b: f64 },
    Stadium { l: f64, r: f64 },
}

impl Analytic {
    /// Boundary point and unit inward normal at `t ∈ [0, 1)`, counter-clockwise.
    pub fn point(&self, t: f64) -> ([f64; 2], [f64; 2]) {
        let s = TAU * t.rem_euclid(1.0);
        match *self {
            Analytic::Disk { r } => ([r * s.cos(), r * s.sin()], [-s.cos(), -s.sin()]),
            Analytic::Ellipse { a, b } => {
                let (c, sn) = (s.cos(), s.sin());
                let n = [-b * c, -a * sn];
                let k = n[0].hypot(n[1]);
                ([a * c, b * sn], [n[0] / k, n[1] / k])
            }
            Analytic::Stadium { l, r } => {
                // Arc-length parametrization: right arc, top flat, left arc, bottom flat.
                let total = 2.0 * l + TAU * r;
                let mut u = t.rem_euclid(1.0) * total;
                let h = 0.5 * l;
                if u < PI * r {
                    let ang = -0.5 * PI + u / r;
                    return ([h + r * ang.cos(), r * ang.sin()], [-ang.cos(), -ang.sin()]);
                }
                u -= PI * r;
                if u < l {
                    return ([h - u, r], [0.0, -1.0]);
                }
                u -= l;
                if u < PI * r {
                    let ang = 0.5 * PI + u / r;
                    return (
                        [-h + r * ang.cos(), r * ang.sin()],
                        [-ang.cos(), -ang.sin()],
                    );
                }
                u -= PI * r;
                ([-h + u, -r], [0.0, 1.0])
            }
        }
    }

    /// Negative inside, zero on the boundary.
    pub fn phi(&self, x: &[f64; 2]) -> f64 {
        match *self {
            Analytic::Disk { r } => (x[0] * x[0] + x[1] * x[1]).sqrt() - r,
            Analytic::Ellipse { a, b } => (x[0] / a).powi(2) + (x[1] / b).powi(2) - 1.0,
            Analytic::Stadium { l, r } => {
                let h = 0.5 * l;
                if x[0].abs() <= h {
                    x[1].abs() - r
                } else {
                    ((x[0].abs() - h).powi(2) + x[1] * x[1]).sqrt() - r
                }
            }
        }
    }

    pub fn length_scale(&self) -> f64 {
        match *self {
            Analytic::Disk { r } => 2.0 * r,
            Analytic::Ellipse { a, b } => 2.0 * a.max(b),
            Analytic::Stadium { l, r } => l + 2.0 * r,
        }
    }

    /// Exact `min x·ν` over the boundary.
    pub fn support(&self, nu: [f64; 2]) -> f64 {
        match *self {
            Analytic::Disk { r } => -r,
            Analytic::Ellipse { a, b } => -((a * nu[0]).powi(2) + (b * nu[1]).powi(2)).sqrt(),
            Analytic::Stadium { l, r } => -0.5 * l * nu[0].abs() - r,
        }
    }
}

fn dot(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn reflect(x: &[f64; 2], nu: [f64; 2], lambda: f64) -> [f64; 2] {
    let d = 2.0 * (lambda - dot(x, &nu));
    [x[0] + d * nu[0], x[1] + d * nu[1]]
}

/// Parameters `t` where `x(t)·ν = level`.
fn level_roots(shape: &Analytic, nu: [f64; 2], level: f64) -> Vec<f64> {
    let f = |t: f64| dot(&shape.point(t).0, &nu) - level;
    let mut roots = Vec::new();
    for k in 0..SAMPLES {
        let (mut lo, mut hi) = (k as f64 / SAMPLES as f64, (k + 1) as f64 / SAMPLES as f64);
        let (flo, fhi) = (f(lo), f(hi));
        if flo == 0.0 {
            roots.push(lo);
            continue;
        }
        if flo * fhi >= 0.0 {
            continue;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if f(mid) * flo > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    roots
}

/// `(e₂, m)`; `m` is `None` when the cap is empty.
pub fn margins(shape: &Analytic, nu: [f64; 2], lambda: f64, band: f64) -> (f64, Option<f64>) {
    let e2 = level_roots(shape, nu, lambda)
        .into_iter()
        .map(|t| dot(&shape.point(t).1, &nu))
        .fold(f64::INFINITY, f64::min);
    let edge = lambda - band;
    let value = |t: f64| shape.phi(&reflect(&shape.point(t).0, nu, lambda));
    let in_cap = |t: f64| dot(&shape.point(t).0, &nu) < edge;
    let mut best: Option<(f64, f64)> = None;
    for k in 0..SAMPLES {
        let t = k as f64 / SAMPLES as f64;
        if in_cap(t) {
            let v = value(t);
            if best.is_none_or(|(b, _)| v > b) {
                best = Some((v, t));
            }
        }
    }
    let mut m = best.map(|b| b.0);
    for t in level_roots(shape, nu, edge) {
        let v = value(t);
        m = Some(m.map_or(v, |b: f64| b.max(v)));
    }
    // Golden-section polish around the best interior sample.
    if let Some((_, t0)) = best {
        let h = 1.0 / SAMPLES as f64;
        let (mut a, mut b) = (t0 - h, t0 + h);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let score = |t: f64| {
            if in_cap(t) {
                value(t)
            } else {
                f64::NEG_INFINITY
            }
        };
        for _ in 0..60 {
            let (c, d) = (b - g * (b - a), a + g * (b - a));
            if score(c) > score(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let v = score(0.5 * (a + b));
        if v.is_finite() {
            m = Some(m.map_or(v, |x: f64| x.max(v)));
        }
    }
    (e2, m)
}

pub fn fails(shape: &Analytic, nu: [f64; 2], lambda: f64, band: f64, tol_event: f64) -> bool {
    let (e2, m) = margins(shape, nu, lambda, band);
    e2.is_nan() || e2 <= tol_event || m.is_some_and(|m| m.is_nan() || m >= -tol_event)
}

/// First failing `λ` on a grid of spacing at most `tol_lambda / 2`.
pub fn reference_lambda1(
    shape: &Analytic,
    nu: [f64; 2],
    band: f64,
    tol_event: f64,
    start_offset: f64,
    tol_lambda: f64,
) -> f64 {
    let a = shape.support(nu);
    let b = -shape.support([-nu[0], -nu[1]]);
    let mut lo = a + start_offset;
    let mut spacing = shape.length_scale() / 400.0;
    let mut hi = b;
    loop {
        let mut prev = lo;
        let mut found = None;
        let mut k = 0usize;
        loop {
            let lam = (lo + k as f64 * spacing).min(hi);
            if fails(shape, nu, lam, band, tol_event) {
                found = Some((prev, lam));
                break;
            }
            if lam >= hi {
                break;
            }
            prev = lam;
            k += 1;
        }
        let (p, f) = found.expect("reference scan found no failing lambda");
        if spacing <= 0.5 * tol_lambda || f == lo {
            return f;
        }
        lo = p;
        hi = f;
        spacing /= 20.0;
    }
}
