//! The moving-plane sweep.
//!
//! For a direction `ν` the hyperplane `T_λ = {x·ν = λ}` moves from the
//! support value `a(ν)` into the domain. Two margins track the stopping
//! conditions:
//!
//! - `e₂(λ) = min ν(x)·ν` over the section `∂Ω ∩ T_λ`; the inward normals
//!   must stay transversal to the plane (`e₂ > 0`).
//! - `m(λ) = max φ(R_λ(x))` over the cap boundary `{x ∈ ∂Ω : x·ν < λ − band}`;
//!   the reflected cap must stay strictly inside (`m < 0`). Points inside the
//!   band around `T_λ` are excluded, so tangency on the plane itself is allowed.
//!
//! `λ₁(ν)` is the first `λ` at which either margin fails.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    extract_boundary, reflect_point, unit_inward, Boundary, BoundarySample, Direction,
    ImplicitDomain,
};
use crate::numeric::{bisect, bisect_predicate, golden_min};

/// Optional overrides; unset values scale with the domain's length scale.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    /// Boundary cell size (default `L/400`).
    pub resolution: Option<f64>,
    /// March increment in λ (default `L/200`).
    pub step: Option<f64>,
    /// Final bracket width (default `1e-8·L`).
    pub tol_lambda: Option<f64>,
    /// First march point offset from `a(ν)` (default `1e-6·L`).
    pub start_offset: Option<f64>,
    /// Margin threshold for a failing condition (default `1e-12·L`).
    pub tol_event: Option<f64>,
    /// Half-width of the excluded band around `T_λ` (default `2·resolution`).
    pub band: Option<f64>,
}

/// Resolved tolerances, echoed into every result.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub resolution: f64,
    pub step: f64,
    pub tol_lambda: f64,
    pub start_offset: f64,
    pub tol_event: f64,
    pub band: f64,
    pub tol_a: f64,
    pub tol_proj: f64,
}

impl SweepSettings {
    pub fn resolve(&self, domain: &ImplicitDomain) -> Result<Tolerances> {
        let l = domain.length_scale();
        let resolution = self.resolution.unwrap_or(domain.default_resolution());
        let tol = Tolerances {
            resolution,
            step: self.step.unwrap_or(l / 200.0),
            tol_lambda: self.tol_lambda.unwrap_or(1e-8 * l),
            start_offset: self.start_offset.unwrap_or(1e-6 * l),
            tol_event: self.tol_event.unwrap_or(1e-12 * l),
            band: self.band.unwrap_or(2.0 * resolution),
            tol_a: 1e-9 * l,
            tol_proj: domain.default_tol_proj(),
        };
        for (name, v) in [
            ("resolution", tol.resolution),
            ("step", tol.step),
            ("tol_lambda", tol.tol_lambda),
            ("start_offset", tol.start_offset),
            ("tol_event", tol.tol_event),
            ("band", tol.band),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(tol)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    /// A section point has its inward normal orthogonal to `ν`.
    NormalOrthogonal,
    /// The reflected cap touches `∂Ω` away from the hyperplane.
    InternalTangency,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::NormalOrthogonal => "NormalOrthogonal",
            EventKind::InternalTangency => "InternalTangency",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepEvent {
    pub kind: EventKind,
    pub lambda: f64,
    pub witness: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lambda1Result {
    pub nu: [f64; 2],
    pub a: f64,
    pub lambda1: f64,
    pub event: SweepEvent,
    pub bracket: [f64; 2],
    /// Both events fell within `tol_lambda` of each other.
    pub tie: bool,
    pub tolerances: Tolerances,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub holds: bool,
    pub e2: f64,
    pub m: f64,
}

/// Boundary samples split by a hyperplane position.
#[derive(Clone, Debug)]
pub struct CapSlice {
    pub nu: Direction<2>,
    pub lambda: f64,
    /// Samples with `x·ν < λ − band`.
    pub cap_boundary: Vec<BoundarySample>,
    /// Samples with `|x·ν − λ| ≤ band`.
    pub section: Vec<BoundarySample>,
}

#[derive(Clone, Copy, Debug)]
struct Margins {
    e2: f64,
    /// `None` when the cap boundary is empty.
    m: Option<(f64, [f64; 2])>,
}

/// A domain with its extracted boundary and resolved tolerances.
#[derive(Clone, Debug)]
pub struct PlaneSweep {
    domain: ImplicitDomain,
    boundary: Boundary,
    tol: Tolerances,
}

impl PlaneSweep {
    pub fn new(domain: &ImplicitDomain, settings: &SweepSettings) -> Result<Self> {
        let tol = settings.resolve(domain)?;
        let boundary = extract_boundary(domain, tol.resolution)?;
        Ok(Self {
            domain: domain.clone(),
            boundary,
            tol,
        })
    }

    pub fn domain(&self) -> &ImplicitDomain {
        &self.domain
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn support_min(&self, nu: &Direction<2>) -> Result<f64> {
        self.boundary.support_min(&self.domain, nu, self.tol.tol_a)
    }

    /// `(a(ν), −a(−ν))`: the range of λ where `T_λ` meets Ω.
    pub fn slab(&self, nu: &Direction<2>) -> Result<(f64, f64)> {
        Ok((self.support_min(nu)?, -self.support_min(&-*nu)?))
    }

    fn check_range(&self, nu: &Direction<2>, lambda: f64) -> Result<()> {
        let (lo, hi) = self.slab(nu)?;
        if !(lambda > lo && lambda < hi) {
            return Err(Error::LambdaOutOfRange { lambda, lo, hi });
        }
        Ok(())
    }

    /// Boundary point on the arc `p → q` where `x·ν = level`, given a sign change.
    fn level_crossing(
        &self,
        nu: &Direction<2>,
        p: &[f64; 2],
        q: &[f64; 2],
        level: f64,
    ) -> [f64; 2] {
        let g = |t: f64| nu.dot(&self.boundary.chord_point(&self.domain, p, q, t)) - level;
        let (lo, hi) = bisect(g, 0.0, 1.0, 1e-14);
        let (glo, ghi) = (g(lo).abs(), g(hi).abs());
        self.boundary
            .chord_point(&self.domain, p, q, if glo <= ghi { lo } else { hi })
    }

    /// Points of `∂Ω ∩ T_λ`, located by root finding along the ordered boundary.
    ///
    /// Besides sign changes between samples, arcs next to a local extremum of
    /// `x·ν − λ` are searched for a dip across the level within one edge
    /// (the plane near `a(ν)` or `−a(−ν)` cuts a chord shorter than the
    /// sample spacing).
    pub fn section_points(&self, nu: &Direction<2>, lambda: f64) -> Vec<[f64; 2]> {
        let mut out = Vec::new();
        let near = 2.0 * self.tol.resolution;
        for l in self.boundary.loops() {
            let n = l.len();
            let d: Vec<f64> = l.iter().map(|s| nu.dot(&s.point) - lambda).collect();
            for k in 0..n {
                let kn = (k + 1) % n;
                let (p, q) = (&l[k].point, &l[kn].point);
                let (da, db) = (d[k], d[kn]);
                if da == 0.0 {
                    out.push(*p);
                } else if da * db < 0.0 {
                    out.push(self.level_crossing(nu, p, q, lambda));
                } else if db != 0.0 && da.abs() < near && db.abs() < near {
                    // Same sign at both ends: look for an interior extremum
                    // of the opposite sign when a neighbouring sample pattern
                    // suggests a valley (or ridge) spanning this edge.
                    let sign = da.signum();
                    let prev = d[(k + n - 1) % n] * sign;
                    let next = d[(kn + 1) % n] * sign;
                    let valley = da * sign <= prev || db * sign <= next;
                    if !valley {
                        continue;
                    }
                    let f = |t: f64| {
                        sign * (nu.dot(&self.boundary.chord_point(&self.domain, p, q, t)) - lambda)
                    };
                    let (t_star, v) = golden_min(f, 0.0, 1.0, 1e-12);
                    if v < 0.0 {
                        let x_star = self.boundary.chord_point(&self.domain, p, q, t_star);
                        out.push(self.level_crossing(nu, p, &x_star, lambda));
                        out.push(self.level_crossing(nu, &x_star, q, lambda));
                    }
                }
            }
        }
        out
    }

    fn orthogonality(&self, nu: &Direction<2>, lambda: f64) -> Result<(f64, [f64; 2])> {
        let mut best: Option<(f64, [f64; 2])> = None;
        for x in self.section_points(nu, lambda) {
            let n = unit_inward(self.domain.level_set(), &x)?;
            let v = nu.dot(n.components());
            if best.is_none_or(|(b, _)| v < b) {
                best = Some((v, x));
            }
        }
        best.ok_or(Error::EmptySection { lambda })
    }

    fn reflected_phi(&self, nu: &Direction<2>, lambda: f64, x: &[f64; 2]) -> f64 {
        self.domain.phi(&reflect_point(x, nu, lambda))
    }

    /// `max φ(R_λ(x))` over the cap boundary; `refine` polishes the best
    /// sample along its adjacent arcs.
    fn tangency(&self, nu: &Direction<2>, lambda: f64, refine: bool) -> Option<(f64, [f64; 2])> {
        let edge_level = lambda - self.tol.band;
        let in_zone = |x: &[f64; 2]| nu.dot(x) < edge_level;
        let mut best: Option<(f64, [f64; 2])> = None;
        let mut best_at: Option<(usize, usize)> = None;
        let mut consider = |v: f64,
                            x: [f64; 2],
                            at: Option<(usize, usize)>,
                            best: &mut Option<(f64, [f64; 2])>| {
            if best.is_none_or(|(b, _)| v > b) {
                *best = Some((v, x));
                best_at = at;
            }
        };
        for (li, l) in self.boundary.loops().iter().enumerate() {
            let n = l.len();
            for k in 0..n {
                let p = &l[k].point;
                let q = &l[(k + 1) % n].point;
                let zp = in_zone(p);
                if zp {
                    consider(
                        self.reflected_phi(nu, lambda, p),
                        *p,
                        Some((li, k)),
                        &mut best,
                    );
                }
                if zp != in_zone(q) {
                    let x = self.level_crossing(nu, p, q, edge_level);
                    consider(self.reflected_phi(nu, lambda, &x), x, None, &mut best);
                }
            }
        }
        let (mut value, mut witness) = best?;
        // The sample maximum is within O(resolution²) of the true one;
        // polish only when it could matter.
        if refine && value > -0.1 * self.tol.resolution {
            if let Some((li, k)) = best_at {
                let l = &self.boundary.loops()[li];
                let n = l.len();
                let centre = l[k].point;
                for nb in [l[(k + n - 1) % n].point, l[(k + 1) % n].point] {
                    let t_max = if in_zone(&nb) {
                        1.0
                    } else {
                        let x = self.level_crossing(nu, &centre, &nb, edge_level);
                        let len = (nb[0] - centre[0]).hypot(nb[1] - centre[1]);
                        ((x[0] - centre[0]).hypot(x[1] - centre[1]) / len).min(1.0)
                    };
                    let f = |t: f64| {
                        -self.reflected_phi(
                            nu,
                            lambda,
                            &self.boundary.chord_point(&self.domain, &centre, &nb, t),
                        )
                    };
                    let (t, v) = golden_min(f, 0.0, t_max, 1e-9);
                    if -v > value {
                        value = -v;
                        witness = self.boundary.chord_point(&self.domain, &centre, &nb, t);
                    }
                }
            }
        }
        Some((value, witness))
    }

    fn margins(&self, nu: &Direction<2>, lambda: f64) -> Result<Margins> {
        let (e2, _) = self.orthogonality(nu, lambda)?;
        Ok(Margins {
            e2,
            m: self.tangency(nu, lambda, true),
        })
    }

    fn orth_fails(&self, e2: f64) -> bool {
        e2 <= self.tol.tol_event
    }

    fn tan_fails(&self, m: Option<(f64, [f64; 2])>) -> bool {
        m.is_some_and(|(v, _)| v >= -self.tol.tol_event)
    }

    /// `e₂(λ)`; condition (transversality) holds iff positive.
    pub fn orthogonality_margin(&self, nu: &Direction<2>, lambda: f64) -> Result<f64> {
        self.check_range(nu, lambda)?;
        Ok(self.orthogonality(nu, lambda)?.0)
    }

    /// `m(λ)`; the reflected cap is strictly inside iff negative.
    pub fn tangency_margin(&self, nu: &Direction<2>, lambda: f64) -> Result<f64> {
        self.check_range(nu, lambda)?;
        self.tangency(nu, lambda, true)
            .map(|(v, _)| v)
            .ok_or(Error::EmptyCap { lambda })
    }

    /// Both conditions at one λ; an empty cap counts as a strictly inside reflection.
    pub fn check_conditions(&self, nu: &Direction<2>, lambda: f64) -> Result<ConditionCheck> {
        self.check_range(nu, lambda)?;
        let mg = self.margins(nu, lambda)?;
        let m = mg.m.map_or(f64::NEG_INFINITY, |(v, _)| v);
        Ok(ConditionCheck {
            holds: !self.orth_fails(mg.e2) && !self.tan_fails(mg.m),
            e2: mg.e2,
            m,
        })
    }

    pub fn cap_slice(&self, nu: &Direction<2>, lambda: f64) -> CapSlice {
        let band = self.tol.band;
        let mut cap_boundary = Vec::new();
        let mut section = Vec::new();
        for s in self.boundary.samples() {
            let d = nu.dot(&s.point) - lambda;
            if d < -band {
                cap_boundary.push(*s);
            } else if d.abs() <= band {
                section.push(*s);
            }
        }
        CapSlice {
            nu: *nu,
            lambda,
            cap_boundary,
            section,
        }
    }

    /// `λ₁(ν)`: march from `a(ν)` in steps, then bisect the first failing step.
    pub fn compute_lambda1(&self, nu: &Direction<2>) -> Result<Lambda1Result> {
        let (a, b) = self.slab(nu)?;
        let tol = self.tol;
        let end = b - tol.start_offset;
        let mut lo = a;
        let mut lam = (a + tol.start_offset).min(0.5 * (a + b));
        loop {
            let mg = self.margins(nu, lam)?;
            let orth = self.orth_fails(mg.e2);
            let tan = self.tan_fails(mg.m);
            if orth || tan {
                return self.resolve_event(nu, a, lo, lam, orth, tan);
            }
            if lam >= end {
                return Err(Error::NoEventFound { lambda_end: end });
            }
            lo = lam;
            lam = (lam + tol.step).min(end);
        }
    }

    fn resolve_event(
        &self,
        nu: &Direction<2>,
        a: f64,
        lo: f64,
        hi: f64,
        orth: bool,
        tan: bool,
    ) -> Result<Lambda1Result> {
        let tol = self.tol;
        let orth_bracket = orth.then(|| {
            bisect_predicate(
                |l| {
                    self.orthogonality(nu, l)
                        .map_or(true, |(e2, _)| self.orth_fails(e2))
                },
                lo,
                hi,
                tol.tol_lambda,
            )
        });
        let tan_bracket = tan.then(|| {
            bisect_predicate(
                |l| self.tan_fails(self.tangency(nu, l, true)),
                lo,
                hi,
                tol.tol_lambda,
            )
        });
        let (kind, bracket, tie) = match (orth_bracket, tan_bracket) {
            (Some(o), Some(t)) => {
                if (o.1 - t.1).abs() <= tol.tol_lambda || o.1 <= t.1 {
                    (
                        EventKind::NormalOrthogonal,
                        o,
                        (o.1 - t.1).abs() <= tol.tol_lambda,
                    )
                } else {
                    (EventKind::InternalTangency, t, false)
                }
            }
            (Some(o), None) => (EventKind::NormalOrthogonal, o, false),
            (None, Some(t)) => (EventKind::InternalTangency, t, false),
            (None, None) => unreachable!("resolve_event called without a failing margin"),
        };
        let event_lambda = bracket.1;
        let witness = match kind {
            EventKind::NormalOrthogonal => self.orthogonality(nu, event_lambda)?.1,
            EventKind::InternalTangency => self
                .tangency(nu, event_lambda, true)
                .map(|(_, w)| w)
                .ok_or(Error::EmptyCap {
                    lambda: event_lambda,
                })?,
        };
        Ok(Lambda1Result {
            nu: *nu.components(),
            a,
            lambda1: 0.5 * (bracket.0 + bracket.1),
            event: SweepEvent {
                kind,
                lambda: event_lambda,
                witness,
            },
            bracket: [bracket.0, bracket.1],
            tie,
            tolerances: tol,
        })
    }
}

/// One-shot `λ₁(ν)` with explicit step and final bracket width.
pub fn compute_lambda1(
    domain: &ImplicitDomain,
    nu: &Direction<2>,
    step: f64,
    tol_lambda: f64,
) -> Result<Lambda1Result> {
    let settings = SweepSettings {
        step: Some(step),
        tol_lambda: Some(tol_lambda),
        ..Default::default()
    };
    PlaneSweep::new(domain, &settings)?.compute_lambda1(nu)
}
