//! Direction scans of `a(ν)` and `λ₁(ν)`, jump classification, and the
//! flat-side jump report.
//!
//! Directions are `ν(θ) = (cos θ, sin θ)`. A level with `M` directions uses the
//! uniform grid `2πi/M` together with the four axis angles, so refining
//! `M → 2M` keeps every earlier angle and the axes are always sampled.
//!
//! Jumps are judged by following each coarse angle through the refinement
//! levels and watching the gap to its two grid neighbours. A gap whose
//! extrapolated limit stays away from zero is persistent. A persistent gap
//! where the centre value sits below its neighbour is compatible with lower
//! semicontinuity; a persistent gap with the centre value above is a violation.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Direction, ImplicitDomain, ShapeSpec};
use crate::moving_plane::{EventKind, PlaneSweep, SweepSettings, Tolerances};

/// Two angles closer than this are treated as the same grid point.
const ANGLE_EPS: f64 = 1e-12;

/// A gap shrinking at least this much per level counts as vanishing.
pub const SHRINK: f64 = 0.75;

/// Sampled `(θ, a, λ₁, event)` values over one direction grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DirectionProfile {
    /// Uniform direction count before the axis angles are merged in.
    pub m: usize,
    pub thetas: Vec<f64>,
    pub a_values: Vec<f64>,
    pub lambda1_values: Vec<f64>,
    pub event_kinds: Vec<EventKind>,
    pub tolerances: Tolerances,
}

impl DirectionProfile {
    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    /// Largest `|λ₁(θᵢ₊₁) − λ₁(θᵢ)|`, including the wraparound pair.
    pub fn max_adjacent_gap(&self) -> f64 {
        let v = &self.lambda1_values;
        (0..v.len())
            .map(|i| (v[(i + 1) % v.len()] - v[i]).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with columns `theta,a,lambda1,event_kind`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["theta", "a", "lambda1", "event_kind"])
            .map_err(csv_err)?;
        for i in 0..self.len() {
            w.write_record([
                self.thetas[i].to_string(),
                self.a_values[i].to_string(),
                self.lambda1_values[i].to_string(),
                self.event_kinds[i].as_str().to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Polar plot of `λ₁(θ)`, shifted so the smallest value sits on an inner circle.
    pub fn to_svg(&self) -> String {
        let size = 480.0;
        let c = size / 2.0;
        let lo = self
            .lambda1_values
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .lambda1_values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let span = (hi - lo).max(1e-9);
        let inner = 0.25 * c;
        let scale = 0.65 * c / span;
        let radius = |v: f64| inner + (v - lo) * scale;
        let mut pts = String::new();
        for (t, v) in self.thetas.iter().zip(&self.lambda1_values) {
            let r = radius(*v);
            let _ = write!(pts, "{:.3},{:.3} ", c + r * t.cos(), c - r * t.sin());
        }
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        for (v, label) in [(lo, "min"), (hi, "max")] {
            let _ = writeln!(
                s,
                r##"<circle cx="{c}" cy="{c}" r="{:.3}" fill="none" stroke="#bbb" stroke-dasharray="4 3"/>"##,
                radius(v)
            );
            let _ = writeln!(
                s,
                r##"<text x="{:.3}" y="{:.3}" font-size="11" fill="#666">{label} {v:.6}</text>"##,
                c + radius(v) + 3.0,
                c - 3.0
            );
        }
        let _ = writeln!(
            s,
            r##"<polygon points="{}" fill="none" stroke="#1f4e9c" stroke-width="1.2"/>"##,
            pts.trim_end()
        );
        let _ = writeln!(s, "</svg>");
        s
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Sorted angles of level `m`: the uniform grid merged with the axis angles.
pub fn direction_grid(m: usize) -> Vec<f64> {
    let mut t: Vec<f64> = (0..m).map(|i| TAU * i as f64 / m as f64).collect();
    t.extend([0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2]);
    t.sort_by(f64::total_cmp);
    t.dedup_by(|b, a| (*b - *a).abs() < ANGLE_EPS);
    t
}

/// Scans `a(ν)` and `λ₁(ν)` on [`direction_grid`]`(m)` with default settings.
pub fn scan_directions(domain: &ImplicitDomain, m: usize) -> Result<DirectionProfile> {
    scan_with(&PlaneSweep::new(domain, &SweepSettings::default())?, m)
}

/// Scans with a prepared sweep. Directions are evaluated in parallel and
/// collected in angle order; the first failing direction is reported.
pub fn scan_with(sweep: &PlaneSweep, m: usize) -> Result<DirectionProfile> {
    if m < 8 {
        return Err(Error::InvalidParameter(format!(
            "M must be at least 8, got {m}"
        )));
    }
    let thetas = direction_grid(m);
    let rows: Vec<Result<(f64, f64, EventKind)>> = thetas
        .par_iter()
        .enumerate()
        .map(|(index, &theta)| {
            let nu = Direction::from_angle(theta);
            sweep
                .compute_lambda1(&nu)
                .map(|r| (r.a, r.lambda1, r.event.kind))
                .map_err(|e| Error::AtDirection {
                    index,
                    theta,
                    source: Box::new(e),
                })
        })
        .collect();
    let mut profile = DirectionProfile {
        m,
        thetas: Vec::with_capacity(rows.len()),
        a_values: Vec::with_capacity(rows.len()),
        lambda1_values: Vec::with_capacity(rows.len()),
        event_kinds: Vec::with_capacity(rows.len()),
        tolerances: *sweep.tolerances(),
    };
    for (theta, row) in thetas.into_iter().zip(rows) {
        let (a, l, k) = row?;
        profile.thetas.push(theta);
        profile.a_values.push(a);
        profile.lambda1_values.push(l);
        profile.event_kinds.push(k);
    }
    Ok(profile)
}

/// Outcome of [`lipschitz_check_a`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LipschitzCheck {
    pub max_ratio: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Largest `|aᵢ − aᵢ₊₁| / |νᵢ − νᵢ₊₁|` over adjacent directions (wraparound
/// included). Passes when it stays below `r_max·(1 + 1e-3)` plus the slack
/// `2·tol_a / min|Δν|` allowed by the support tolerance.
pub fn lipschitz_check_a(profile: &DirectionProfile, r_max: f64) -> LipschitzCheck {
    let n = profile.len();
    let mut max_ratio: f64 = 0.0;
    let mut min_dnu = f64::INFINITY;
    for i in 0..n {
        let j = (i + 1) % n;
        let (ti, tj) = (profile.thetas[i], profile.thetas[j]);
        let dnu = ((ti.cos() - tj.cos()).powi(2) + (ti.sin() - tj.sin()).powi(2)).sqrt();
        if dnu == 0.0 {
            continue;
        }
        min_dnu = min_dnu.min(dnu);
        max_ratio = max_ratio.max((profile.a_values[i] - profile.a_values[j]).abs() / dnu);
    }
    let bound = r_max * (1.0 + 1e-3) + 2.0 * profile.tolerances.tol_a / min_dnu;
    LipschitzCheck {
        max_ratio,
        bound,
        pass: max_ratio <= bound,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpDirection {
    ValueBelowNeighbors,
    ValueAboveNeighbors,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Continuous,
    LscCompatibleJump,
    LscViolation,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Continuous => "continuous",
            Classification::LscCompatibleJump => "lsc_compatible_jump",
            Classification::LscViolation => "lsc_violation",
        }
    }
}

/// A persistent gap at one sampled direction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Jump {
    /// Index into the finest level's angles.
    pub theta_index: usize,
    pub theta: f64,
    /// `|λ₁(neighbour) − λ₁(θ)|` at the closest sampled neighbour on the
    /// persistent side.
    pub gap: f64,
    /// Extrapolated limit of that gap under refinement.
    pub limit_estimate: f64,
    pub direction_of_jump: JumpDirection,
    /// Only one neighbour shows the gap.
    pub one_sided: bool,
    /// False when the gap straddles two grid points and was not tracked to a
    /// single angle; the lower of the two is reported.
    pub localized: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscontinuityReport {
    pub shape: String,
    pub jumps: Vec<Jump>,
    /// `(M, max adjacent gap)` per level.
    pub refinement_trace: Vec<(usize, f64)>,
    pub classification: Classification,
    pub gap_floor: f64,
}

/// Extrapolated limit of a gap sequence, or `None` if it vanishes.
///
/// The last three gaps must all exceed `floor` with one sign and must not
/// shrink by 25% at both steps. Two limit estimates must then each carry at
/// least half the finest gap: quadratic Richardson extrapolation in the grid
/// spacing (exact for smooth profiles) and, when the gaps decrease
/// geometrically, Aitken's Δ² (exact for power-law cusps).
fn persistent_limit(g: &[f64], floor: f64) -> Option<f64> {
    let n = g.len();
    if n < 3 {
        return None;
    }
    let (g0, g1, g2) = (g[n - 3], g[n - 2], g[n - 1]);
    let sign = g2.signum();
    if [g0, g1, g2]
        .iter()
        .any(|x| x.abs() <= floor || x.signum() != sign)
    {
        return None;
    }
    let (a0, a1, a2) = (g0.abs(), g1.abs(), g2.abs());
    if a1 <= SHRINK * a0 && a2 <= SHRINK * a1 {
        return None;
    }
    let mut limit = sign * (8.0 * g2 - 6.0 * g1 + g0) / 3.0;
    let (d1, d2) = (a0 - a1, a1 - a2);
    if d1 > 0.0 && d2 > 0.0 && d2 < d1 {
        limit = limit.min(a2 - d2 * d2 / (d1 - d2));
    }
    (limit > floor && limit >= 0.5 * a2).then_some(limit)
}

fn index_of(thetas: &[f64], theta: f64) -> usize {
    let i = thetas.partition_point(|t| *t < theta - ANGLE_EPS);
    debug_assert!((thetas[i] - theta).abs() < ANGLE_EPS);
    i
}

/// Classifies jumps from profiles at `M, 2M, 4M, …` (coarsest first).
pub fn classify_profiles(
    shape: &str,
    profiles: &[DirectionProfile],
    gap_floor: f64,
) -> Result<DiscontinuityReport> {
    classify_refined(shape, profiles, gap_floor, None)
}

/// Like [`classify_profiles`], but every candidate gap is followed further
/// with `sweep`: the neighbour on that side is moved to `h/2, h/4, …`
/// ([`ZOOM_LEVELS`] halvings of the finest spacing `h`) and the extended gap
/// sequence must still persist. These are the angles the next global levels
/// would sample next to `θ`, evaluated locally.
pub fn classify_refined(
    shape: &str,
    profiles: &[DirectionProfile],
    gap_floor: f64,
    sweep: Option<&PlaneSweep>,
) -> Result<DiscontinuityReport> {
    if profiles.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 refinement levels, got {}",
            profiles.len()
        )));
    }
    for w in profiles.windows(2) {
        if w[1].m != 2 * w[0].m {
            return Err(Error::InvalidParameter(format!(
                "levels must double M, got {} then {}",
                w[0].m, w[1].m
            )));
        }
    }
    let coarse = &profiles[0].thetas;
    let finest = profiles.last().unwrap();
    let mut jumps = Vec::new();
    for &theta in coarse {
        let mut left = Vec::with_capacity(profiles.len());
        let mut right = Vec::with_capacity(profiles.len());
        for p in profiles {
            let n = p.len();
            let i = index_of(&p.thetas, theta);
            let v = &p.lambda1_values;
            left.push(v[(i + n - 1) % n] - v[i]);
            right.push(v[(i + 1) % n] - v[i]);
        }
        let i = index_of(&finest.thetas, theta);
        let n = finest.len();
        let spacing = |j: usize| {
            let d = (finest.thetas[j] - theta).abs();
            d.min(TAU - d)
        };
        let mut sides: Vec<(f64, f64)> = Vec::new();
        for (g, step) in [
            (left, -spacing((i + n - 1) % n)),
            (right, spacing((i + 1) % n)),
        ] {
            if persistent_limit(&g, gap_floor).is_none() {
                continue;
            }
            let g = match sweep {
                Some(sw) => zoom_gaps(sw, theta, finest.lambda1_values[i], step, g)?,
                None => g,
            };
            if let Some(l) = persistent_limit(&g, gap_floor) {
                sides.push((*g.last().unwrap(), l));
            }
        }
        if sides.is_empty() {
            continue;
        }
        let above = sides.iter().any(|(g, _)| *g < 0.0);
        let (gap, limit_estimate) = sides
            .iter()
            .map(|(g, l)| (g.abs(), *l))
            .fold((0.0, 0.0), |acc, s| if s.0 > acc.0 { s } else { acc });
        jumps.push(Jump {
            theta_index: index_of(&finest.thetas, theta),
            theta,
            gap,
            limit_estimate,
            direction_of_jump: if above {
                JumpDirection::ValueAboveNeighbors
            } else {
                JumpDirection::ValueBelowNeighbors
            },
            one_sided: sides.len() == 1,
            localized: true,
        });
    }

    let refinement_trace: Vec<(usize, f64)> = profiles
        .iter()
        .map(|p| (p.m, p.max_adjacent_gap()))
        .collect();
    let max_gaps: Vec<f64> = refinement_trace.iter().map(|t| t.1).collect();
    let max_persists = persistent_limit(&max_gaps, gap_floor);
    if jumps.is_empty() {
        if let Some(limit) = max_persists {
            let v = &finest.lambda1_values;
            let n = v.len();
            let i = (0..n)
                .max_by(|&i, &j| {
                    let gi = (v[(i + 1) % n] - v[i]).abs();
                    let gj = (v[(j + 1) % n] - v[j]).abs();
                    gi.total_cmp(&gj)
                })
                .unwrap();
            let lower = if v[i] <= v[(i + 1) % n] {
                i
            } else {
                (i + 1) % n
            };
            jumps.push(Jump {
                theta_index: lower,
                theta: finest.thetas[lower],
                gap: *max_gaps.last().unwrap(),
                limit_estimate: limit,
                direction_of_jump: JumpDirection::ValueBelowNeighbors,
                one_sided: true,
                localized: false,
            });
        }
    }

    let classification = if jumps
        .iter()
        .any(|j| j.direction_of_jump == JumpDirection::ValueAboveNeighbors)
    {
        Classification::LscViolation
    } else if jumps.is_empty() {
        Classification::Continuous
    } else {
        Classification::LscCompatibleJump
    };
    Ok(DiscontinuityReport {
        shape: shape.to_string(),
        jumps,
        refinement_trace,
        classification,
        gap_floor,
    })
}

/// Halvings of the finest spacing used to confirm a candidate gap.
pub const ZOOM_LEVELS: usize = 16;

fn zoom_gaps(
    sweep: &PlaneSweep,
    theta: f64,
    centre: f64,
    step: f64,
    mut g: Vec<f64>,
) -> Result<Vec<f64>> {
    let angles: Vec<f64> = (1..=ZOOM_LEVELS)
        .map(|k| theta + step / (1u64 << k) as f64)
        .collect();
    let values = angles
        .par_iter()
        .map(|&t| {
            sweep
                .compute_lambda1(&Direction::from_angle(t))
                .map(|r| r.lambda1)
        })
        .collect::<Result<Vec<_>>>()?;
    g.extend(values.iter().map(|v| v - centre));
    Ok(g)
}

/// Scans at `M0, 2M0, …` (`levels` scans) and classifies the result with
/// `gap_floor = 10·tol_lambda`, confirming candidate gaps by local zoom.
pub fn classify_discontinuities(
    sweep: &PlaneSweep,
    m0: usize,
    levels: usize,
) -> Result<(DiscontinuityReport, Vec<DirectionProfile>)> {
    if levels < 3 {
        return Err(Error::InvalidParameter(format!(
            "levels must be at least 3, got {levels}"
        )));
    }
    let profiles = (0..levels)
        .map(|k| scan_with(sweep, m0 << k))
        .collect::<Result<Vec<_>>>()?;
    let floor = 10.0 * sweep.tolerances().tol_lambda;
    let report = classify_refined(sweep.domain().name(), &profiles, floor, Some(sweep))?;
    Ok((report, profiles))
}

/// One sampled tilt in a jump report.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SideSample {
    pub theta: f64,
    pub lambda1: f64,
}

/// Jump of `λ₁` at `ν = (1, 0)` for a shape with a flat side facing `−ν`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub shape: ShapeSpec,
    pub flat_length: f64,
    pub lambda1_at_axis: f64,
    /// `λ₁` at the smallest tilt on the side realizing the jump.
    pub limit_from_side: f64,
    /// `max` over sides of `min` over that side's tilts of `λ₁(ν_θ) − λ₁(ν)`.
    pub jump: f64,
    pub jump_side: String,
    pub samples: Vec<SideSample>,
    pub required_jump: f64,
    pub eps_jump: f64,
    pub pass: bool,
}

/// Tilts used by the jump report: `±window·{1, 0.1, 0.01}`.
pub fn side_thetas(theta_window: f64) -> [f64; 6] {
    let w = theta_window;
    [w, 0.1 * w, 0.01 * w, -w, -0.1 * w, -0.01 * w]
}

/// Stadium jump report.
pub fn counterexample_report(l: f64, r: f64, theta_window: f64) -> Result<CounterexampleReport> {
    flat_side_report(
        &ShapeSpec::Stadium { length: l, r },
        theta_window,
        &SweepSettings::default(),
    )
}

/// Jump report for a stadium or rounded half-disk. Both have a flat of length
/// `L`; the required jump is `L/2 − ε_jump` with `ε_jump = 0.02·L`.
pub fn flat_side_report(
    spec: &ShapeSpec,
    theta_window: f64,
    settings: &SweepSettings,
) -> Result<CounterexampleReport> {
    let flat_length = match spec {
        ShapeSpec::Stadium { length, .. } | ShapeSpec::RoundedHalfDisk { length, .. } => *length,
        other => {
            return Err(Error::InvalidShape(format!(
                "jump report needs a stadium or rounded_half_disk, got {}",
                other.name()
            )))
        }
    };
    if !(theta_window > 0.0 && theta_window < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "theta_window must lie in (0, 1), got {theta_window}"
        )));
    }
    let domain = spec.build()?;
    let sweep = PlaneSweep::new(&domain, settings)?;
    let axis = sweep.compute_lambda1(&Direction::from_angle(0.0))?.lambda1;
    let thetas = side_thetas(theta_window);
    let values = thetas
        .par_iter()
        .map(|&t| {
            sweep
                .compute_lambda1(&Direction::from_angle(t))
                .map(|r| r.lambda1)
        })
        .collect::<Result<Vec<_>>>()?;
    let samples: Vec<SideSample> = thetas
        .iter()
        .zip(&values)
        .map(|(&theta, &lambda1)| SideSample { theta, lambda1 })
        .collect();
    let side_min = |s: &[SideSample]| {
        s.iter()
            .map(|x| x.lambda1 - axis)
            .fold(f64::INFINITY, f64::min)
    };
    let (pos, neg) = (side_min(&samples[..3]), side_min(&samples[3..]));
    let (jump, jump_side, limit_from_side) = if pos >= neg {
        (pos, "positive", samples[2].lambda1)
    } else {
        (neg, "negative", samples[5].lambda1)
    };
    let eps_jump = 0.02 * flat_length;
    let required_jump = 0.5 * flat_length - eps_jump;
    Ok(CounterexampleReport {
        shape: spec.clone(),
        flat_length,
        lambda1_at_axis: axis,
        limit_from_side,
        jump,
        jump_side: jump_side.to_string(),
        samples,
        required_jump,
        eps_jump,
        pass: jump >= required_jump,
    })
}
