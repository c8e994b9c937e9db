//! Marching-squares extraction of `∂Ω` as ordered, projected sample loops.

use serde::Serialize;

use super::{dot, project_to_zero, unit_inward, Direction, ImplicitDomain};
use crate::error::{Error, Result};
use crate::numeric::golden_min;

const NONE: u32 = u32::MAX;

/// A point of `∂Ω` with its inward unit normal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundarySample {
    pub point: [f64; 2],
    pub inward_normal: [f64; 2],
    /// Cumulative polygonal length along the boundary.
    pub arc_parameter: f64,
}

/// Closed loops of boundary samples, each oriented with the domain on the left.
#[derive(Clone, Debug)]
pub struct Boundary {
    loops: Vec<Vec<BoundarySample>>,
    resolution: f64,
    tol_proj: f64,
}

/// Extracts `∂Ω` at cell size `resolution`.
pub fn extract_boundary(domain: &ImplicitDomain, resolution: f64) -> Result<Boundary> {
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "resolution must be positive, got {resolution}"
        )));
    }
    let tol_proj = domain.default_tol_proj();
    let bb = domain.bounding_box();
    let nx = (bb.width() / resolution).ceil() as usize;
    let ny = (bb.height() / resolution).ceil() as usize;
    // Center the node lattice on the box so symmetric shapes give symmetric samples.
    let x0 = bb.center()[0] - 0.5 * nx as f64 * resolution;
    let y0 = bb.center()[1] - 0.5 * ny as f64 * resolution;
    let node = |i: usize, j: usize| [x0 + i as f64 * resolution, y0 + j as f64 * resolution];

    let stride = nx + 1;
    let values: Vec<f64> = (0..=ny)
        .flat_map(|j| (0..=nx).map(move |i| (i, j)))
        .map(|(i, j)| domain.phi(&node(i, j)))
        .collect();
    let val = |i: usize, j: usize| values[j * stride + i];
    let inside = |i: usize, j: usize| val(i, j) < 0.0;

    let mut points: Vec<[f64; 2]> = Vec::new();
    let mut h_edge = vec![NONE; nx * (ny + 1)];
    let mut v_edge = vec![NONE; (nx + 1) * ny];

    let crossing = |a: (usize, usize), b: (usize, usize)| -> [f64; 2] {
        let (va, vb) = (val(a.0, a.1), val(b.0, b.1));
        let t = va / (va - vb);
        let pa = node(a.0, a.1);
        let pb = node(b.0, b.1);
        [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
    };

    // Edge ids: horizontal edge (i, j) joins nodes (i, j)-(i+1, j);
    // vertical edge (i, j) joins (i, j)-(i, j+1).
    let mut h_id = |i: usize, j: usize, points: &mut Vec<[f64; 2]>| -> u32 {
        let slot = &mut h_edge[j * nx + i];
        if *slot == NONE {
            *slot = points.len() as u32;
            points.push(crossing((i, j), (i + 1, j)));
        }
        *slot
    };
    let mut segments: Vec<(u32, u32)> = Vec::new();
    let mut v_ids: Vec<(usize, usize)> = Vec::new();
    // First pass collects horizontal crossings and records which vertical
    // edges are needed; vertical crossings are created in a second pass so
    // the two closures do not borrow `points` at once.
    let mut cells: Vec<(usize, usize, [bool; 4])> = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let c = [
                inside(i, j),
                inside(i + 1, j),
                inside(i + 1, j + 1),
                inside(i, j + 1),
            ];
            if c.iter().all(|&s| s == c[0]) {
                continue;
            }
            cells.push((i, j, c));
        }
    }
    for &(i, j, c) in &cells {
        if c[0] != c[1] {
            h_id(i, j, &mut points);
        }
        if c[3] != c[2] {
            h_id(i, j + 1, &mut points);
        }
        if c[1] != c[2] {
            v_ids.push((i + 1, j));
        }
        if c[0] != c[3] {
            v_ids.push((i, j));
        }
    }
    for (i, j) in v_ids {
        let slot = v_edge[j * (nx + 1) + i];
        if slot == NONE {
            let p = crossing((i, j), (i, j + 1));
            v_edge[j * (nx + 1) + i] = points.len() as u32;
            points.push(p);
        }
    }
    for &(i, j, c) in &cells {
        let bottom = h_edge[j * nx + i];
        let top = h_edge[(j + 1) * nx + i];
        let left = v_edge[j * (nx + 1) + i];
        let right = v_edge[j * (nx + 1) + i + 1];
        let mut crossed = Vec::with_capacity(4);
        for (flag, id) in [
            (c[0] != c[1], bottom),
            (c[1] != c[2], right),
            (c[3] != c[2], top),
            (c[0] != c[3], left),
        ] {
            if flag {
                crossed.push(id);
            }
        }
        match crossed.len() {
            2 => segments.push((crossed[0], crossed[1])),
            4 => {
                let center = 0.25 * (val(i, j) + val(i + 1, j) + val(i + 1, j + 1) + val(i, j + 1));
                if (center < 0.0) == c[0] {
                    // Corners 1 and 3 are cut off.
                    segments.push((bottom, right));
                    segments.push((top, left));
                } else {
                    segments.push((bottom, left));
                    segments.push((right, top));
                }
            }
            _ => unreachable!("marching squares cell with odd crossing count"),
        }
    }
    if points.is_empty() {
        return Err(Error::DomainEmpty);
    }

    let mut adjacency = vec![[NONE; 2]; points.len()];
    for &(a, b) in &segments {
        for (from, to) in [(a, b), (b, a)] {
            let slot = &mut adjacency[from as usize];
            if slot[0] == NONE {
                slot[0] = to;
            } else {
                slot[1] = to;
            }
        }
    }

    let mut visited = vec![false; points.len()];
    let mut loops = Vec::new();
    let mut arc_offset = 0.0;
    for start in 0..points.len() {
        if visited[start] {
            continue;
        }
        let mut order = vec![start];
        visited[start] = true;
        let mut prev = NONE;
        let mut cur = start as u32;
        loop {
            let [n0, n1] = adjacency[cur as usize];
            let next = if n0 != prev { n0 } else { n1 };
            if next == NONE || next as usize == start {
                break;
            }
            if visited[next as usize] {
                break;
            }
            visited[next as usize] = true;
            order.push(next as usize);
            prev = cur;
            cur = next;
        }
        let mut pts: Vec<[f64; 2]> = Vec::with_capacity(order.len());
        for idx in order {
            let p = project_to_zero(domain.level_set(), &points[idx], tol_proj)?;
            if let Some(last) = pts.last() {
                if (p[0] - last[0]).hypot(p[1] - last[1]) <= 1e-9 * resolution {
                    continue;
                }
            }
            pts.push(p);
        }
        while pts.len() > 1 {
            let (f, l) = (pts[0], pts[pts.len() - 1]);
            if (f[0] - l[0]).hypot(f[1] - l[1]) <= 1e-9 * resolution {
                pts.pop();
            } else {
                break;
            }
        }
        if pts.len() < 3 {
            continue;
        }
        let mut samples = pts
            .iter()
            .map(|p| {
                let n = unit_inward(domain.level_set(), p)?;
                Ok(BoundarySample {
                    point: *p,
                    inward_normal: *n.components(),
                    arc_parameter: 0.0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        // Orient with the interior on the left of the direction of travel.
        let k = samples.len() / 2;
        let t = [
            samples[k + 1].point[0] - samples[k - 1].point[0],
            samples[k + 1].point[1] - samples[k - 1].point[1],
        ];
        let left = [-t[1], t[0]];
        if dot(&left, &samples[k].inward_normal) < 0.0 {
            samples.reverse();
        }
        let mut s = arc_offset;
        for idx in 0..samples.len() {
            if idx > 0 {
                let (p, q) = (samples[idx - 1].point, samples[idx].point);
                s += (q[0] - p[0]).hypot(q[1] - p[1]);
            }
            samples[idx].arc_parameter = s;
        }
        let (p, q) = (samples[samples.len() - 1].point, samples[0].point);
        arc_offset = s + (q[0] - p[0]).hypot(q[1] - p[1]);
        loops.push(samples);
    }
    if loops.is_empty() {
        return Err(Error::DomainEmpty);
    }
    Ok(Boundary {
        loops,
        resolution,
        tol_proj,
    })
}

impl Boundary {
    pub fn loops(&self) -> &[Vec<BoundarySample>] {
        &self.loops
    }

    pub fn samples(&self) -> impl Iterator<Item = &BoundarySample> {
        self.loops.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.loops.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn tol_proj(&self) -> f64 {
        self.tol_proj
    }

    /// Total polygonal length of all loops.
    pub fn perimeter(&self) -> f64 {
        self.loops
            .iter()
            .map(|l| {
                (0..l.len())
                    .map(|k| {
                        let (p, q) = (l[k].point, l[(k + 1) % l.len()].point);
                        (q[0] - p[0]).hypot(q[1] - p[1])
                    })
                    .sum::<f64>()
            })
            .sum()
    }

    /// Boundary point obtained by projecting `p + t(q − p)` onto `{φ = 0}`.
    ///
    /// Continuous in `t`, so it parametrizes the boundary arc between two
    /// adjacent samples.
    pub fn chord_point(
        &self,
        domain: &ImplicitDomain,
        p: &[f64; 2],
        q: &[f64; 2],
        t: f64,
    ) -> [f64; 2] {
        if t <= 0.0 {
            return *p;
        }
        if t >= 1.0 {
            return *q;
        }
        let x = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
        project_to_zero(domain.level_set(), &x, self.tol_proj).unwrap_or(x)
    }

    /// Minimizes `x·ν` over the boundary: best sample, then golden-section
    /// refinement on the two adjacent arcs.
    pub fn support_argmin(
        &self,
        domain: &ImplicitDomain,
        nu: &Direction<2>,
        tol: f64,
    ) -> Result<[f64; 2]> {
        let (li, k) = self
            .loops
            .iter()
            .enumerate()
            .flat_map(|(li, l)| (0..l.len()).map(move |k| (li, k)))
            .min_by(|a, b| {
                let pa = self.loops[a.0][a.1].point;
                let pb = self.loops[b.0][b.1].point;
                nu.dot(&pa).total_cmp(&nu.dot(&pb))
            })
            .ok_or(Error::DomainEmpty)?;
        let l = &self.loops[li];
        let n = l.len();
        let centre = l[k].point;
        let mut best = (nu.dot(&centre), centre);
        for nb in [l[(k + n - 1) % n].point, l[(k + 1) % n].point] {
            let len = (nb[0] - centre[0]).hypot(nb[1] - centre[1]);
            let xtol = (tol / len.max(f64::MIN_POSITIVE)).min(1e-3);
            let (t, v) = golden_min(
                |t| nu.dot(&self.chord_point(domain, &centre, &nb, t)),
                0.0,
                1.0,
                xtol,
            );
            if v < best.0 {
                best = (v, self.chord_point(domain, &centre, &nb, t));
            }
        }
        Ok(best.1)
    }

    /// `a(ν) = min_{x∈∂Ω} x·ν`.
    pub fn support_min(&self, domain: &ImplicitDomain, nu: &Direction<2>, tol: f64) -> Result<f64> {
        Ok(nu.dot(&self.support_argmin(domain, nu, tol)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{LevelSet, ShapeSpec};
    use std::sync::Arc;

    #[test]
    fn disk_samples_on_circle() {
        let d = ShapeSpec::Disk { radius: 1.0 }.build().unwrap();
        let b = extract_boundary(&d, 0.01).unwrap();
        assert_eq!(b.loops().len(), 1);
        let n = b.len() as f64;
        // Marching squares yields between one and two crossings per unit of
        // resolution along the curve.
        let base = 2.0 * std::f64::consts::PI / 0.01;
        assert!(n > 0.8 * base && n < 2.0 * base, "{n}");
        for s in b.samples() {
            let r = s.point[0].hypot(s.point[1]);
            assert!((r - 1.0).abs() <= 1e-10);
            assert!((s.inward_normal[0].hypot(s.inward_normal[1]) - 1.0).abs() <= 1e-12);
        }
        assert!((b.perimeter() - 2.0 * std::f64::consts::PI).abs() < 1e-3);
    }

    #[test]
    fn samples_ordered_and_dense() {
        for spec in [
            ShapeSpec::Disk { radius: 1.0 },
            ShapeSpec::Stadium {
                length: 2.0,
                r: 1.0,
            },
            ShapeSpec::Ellipse { a: 2.0, b: 1.0 },
        ] {
            let d = spec.build().unwrap();
            let res = 0.01;
            let b = extract_boundary(&d, res).unwrap();
            let l = &b.loops()[0];
            for k in 0..l.len() {
                let (p, q) = (l[k].point, l[(k + 1) % l.len()].point);
                assert!((q[0] - p[0]).hypot(q[1] - p[1]) <= 2.0 * res);
                if k > 0 {
                    assert!(l[k].arc_parameter > l[k - 1].arc_parameter);
                }
                // Interior on the left.
                let t = [q[0] - p[0], q[1] - p[1]];
                assert!(-t[1] * l[k].inward_normal[0] + t[0] * l[k].inward_normal[1] > 0.0);
            }
        }
    }

    #[test]
    fn stadium_flats_covered() {
        let d = ShapeSpec::Stadium {
            length: 2.0,
            r: 1.0,
        }
        .build()
        .unwrap();
        let b = extract_boundary(&d, 0.01).unwrap();
        for sign in [1.0, -1.0] {
            let mut xs: Vec<f64> = b
                .samples()
                .filter(|s| (s.point[1] - sign).abs() < 1e-12 && s.point[0].abs() <= 1.0)
                .map(|s| s.point[0])
                .collect();
            xs.sort_by(f64::total_cmp);
            assert!(xs.first().unwrap() + 1.0 < 0.02 && 1.0 - xs.last().unwrap() < 0.02);
            assert!(xs.windows(2).all(|w| w[1] - w[0] <= 0.02));
        }
    }

    #[test]
    fn positive_level_set_is_empty() {
        let ls: Arc<dyn LevelSet<2>> = Arc::new((|_: &[f64; 2]| 1.0, |_: &[f64; 2]| [0.0, 0.0]));
        let bb = crate::geometry::BoundingBox {
            min: [-1.0, -1.0],
            max: [1.0, 1.0],
        };
        let d = ImplicitDomain::new("empty", ls, bb, 1.0, 2.0).unwrap();
        assert!(matches!(
            extract_boundary(&d, 0.05),
            Err(Error::DomainEmpty)
        ));
    }

    #[test]
    fn two_components_give_two_loops() {
        let ls: Arc<dyn LevelSet<2>> = Arc::new((
            |x: &[f64; 2]| ((x[0] - 1.5).hypot(x[1]) - 1.0).min((x[0] + 1.5).hypot(x[1]) - 1.0),
            |x: &[f64; 2]| {
                let c = if x[0] > 0.0 { 1.5 } else { -1.5 };
                let n = (x[0] - c).hypot(x[1]);
                [(x[0] - c) / n, x[1] / n]
            },
        ));
        let bb = crate::geometry::BoundingBox {
            min: [-3.0, -1.5],
            max: [3.0, 1.5],
        };
        let d = ImplicitDomain::new("pair", ls, bb, 2.5, 5.0).unwrap();
        let b = extract_boundary(&d, 0.02).unwrap();
        assert_eq!(b.loops().len(), 2);
    }

    #[test]
    fn support_min_refines_below_sample_level() {
        let d = ShapeSpec::Ellipse { a: 2.0, b: 1.0 }.build().unwrap();
        let b = extract_boundary(&d, 0.05).unwrap();
        let nu = Direction::from_angle(0.3);
        let a = b.support_min(&d, &nu, 1e-12).unwrap();
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let exact = -(4.0 * c * c + s * s).sqrt();
        assert!((a - exact).abs() < 1e-9, "{a} vs {exact}");
    }
}
