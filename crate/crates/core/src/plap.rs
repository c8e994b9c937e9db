//! p-Laplacian torsion problem on a masked grid and the monotonicity check.
//!
//! The unknowns live on cell centres whose level-set value is negative (the
//! mask); every other cell is held at zero. The solver minimizes
//!
//! ```text
//! J(u) = h² Σ_cells (|∇⁺u|² + ε²)^{p/2} / p  −  h² Σ_mask u
//! ```
//!
//! with forward differences `∇⁺`, whose minimizer solves `−Δ_p u = 1`,
//! `u = 0` off the mask. `J` is strictly convex for `1 < p ≤ 2`, so a damped
//! Newton method with a conjugate-gradient inner solve converges to the
//! unique minimizer.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{reflect_point, Direction, ImplicitDomain};

/// Masked regular grid of cell centres.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Grid {
    pub h: f64,
    /// Centre of cell `(0, 0)`.
    pub origin: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    /// Row-major, `index = j·nx + i`.
    pub mask: Vec<bool>,
}

impl Grid {
    /// Odd cell counts centred on the bounding-box centre, with two rings of
    /// exterior cells around the domain.
    pub fn for_domain(domain: &ImplicitDomain, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "h must be positive, got {h}"
            )));
        }
        let bb = domain.bounding_box();
        let c = bb.center();
        let half = |w: f64| (0.5 * w / h).ceil() as usize + 2;
        let (hx, hy) = (half(bb.width()), half(bb.height()));
        let (nx, ny) = (2 * hx + 1, 2 * hy + 1);
        let origin = [c[0] - hx as f64 * h, c[1] - hy as f64 * h];
        let mut mask = vec![false; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let x = [origin[0] + i as f64 * h, origin[1] + j as f64 * h];
                mask[j * nx + i] = domain.phi(&x) < 0.0;
            }
        }
        if !mask.iter().any(|m| *m) {
            return Err(Error::EmptyMask { h });
        }
        Ok(Grid {
            h,
            origin,
            nx,
            ny,
            mask,
        })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn center(&self, k: usize) -> [f64; 2] {
        let (i, j) = (k % self.nx, k / self.nx);
        [
            self.origin[0] + i as f64 * self.h,
            self.origin[1] + j as f64 * self.h,
        ]
    }

    pub fn mask_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// Cell containing `x`, if it lies on the grid.
    pub fn cell_of(&self, x: &[f64; 2]) -> Option<usize> {
        let fi = ((x[0] - self.origin[0]) / self.h).round();
        let fj = ((x[1] - self.origin[1]) / self.h).round();
        if fi < 0.0 || fj < 0.0 || fi >= self.nx as f64 || fj >= self.ny as f64 {
            return None;
        }
        Some(fj as usize * self.nx + fi as usize)
    }

    /// Bilinear interpolation of a cell field; zero off the grid.
    pub fn interpolate(&self, field: &[f64], x: &[f64; 2]) -> f64 {
        let fx = (x[0] - self.origin[0]) / self.h;
        let fy = (x[1] - self.origin[1]) / self.h;
        let (i0, j0) = (fx.floor(), fy.floor());
        let (tx, ty) = (fx - i0, fy - j0);
        let at = |i: f64, j: f64| {
            if i < 0.0 || j < 0.0 || i >= self.nx as f64 || j >= self.ny as f64 {
                0.0
            } else {
                field[j as usize * self.nx + i as usize]
            }
        };
        (1.0 - tx) * (1.0 - ty) * at(i0, j0)
            + tx * (1.0 - ty) * at(i0 + 1.0, j0)
            + (1.0 - tx) * ty * at(i0, j0 + 1.0)
            + tx * ty * at(i0 + 1.0, j0 + 1.0)
    }
}

/// The discrete energy, its gradient and Hessian-vector products.
#[derive(Clone, Debug)]
pub struct TorsionEnergy {
    grid: Grid,
    p: f64,
    epsilon: f64,
    /// Cells whose forward stencil touches the mask.
    stencil_cells: Vec<usize>,
}

impl TorsionEnergy {
    pub fn new(grid: Grid, p: f64, epsilon: f64) -> Result<Self> {
        if !(p > 1.0 && p <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "p must lie in (1, 2], got {p}"
            )));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let (nx, ny) = (grid.nx, grid.ny);
        let stencil_cells = (0..grid.len())
            .filter(|&k| {
                let (i, j) = (k % nx, k / nx);
                i + 1 < nx && j + 1 < ny && (grid.mask[k] || grid.mask[k + 1] || grid.mask[k + nx])
            })
            .collect();
        Ok(TorsionEnergy {
            grid,
            p,
            epsilon,
            stencil_cells,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn forward(&self, u: &[f64], k: usize) -> (f64, f64) {
        let h = self.grid.h;
        ((u[k + 1] - u[k]) / h, (u[k + self.grid.nx] - u[k]) / h)
    }

    pub fn energy(&self, u: &[f64]) -> f64 {
        let (h2, p, e2) = (
            self.grid.h * self.grid.h,
            self.p,
            self.epsilon * self.epsilon,
        );
        let grad_part: f64 = self
            .stencil_cells
            .iter()
            .map(|&k| {
                let (gx, gy) = self.forward(u, k);
                (gx * gx + gy * gy + e2).powf(0.5 * p) / p
            })
            .sum();
        let load: f64 = (0..u.len())
            .filter(|&k| self.grid.mask[k])
            .map(|k| u[k])
            .sum();
        h2 * (grad_part - load)
    }

    /// `∂J/∂u`, zero off the mask.
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let (h, nx, e2) = (self.grid.h, self.grid.nx, self.epsilon * self.epsilon);
        let mut g = vec![0.0; u.len()];
        for &k in &self.stencil_cells {
            let (gx, gy) = self.forward(u, k);
            let w = (gx * gx + gy * gy + e2).powf(0.5 * self.p - 1.0);
            let (fx, fy) = (h * w * gx, h * w * gy);
            g[k] -= fx + fy;
            g[k + 1] += fx;
            g[k + nx] += fy;
        }
        for (k, gk) in g.iter_mut().enumerate() {
            *gk = if self.grid.mask[k] { *gk - h * h } else { 0.0 };
        }
        g
    }

    /// Per-cell 2×2 Hessian blocks `w[I + (p−2) ggᵀ/(|g|²+ε²)]` at `u`.
    fn blocks(&self, u: &[f64]) -> Vec<[f64; 3]> {
        let e2 = self.epsilon * self.epsilon;
        self.stencil_cells
            .iter()
            .map(|&k| {
                let (gx, gy) = self.forward(u, k);
                let s = gx * gx + gy * gy + e2;
                let w = s.powf(0.5 * self.p - 1.0);
                let c = (self.p - 2.0) / s;
                [
                    w * (1.0 + c * gx * gx),
                    w * c * gx * gy,
                    w * (1.0 + c * gy * gy),
                ]
            })
            .collect()
    }

    fn hess_vec(&self, blocks: &[[f64; 3]], v: &[f64], out: &mut [f64]) {
        let nx = self.grid.nx;
        out.iter_mut().for_each(|o| *o = 0.0);
        for (b, &k) in blocks.iter().zip(&self.stencil_cells) {
            let (dx, dy) = (v[k + 1] - v[k], v[k + nx] - v[k]);
            let (qx, qy) = (b[0] * dx + b[1] * dy, b[1] * dx + b[2] * dy);
            out[k] -= qx + qy;
            out[k + 1] += qx;
            out[k + nx] += qy;
        }
        for (k, o) in out.iter_mut().enumerate() {
            if !self.grid.mask[k] {
                *o = 0.0;
            }
        }
    }

    fn hess_diag(&self, blocks: &[[f64; 3]]) -> Vec<f64> {
        let nx = self.grid.nx;
        let mut d = vec![0.0; self.grid.len()];
        for (b, &k) in blocks.iter().zip(&self.stencil_cells) {
            d[k] += b[0] + 2.0 * b[1] + b[2];
            d[k + 1] += b[0];
            d[k + nx] += b[2];
        }
        d
    }

    /// Jacobi-preconditioned CG for `H d = −g` on the mask.
    fn newton_direction(&self, blocks: &[[f64; 3]], g: &[f64]) -> Vec<f64> {
        let n = g.len();
        let mask = &self.grid.mask;
        let diag = self.hess_diag(blocks);
        let precond = |r: &[f64], z: &mut [f64]| {
            for k in 0..n {
                z[k] = if mask[k] && diag[k] > 0.0 {
                    r[k] / diag[k]
                } else {
                    0.0
                };
            }
        };
        let gnorm = dot(g, g).sqrt();
        let tol = (0.5f64).min(gnorm.sqrt()) * gnorm;
        let mut x = vec![0.0; n];
        let mut r: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut z = vec![0.0; n];
        precond(&r, &mut z);
        let mut d = z.clone();
        let mut rz = dot(&r, &z);
        let mut hd = vec![0.0; n];
        for _ in 0..4 * n.max(10) {
            if dot(&r, &r).sqrt() <= tol {
                break;
            }
            self.hess_vec(blocks, &d, &mut hd);
            let dhd = dot(&d, &hd);
            if dhd <= 0.0 {
                break;
            }
            let alpha = rz / dhd;
            for k in 0..n {
                x[k] += alpha * d[k];
                r[k] -= alpha * hd[k];
            }
            precond(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                d[k] = z[k] + beta * d[k];
            }
        }
        if dot(&x, g) >= 0.0 {
            // Fall back to the preconditioned steepest descent.
            precond(g, &mut x);
            x.iter_mut().for_each(|v| *v = -*v);
        }
        x
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solver output. `u` is zero off the mask and non-negative.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridSolution {
    pub grid: Grid,
    pub u: Vec<f64>,
    pub p: f64,
    pub epsilon: f64,
    /// Energy of the start and of every accepted iterate; the last entry is
    /// the energy after the final projection onto `u ≥ 0`.
    pub energy_trace: Vec<f64>,
    /// Max-norm of the discrete equation residual `(∂J/∂u)/h²` on the mask.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solve summary without the grid arrays.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveSummary {
    pub h: f64,
    pub origin: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    pub mask_cells: usize,
    pub p: f64,
    pub epsilon: f64,
    pub u_max: f64,
    pub u_at_origin: f64,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub energy_trace: Vec<f64>,
}

impl GridSolution {
    pub fn value_at(&self, x: &[f64; 2]) -> f64 {
        self.grid.interpolate(&self.u, x)
    }

    pub fn u_max(&self) -> f64 {
        self.u.iter().copied().fold(0.0, f64::max)
    }

    /// Errors with [`Error::NotConverged`] unless the solve converged.
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                iterations: self.iterations,
                residual: self.residual,
            })
        }
    }

    pub fn summary(&self) -> SolveSummary {
        SolveSummary {
            h: self.grid.h,
            origin: self.grid.origin,
            nx: self.grid.nx,
            ny: self.grid.ny,
            mask_cells: self.grid.mask_count(),
            p: self.p,
            epsilon: self.epsilon,
            u_max: self.u_max(),
            u_at_origin: self.value_at(&[0.0, 0.0]),
            energy: *self.energy_trace.last().unwrap_or(&0.0),
            residual: self.residual,
            iterations: self.iterations,
            converged: self.converged,
            energy_trace: self.energy_trace.clone(),
        }
    }

    /// CSV dump: a header row `h,origin_x,origin_y,nx,ny`, its values, then
    /// `ny` rows of `nx` values of `u` from the lowest `y` up.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let g = &self.grid;
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
        let err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["h", "origin_x", "origin_y", "nx", "ny"])
            .map_err(err)?;
        w.write_record([
            g.h.to_string(),
            g.origin[0].to_string(),
            g.origin[1].to_string(),
            g.nx.to_string(),
            g.ny.to_string(),
        ])
        .map_err(err)?;
        for row in self.u.chunks(g.nx) {
            w.write_record(row.iter().map(|v| v.to_string()))
                .map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `ε = 1e-6·(L/4)^{1/(p−1)}`, a small fraction of the gradient scale of the
/// torsion solution on a domain of length scale `L`.
pub fn default_epsilon(domain: &ImplicitDomain, p: f64) -> f64 {
    1e-6 * (0.25 * domain.length_scale()).powf(1.0 / (p - 1.0))
}

/// Minimizes the torsion energy with damped Newton-CG.
///
/// Starts from the `p = 2` solution, stops when the relative energy decrease
/// of an accepted step falls below `tol_res`, and projects the result onto
/// `u ≥ 0` (which cannot raise the energy). An unconverged run is returned
/// with `converged = false`.
pub fn solve_torsion(
    domain: &ImplicitDomain,
    h: f64,
    p: f64,
    epsilon: f64,
    max_iters: usize,
    tol_res: f64,
) -> Result<GridSolution> {
    let grid = Grid::for_domain(domain, h)?;
    if !(tol_res.is_finite() && tol_res > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tol_res must be positive, got {tol_res}"
        )));
    }
    let energy = TorsionEnergy::new(grid, p, epsilon)?;
    let mut u = vec![0.0; energy.grid.len()];
    if p < 2.0 {
        let linear = TorsionEnergy::new(energy.grid.clone(), 2.0, epsilon)?;
        let g = linear.gradient(&u);
        u = linear.newton_direction(&linear.blocks(&u), &g);
        // Scale the linear solution towards the p-torsion magnitude.
        let umax = u.iter().copied().fold(0.0, f64::max);
        if umax > 0.0 {
            let target = umax.powf(1.0 / (p - 1.0)).max(1e-300) / umax;
            let scaled: Vec<f64> = u.iter().map(|v| v * target).collect();
            if energy.energy(&scaled) < energy.energy(&u) {
                u = scaled;
            }
        }
    }
    minimize(energy, u, max_iters, tol_res)
}

fn minimize(
    energy: TorsionEnergy,
    mut u: Vec<f64>,
    max_iters: usize,
    tol_res: f64,
) -> Result<GridSolution> {
    let h2 = energy.grid.h * energy.grid.h;
    let mut j = energy.energy(&u);
    let mut trace = vec![j];
    let mut converged = false;
    let mut iterations = 0;
    let mut trial = vec![0.0; u.len()];
    while iterations < max_iters {
        iterations += 1;
        let g = energy.gradient(&u);
        let d = energy.newton_direction(&energy.blocks(&u), &g);
        let slope = dot(&g, &d);
        if slope >= 0.0 {
            converged = true;
            break;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            for k in 0..u.len() {
                trial[k] = u[k] + t * d[k];
            }
            let jt = energy.energy(&trial);
            if jt <= j + 1e-4 * t * slope {
                accepted = Some(jt);
                break;
            }
            t *= 0.5;
        }
        let Some(jt) = accepted else {
            converged = true;
            break;
        };
        std::mem::swap(&mut u, &mut trial);
        let decrease = (j - jt) / jt.abs().max(f64::MIN_POSITIVE);
        j = jt;
        trace.push(j);
        if decrease < tol_res {
            converged = true;
            break;
        }
    }
    for v in u.iter_mut() {
        *v = v.max(0.0);
    }
    let jp = energy.energy(&u);
    if jp < j {
        trace.push(jp);
    }
    let residual = energy
        .gradient(&u)
        .iter()
        .map(|v| (v / h2).abs())
        .fold(0.0, f64::max);
    Ok(GridSolution {
        grid: energy.grid,
        u,
        p: energy.p,
        epsilon: energy.epsilon,
        energy_trace: trace,
        residual,
        iterations,
        converged,
    })
}

/// `∂u/∂ν` by central differences; cells next to the mask edge use the
/// one-sided difference towards their in-mask neighbour.
pub fn directional_derivative_field(solution: &GridSolution, nu: &Direction<2>) -> Vec<f64> {
    let [n0, n1] = *nu.components();
    gradient_field(solution)
        .into_iter()
        .map(|[gx, gy]| gx * n0 + gy * n1)
        .collect()
}

/// Discrete `∇u` on the mask (zero elsewhere).
pub fn gradient_field(solution: &GridSolution) -> Vec<[f64; 2]> {
    let g = &solution.grid;
    let u = &solution.u;
    let (nx, ny, h) = (g.nx, g.ny, g.h);
    let diff = |k: usize, lo: Option<usize>, hi: Option<usize>| -> f64 {
        let inside = |m: Option<usize>| m.filter(|&m| g.mask[m]);
        match (inside(lo), inside(hi)) {
            (Some(a), Some(b)) => (u[b] - u[a]) / (2.0 * h),
            (None, Some(b)) => (u[b] - u[k]) / h,
            (Some(a), None) => (u[k] - u[a]) / h,
            (None, None) => 0.0,
        }
    };
    (0..g.len())
        .map(|k| {
            if !g.mask[k] {
                return [0.0, 0.0];
            }
            let (i, j) = (k % nx, k / nx);
            let west = (i > 0).then(|| k - 1);
            let east = (i + 1 < nx).then(|| k + 1);
            let south = (j > 0).then(|| k - nx);
            let north = (j + 1 < ny).then(|| k + nx);
            [diff(k, west, east), diff(k, south, north)]
        })
        .collect()
}

/// Reflection comparison of a solution against the moving-plane parameter.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub nu: [f64; 2],
    pub a: f64,
    pub lambda1: f64,
    pub lambdas_tested: Vec<f64>,
    /// `max(0, max u(x) − u(x_λ))` over all tested pairs.
    pub max_violation: f64,
    /// Largest violation per tested `λ`.
    pub violation_by_lambda: Vec<f64>,
    pub pairs_tested: usize,
    /// Fraction of mask cells with `|∇u| ≤ grad_floor`.
    pub critical_set_measure: f64,
    pub grad_floor: f64,
    /// Minimum of `∂u/∂ν` over cells with `x·ν < λ₁ − h/2` off the critical
    /// cells; centres within half a cell of the plane are not resolved as
    /// inside the open cap.
    pub min_directional_derivative: Option<f64>,
    pub h: f64,
}

/// Compares `u(x)` with `u(x_λ)` for cells in `Ω_λ = {x ∈ Ω : x·ν < λ}` at
/// `n_lambda` values of `λ` spread uniformly over `(a(ν) + 2h, λ₁]`.
///
/// Cells whose reflection leaves the domain or the mask are skipped; `u` at
/// the reflection is interpolated bilinearly. The critical set is
/// approximated by `|∇u| ≤ 10·h·max|∇u|`.
pub fn verify_monotonicity(
    solution: &GridSolution,
    domain: &ImplicitDomain,
    nu: &Direction<2>,
    lambda1: f64,
    n_lambda: usize,
) -> Result<MonotonicityReport> {
    if !solution.converged {
        return Err(Error::UnconvergedInput);
    }
    if n_lambda == 0 {
        return Err(Error::InvalidParameter("n_lambda must be positive".into()));
    }
    let a = domain.support_min(nu)?;
    let hi = -domain.support_min(&-*nu)?;
    let g = &solution.grid;
    let h = g.h;
    let lo = a + 2.0 * h;
    if !(lambda1 > lo && lambda1 <= hi) {
        return Err(Error::LambdaOutOfRange {
            lambda: lambda1,
            lo,
            hi,
        });
    }
    let lambdas: Vec<f64> = (1..=n_lambda)
        .map(|i| lo + (lambda1 - lo) * i as f64 / n_lambda as f64)
        .collect();
    let mut violation_by_lambda = Vec::with_capacity(n_lambda);
    let mut pairs_tested = 0;
    for &lambda in &lambdas {
        let mut worst = f64::NEG_INFINITY;
        for k in (0..g.len()).filter(|&k| g.mask[k]) {
            let x = g.center(k);
            if nu.dot(&x) >= lambda {
                continue;
            }
            let xr = reflect_point(&x, nu, lambda);
            if domain.phi(&xr) >= 0.0 || !g.cell_of(&xr).is_some_and(|c| g.mask[c]) {
                continue;
            }
            pairs_tested += 1;
            worst = worst.max(solution.u[k] - g.interpolate(&solution.u, &xr));
        }
        violation_by_lambda.push(if worst.is_finite() { worst } else { 0.0 });
    }
    let max_violation = violation_by_lambda.iter().copied().fold(0.0, f64::max);

    let grads = gradient_field(solution);
    let norms: Vec<f64> = grads.iter().map(|[x, y]| x.hypot(*y)).collect();
    let grad_max = norms.iter().copied().fold(0.0, f64::max);
    let grad_floor = 10.0 * h * grad_max;
    let mask_cells = g.mask_count();
    let critical = (0..g.len())
        .filter(|&k| g.mask[k] && norms[k] <= grad_floor)
        .count();
    let [n0, n1] = *nu.components();
    let min_directional_derivative = (0..g.len())
        .filter(|&k| g.mask[k] && norms[k] > grad_floor && nu.dot(&g.center(k)) < lambda1 - 0.5 * h)
        .map(|k| grads[k][0] * n0 + grads[k][1] * n1)
        .reduce(f64::min);
    Ok(MonotonicityReport {
        nu: *nu.components(),
        a,
        lambda1,
        lambdas_tested: lambdas,
        max_violation,
        violation_by_lambda,
        pairs_tested,
        critical_set_measure: critical as f64 / mask_cells as f64,
        grad_floor,
        min_directional_derivative,
        h,
    })
}
