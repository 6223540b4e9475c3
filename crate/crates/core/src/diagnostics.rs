//! Eigenfunction-level identities: the forward/adjoint energy identity, the
//! lower bound of `lambda - C(omega / sqrt(rho))`, and the separable-in-time test.

use serde::Serialize;

use crate::coefficients::{temporal_average, DiffusionMatrix, MatrixField};
use crate::elliptic::elliptic_principal;
use crate::error::{Error, Result};
use crate::grid::{SpatialGrid, TimeGrid};
use crate::parabolic::{EigenPair, SpaceTimeField};
use crate::problem::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityResidual {
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs - rhs| / (|lhs| + |rhs| + 1)`
    pub relative: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapBound {
    /// `lambda - C`
    pub gap: f64,
    pub bound: f64,
    /// `gap - bound`
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparableFit {
    pub rho: f64,
    /// Least-squares `g(t_m)` in `(A - Â) phi ~ g phi`.
    pub g: Vec<f64>,
    /// Fit residual relative to `|A phi|`, over all time nodes.
    pub residual: f64,
}

fn check_shapes(pair: &EigenPair, grid: &SpatialGrid, time: &TimeGrid) -> Result<()> {
    let (phi, psi) = (&pair.phi, &pair.psi);
    if phi.nodes != grid.nodes() || phi.steps != time.steps() || psi.nodes != phi.nodes || psi.steps != phi.steps {
        return Err(Error::Dimension("eigenfunctions do not live on the given grids".into()));
    }
    if phi.min() <= 0.0 || psi.min() <= 0.0 {
        return Err(Error::Positivity("eigenfunctions must be strictly positive".into()));
    }
    Ok(())
}

/// Central difference with zero at both ends, matching mirrored ghosts.
fn gradient(f: &[f64], h: f64, out: &mut [f64]) {
    let n = f.len();
    out[0] = 0.0;
    out[n - 1] = 0.0;
    for j in 1..n - 1 {
        out[j] = (f[j + 1] - f[j - 1]) / (2.0 * h);
    }
}

fn row(field: &SpaceTimeField, i: usize, m: usize) -> &[f64] {
    &field.slice(m)[i * field.nodes..(i + 1) * field.nodes]
}

/// Both sides of
/// `2 omega <psi, d_t phi> = rho sum_i d_i <phi_i psi_i |grad log(psi_i / phi_i)|^2>
///   + 1/2 sum_ij <a_ij (phi_j psi_i - psi_j phi_i) log(psi_i phi_j / (phi_i psi_j))>`.
pub fn energy_identity(
    pair: &EigenPair,
    field: &MatrixField,
    diffusion: &DiffusionMatrix,
    grid: &SpatialGrid,
    time: &TimeGrid,
) -> Result<IdentityResidual> {
    check_shapes(pair, grid, time)?;
    let (phi, psi) = (&pair.phi, &pair.psi);
    let (omega, rho) = (pair.forward.omega, pair.forward.rho);
    let (n, nodes, steps) = (phi.n, phi.nodes, phi.steps);
    let w = grid.weights();
    let dt = time.dt();
    let h = grid.spacing();
    let sampler = field.sampler(grid);
    let mut a = vec![0.0; nodes * n * n];
    let mut ratio = vec![0.0; nodes];
    let mut grad = vec![0.0; nodes];
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for m in 0..steps {
        let prev = if m == 0 { steps - 1 } else { m - 1 };
        sampler.eval_nodes(time.t(m), &mut a);
        for i in 0..n {
            let (f, g) = (row(phi, i, m), row(psi, i, m));
            let (fp, fm) = (row(phi, i, m + 1), row(phi, i, prev));
            for k in 0..nodes {
                lhs += 2.0 * omega * w[k] * dt * g[k] * (fp[k] - fm[k]) / (2.0 * dt);
                ratio[k] = (g[k] / f[k]).ln();
            }
            gradient(&ratio, h, &mut grad);
            let d = diffusion.rates()[i];
            for k in 0..nodes {
                rhs += rho * d * w[k] * dt * f[k] * g[k] * grad[k] * grad[k];
            }
            for j in 0..n {
                let (fj, gj) = (row(phi, j, m), row(psi, j, m));
                for k in 0..nodes {
                    let aij = a[k * n * n + i * n + j];
                    let cross = fj[k] * g[k] - gj[k] * f[k];
                    let log = (g[k] * fj[k] / (f[k] * gj[k])).ln();
                    rhs += 0.5 * w[k] * dt * aij * cross * log;
                }
            }
        }
    }
    Ok(IdentityResidual { lhs, rhs, relative: (lhs - rhs).abs() / (lhs.abs() + rhs.abs() + 1.0) })
}

/// Right side of the lower bound for `lambda - C(omega / sqrt(rho))`:
/// `rho sum_i d_i <|grad sqrt(phi_i psi_i)|^2> + sum_i <phi_i psi_i |sqrt(rho)/2 grad log(phi_i/psi_i) + grad U|^2>`.
///
/// `profile` is one period of the Hamilton-Jacobi solution on the same grids.
pub fn gap_bound(
    pair: &EigenPair,
    profile: &SpaceTimeField,
    critical: f64,
    diffusion: &DiffusionMatrix,
    grid: &SpatialGrid,
    time: &TimeGrid,
) -> Result<GapBound> {
    check_shapes(pair, grid, time)?;
    if profile.n != 1 || profile.nodes != grid.nodes() || profile.steps != time.steps() {
        return Err(Error::Dimension("profile must be scalar on the eigenfunction grids".into()));
    }
    let (phi, psi) = (&pair.phi, &pair.psi);
    let rho = pair.forward.rho;
    let (n, nodes, steps) = (phi.n, phi.nodes, phi.steps);
    let w = grid.weights();
    let dt = time.dt();
    let h = grid.spacing();
    let mut buf = vec![0.0; nodes];
    let mut g1 = vec![0.0; nodes];
    let mut g2 = vec![0.0; nodes];
    let mut gu = vec![0.0; nodes];
    let mut bound = 0.0;
    for m in 0..steps {
        gradient(profile.slice(m), h, &mut gu);
        for i in 0..n {
            let (f, g) = (row(phi, i, m), row(psi, i, m));
            let d = diffusion.rates()[i];
            for k in 0..nodes {
                buf[k] = (f[k] * g[k]).sqrt();
            }
            gradient(&buf, h, &mut g1);
            for k in 0..nodes {
                buf[k] = (f[k] / g[k]).ln();
            }
            gradient(&buf, h, &mut g2);
            for k in 0..nodes {
                let drift = 0.5 * rho.sqrt() * g2[k] + gu[k];
                bound += w[k] * dt * (rho * d * g1[k] * g1[k] + f[k] * g[k] * drift * drift);
            }
        }
    }
    let gap = pair.forward.lambda - critical;
    Ok(GapBound { gap, bound, slack: gap - bound })
}

/// Fits `(A(x, t) - Â(x)) phi = g(t) phi` with `phi` the elliptic eigenfunction of `Â` at `rho`.
/// A vanishing residual is the exact condition for `lambda` to be flat in `omega`.
pub fn separable_time_fit(problem: &Problem, rho: f64) -> Result<SeparableFit> {
    let (grid, time) = (&problem.grid, &problem.time);
    let n = problem.n();
    let nodes = grid.nodes();
    let hat = temporal_average(&problem.field, grid, time);
    let eig = elliptic_principal(&hat, rho, &problem.diffusion, grid, None)?;
    let phi = &eig.eigenfunction;
    let w = grid.weights();
    let sampler = problem.field.sampler(grid);
    let mut a = vec![0.0; nodes * n * n];
    let mut r = vec![0.0; n * nodes];
    let mut full = vec![0.0; n * nodes];
    let norm_phi: f64 = (0..n).flat_map(|i| (0..nodes).map(move |k| (i, k))).map(|(i, k)| w[k] * phi.get(i, k).powi(2)).sum();
    let mut g = Vec::with_capacity(time.steps());
    let (mut res, mut scale) = (0.0, 0.0);
    for m in 0..time.steps() {
        sampler.eval_nodes(time.t(m), &mut a);
        for k in 0..nodes {
            for i in 0..n {
                let (mut s, mut t) = (0.0, 0.0);
                for j in 0..n {
                    let q = k * n * n + i * n + j;
                    s += (a[q] - hat[q]) * phi.get(j, k);
                    t += a[q] * phi.get(j, k);
                }
                r[i * nodes + k] = s;
                full[i * nodes + k] = t;
            }
        }
        let dot: f64 = (0..n).flat_map(|i| (0..nodes).map(move |k| (i, k))).map(|(i, k)| w[k] * r[i * nodes + k] * phi.get(i, k)).sum();
        let gm = dot / norm_phi;
        for i in 0..n {
            for k in 0..nodes {
                res += w[k] * (r[i * nodes + k] - gm * phi.get(i, k)).powi(2);
                scale += w[k] * full[i * nodes + k].powi(2);
            }
        }
        g.push(gm);
    }
    let residual = if scale > 0.0 { (res / scale).sqrt() } else { res.sqrt() };
    Ok(SeparableFit { rho, g, residual })
}
