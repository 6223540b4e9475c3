//! Principal eigenvalue of `-rho D Lap phi - B(x) phi = lambda phi` with Neumann conditions,
//! and the two limit curves built from it.

use serde::Serialize;

use crate::coefficients::{space_mean, temporal_average, DiffusionMatrix, MatrixField};
use crate::error::{Error, Result};
use crate::grid::{integrate_time, GridFunction, SpatialGrid, TimeGrid};
use crate::linalg::{perron_unchecked, BandMatrix};

/// Below this the discrete problem no longer resolves the boundary layer.
pub const MIN_RHO: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct EllipticEigen {
    pub lambda: f64,
    /// Positive, sup-normalized.
    #[serde(skip)]
    pub eigenfunction: GridFunction,
    /// `|L phi - lambda phi|_inf / (1 + |L|_inf)` with `|phi|_inf = 1`.
    pub residual: f64,
    pub iterations: usize,
}

/// Symmetrized operator `W^{1/2} (-rho D Lap - B) W^{-1/2}`, unknowns interleaved as `node * n + comp`.
fn assemble(coeff: &[f64], n: usize, rho: f64, diffusion: &DiffusionMatrix, grid: &SpatialGrid) -> BandMatrix {
    let nodes = grid.nodes();
    let h2 = grid.spacing().powi(2);
    let mut s = BandMatrix::zeros(nodes * n, n);
    for k in 0..nodes {
        let b = &coeff[k * n * n..(k + 1) * n * n];
        for i in 0..n {
            let p = k * n + i;
            s.add(p, p, 2.0 * rho * diffusion.rates()[i] / h2 - b[i * n + i]);
            for j in 0..i {
                s.add(p, k * n + j, -b[i * n + j]);
            }
            if k + 1 < nodes {
                let c = if k == 0 || k + 2 == nodes { std::f64::consts::SQRT_2 } else { 1.0 };
                s.add(p + n, p, -rho * diffusion.rates()[i] * c / h2);
            }
        }
    }
    s
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `coeff` holds `B(x_k)` row-major for each node.
pub fn elliptic_principal(
    coeff: &[f64],
    rho: f64,
    diffusion: &DiffusionMatrix,
    grid: &SpatialGrid,
    warm: Option<&GridFunction>,
) -> Result<EllipticEigen> {
    let n = diffusion.len();
    let nodes = grid.nodes();
    if coeff.len() != nodes * n * n {
        return Err(Error::Dimension(format!("expected {} coefficients, got {}", nodes * n * n, coeff.len())));
    }
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::Invalid(format!("rho must be positive, got {rho}")));
    }
    if rho < MIN_RHO {
        return Err(Error::Regime(format!(
            "rho = {rho:e} below {MIN_RHO:e}; use the small-diffusion limit -max_x mu(B) instead"
        )));
    }
    let s = assemble(coeff, n, rho, diffusion, grid);
    let size = nodes * n;
    let weights = grid.weights();
    let sq: Vec<f64> = (0..size).map(|p| weights[p / n].sqrt()).collect();
    let norm_s = (0..size).map(|p| (0..size.min(p + n + 1)).skip(p.saturating_sub(n)).map(|q| s.get(p, q).abs()).sum::<f64>()).fold(0.0, f64::max);

    let max_mu = (0..nodes).map(|k| perron_unchecked(&coeff[k * n * n..(k + 1) * n * n], n).value).fold(f64::NEG_INFINITY, f64::max);
    let mut shift = -max_mu - 1.0;
    let mut chol = s.cholesky_shifted(shift)?;

    let mut y: Vec<f64> = match warm {
        Some(w) if w.components() == n && w.nodes() == nodes => {
            (0..size).map(|p| w.get(p % n, p / n).abs().max(1e-300) * sq[p]).collect()
        }
        _ => sq.clone(),
    };
    let mut sy = vec![0.0; size];
    let mut rq = 0.0;
    let mut iterations = 0;
    let tol = 1e-13 * (1.0 + norm_s);
    for it in 1..=300 {
        iterations = it;
        chol.solve(&mut y);
        let nrm = dot(&y, &y).sqrt();
        y.iter_mut().for_each(|v| *v /= nrm);
        s.matvec(&y, &mut sy);
        rq = rayleigh(&y, &sq, coeff, n, rho, diffusion, grid);
        let r = sy.iter().zip(&y).map(|(a, b)| (a - rq * b).powi(2)).sum::<f64>().sqrt();
        if r <= tol {
            break;
        }
        let trial = rq - (2.0 * r).max(1e-12 * (1.0 + rq.abs()));
        if trial > shift {
            if let Ok(c) = s.cholesky_shifted(trial) {
                shift = trial;
                chol = c;
            }
        }
    }
    let mut phi: Vec<f64> = (0..size).map(|p| y[p] / sq[p]).collect();
    if phi.iter().sum::<f64>() < 0.0 {
        phi.iter_mut().for_each(|v| *v = -*v);
    }
    let top = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    phi.iter_mut().for_each(|v| *v /= top);
    let mut ef = GridFunction::zeros(n, nodes);
    for p in 0..size {
        ef.set(p % n, p / n, phi[p]);
    }
    let residual = operator_residual(coeff, rho, diffusion, grid, &ef, rq);
    if ef.values().iter().any(|v| *v < -1e-10) {
        return Err(Error::Positivity("elliptic eigenfunction changes sign".into()));
    }
    Ok(EllipticEigen { lambda: rq, eigenfunction: ef, residual, iterations })
}

/// Rayleigh quotient from the Dirichlet form, free of the cancellation in `y^T S y`.
fn rayleigh(y: &[f64], sq: &[f64], coeff: &[f64], n: usize, rho: f64, diffusion: &DiffusionMatrix, grid: &SpatialGrid) -> f64 {
    let nodes = grid.nodes();
    let h = grid.spacing();
    let phi: Vec<f64> = y.iter().zip(sq).map(|(a, b)| a / b).collect();
    let mut energy = 0.0;
    for i in 0..n {
        let mut e = 0.0;
        for k in 0..nodes - 1 {
            e += (phi[(k + 1) * n + i] - phi[k * n + i]).powi(2);
        }
        energy += rho * diffusion.rates()[i] * e / h;
    }
    let mut potential = 0.0;
    for k in 0..nodes {
        let b = &coeff[k * n * n..(k + 1) * n * n];
        let w = sq[k * n].powi(2);
        let f = &phi[k * n..(k + 1) * n];
        let q: f64 = (0..n).map(|i| f[i] * (0..n).map(|j| b[i * n + j] * f[j]).sum::<f64>()).sum();
        potential += w * q;
    }
    (energy - potential) / dot(y, y)
}

fn operator_residual(
    coeff: &[f64],
    rho: f64,
    diffusion: &DiffusionMatrix,
    grid: &SpatialGrid,
    phi: &GridFunction,
    lambda: f64,
) -> f64 {
    let n = phi.components();
    let nodes = phi.nodes();
    let lap = crate::grid::neumann_laplacian(phi, grid).expect("same grid");
    let h2 = grid.spacing().powi(2);
    let mut worst = 0.0f64;
    let mut norm = 0.0f64;
    for k in 0..nodes {
        let b = &coeff[k * n * n..(k + 1) * n * n];
        for i in 0..n {
            let mut v = -rho * diffusion.rates()[i] * lap.get(i, k) - lambda * phi.get(i, k);
            let mut row = 4.0 * rho * diffusion.rates()[i] / h2;
            for j in 0..n {
                v -= b[i * n + j] * phi.get(j, k);
                row += b[i * n + j].abs();
            }
            worst = worst.max(v.abs());
            norm = norm.max(row);
        }
    }
    worst / (1.0 + norm)
}

/// `lambda_bar(rho)`: elliptic eigenvalue with the time average of `A`.
pub fn lambda_bar(
    field: &MatrixField,
    diffusion: &DiffusionMatrix,
    grid: &SpatialGrid,
    time: &TimeGrid,
    rho: f64,
) -> Result<EllipticEigen> {
    let hat = temporal_average(field, grid, time);
    elliptic_principal(&hat, rho, diffusion, grid, None)
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaUnder {
    pub value: f64,
    /// `lambda_0(t_m, rho)` for `m = 0..=M`.
    pub frozen: Vec<f64>,
    pub worst_residual: f64,
}

/// `lambda_under(rho) = int_0^1 lambda_0(t, rho) dt`, with `lambda_0(t, .)` the frozen-time elliptic eigenvalue.
pub fn lambda_under(
    field: &MatrixField,
    diffusion: &DiffusionMatrix,
    grid: &SpatialGrid,
    time: &TimeGrid,
    rho: f64,
) -> Result<LambdaUnder> {
    let n = field.n();
    let sampler = field.sampler(grid);
    let mut buf = vec![0.0; grid.nodes() * n * n];
    let mut frozen = Vec::with_capacity(time.steps() + 1);
    let mut warm: Option<GridFunction> = None;
    let mut worst = 0.0f64;
    for m in 0..time.steps() {
        sampler.eval_nodes(time.t(m), &mut buf);
        let e = elliptic_principal(&buf, rho, diffusion, grid, warm.as_ref())?;
        worst = worst.max(e.residual);
        frozen.push(e.lambda);
        warm = Some(e.eigenfunction);
    }
    frozen.push(frozen[0]);
    let value = integrate_time(&frozen)?.value;
    Ok(LambdaUnder { value, frozen, worst_residual: worst })
}

/// Large-diffusion limit of the elliptic eigenvalue: `-mu` of the mean coefficient.
pub fn elliptic_large_rho_limit(coeff: &[f64], n: usize, grid: &SpatialGrid) -> f64 {
    -perron_unchecked(&space_mean(coeff, n, grid), n).value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{CoefficientEntry, FourierTerm, TimeMode};

    #[test]
    fn constant_coefficient() {
        let g = SpatialGrid::new(1.0, 51).unwrap();
        let d = DiffusionMatrix::new(vec![1.0, 2.0]).unwrap();
        let coeff: Vec<f64> = (0..51).flat_map(|_| [0.0, 1.0, 1.0, 0.0]).collect();
        for rho in [1e-3, 1.0, 1e3] {
            let e = elliptic_principal(&coeff, rho, &d, &g, None).unwrap();
            assert!((e.lambda + 1.0).abs() < 1e-10, "{}", e.lambda);
            assert!(e.residual < 1e-9);
            assert!(e.eigenfunction.values().iter().all(|v| *v > 0.0));
        }
    }

    #[test]
    fn scalar_matches_dense_eigenvalues() {
        let g = SpatialGrid::new(1.0, 31).unwrap();
        let d = DiffusionMatrix::new(vec![1.0]).unwrap();
        let coeff: Vec<f64> = (0..31).map(|k| (std::f64::consts::PI * g.x(k)).cos()).collect();
        let rho = 0.05;
        let e = elliptic_principal(&coeff, rho, &d, &g, None).unwrap();
        // dense generalized check with the nonsymmetric operator
        let n = 31;
        let h2 = g.spacing().powi(2);
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for j in 0..n {
            m[(j, j)] = 2.0 * rho / h2 - coeff[j];
            if j > 0 {
                m[(j, j - 1)] = -rho / h2 * if j == n - 1 { 2.0 } else { 1.0 };
            }
            if j + 1 < n {
                m[(j, j + 1)] = -rho / h2 * if j == 0 { 2.0 } else { 1.0 };
            }
        }
        let ev = m.complex_eigenvalues();
        let min = ev.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
        assert!((e.lambda - min).abs() < 1e-9, "{} vs {min}", e.lambda);
    }

    #[test]
    fn limits_in_rho() {
        let g = SpatialGrid::new(1.0, 101).unwrap();
        let d = DiffusionMatrix::new(vec![1.0]).unwrap();
        let coeff: Vec<f64> = (0..101).map(|k| (std::f64::consts::PI * g.x(k)).cos()).collect();
        let small = elliptic_principal(&coeff, 1e-6, &d, &g, None).unwrap();
        assert!((small.lambda + 1.0).abs() < 1e-2);
        let large = elliptic_principal(&coeff, 1e4, &d, &g, None).unwrap();
        assert!(large.lambda.abs() < 1e-3);
        assert!(matches!(elliptic_principal(&coeff, 1e-9, &d, &g, None), Err(Error::Regime(_))));
    }

    #[test]
    fn lambda_under_of_time_only_coefficient() {
        let g = SpatialGrid::new(1.0, 21).unwrap();
        let t = TimeGrid::new(32).unwrap();
        let d = DiffusionMatrix::new(vec![1.0]).unwrap();
        let mut f = MatrixField::new(1, 1.0).unwrap();
        f.set_entry(0, 0, CoefficientEntry::fourier(vec![FourierTerm::new(1.0, 0, TimeMode::Cos(1)), FourierTerm::constant(0.5)])).unwrap();
        let u = lambda_under(&f, &d, &g, &t, 1.0).unwrap();
        assert!((u.value + 0.5).abs() < 1e-10);
        let b = lambda_bar(&f, &d, &g, &t, 1.0).unwrap();
        assert!((b.lambda + 0.5).abs() < 1e-10);
    }
}
