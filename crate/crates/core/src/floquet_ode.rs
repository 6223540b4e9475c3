//! Periodic ODE `omega Phi' = B(t) Phi`: principal Floquet exponent
//! `h = -omega log mu`, and the small/large diffusion limits built from it.

use serde::Serialize;

use crate::coefficients::{space_mean, FieldSampler, MatrixField};
use crate::error::{Error, Result};
use crate::grid::SpatialGrid;

pub const DEFAULT_STEPS: usize = 4096;
const MAX_STEPS: usize = 1 << 22;

#[derive(Debug, Clone, Serialize)]
pub struct MonodromyResult {
    /// `-omega log mu`
    pub h: f64,
    pub log_multiplier: f64,
    /// Positive Perron vector of the monodromy matrix, unit sup-norm.
    pub eigenvector: Vec<f64>,
    pub steps: usize,
    /// Number of squarings used by the power iteration.
    pub squarings: usize,
    pub residual: f64,
}

/// RK4 steps for a coefficient bounded by `bound`: at least `base`, and
/// enough that `bound / (omega * steps) <= 0.05`.
pub fn steps_for(bound: f64, omega: f64, base: usize) -> usize {
    let mut s = base.max(16);
    while bound / (omega * s as f64) > 0.05 && s < MAX_STEPS {
        s *= 2;
    }
    s
}

/// Integrates `count` independent `n x n` systems at once.
/// `coeff(t, out)` writes `count` row-major matrices.
fn batch_monodromy(
    n: usize,
    count: usize,
    omega: f64,
    steps: usize,
    mut coeff: impl FnMut(f64, &mut [f64]),
) -> (Vec<f64>, Vec<f64>) {
    let nn = n * n;
    let len = count * nn;
    let mut y = vec![0.0; len];
    for c in 0..count {
        for i in 0..n {
            y[c * nn + i * n + i] = 1.0;
        }
    }
    let mut log_scale = vec![0.0; count];
    let dt = 1.0 / steps as f64;
    let (mut a0, mut a1, mut a2) = (vec![0.0; len], vec![0.0; len], vec![0.0; len]);
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len]);
    let rhs = |a: &[f64], y: &[f64], out: &mut [f64]| {
        for c in 0..count {
            let (a, y, o) = (&a[c * nn..(c + 1) * nn], &y[c * nn..(c + 1) * nn], &mut out[c * nn..(c + 1) * nn]);
            for i in 0..n {
                for j in 0..n {
                    o[i * n + j] = (0..n).map(|k| a[i * n + k] * y[k * n + j]).sum::<f64>() / omega;
                }
            }
        }
    };
    coeff(0.0, &mut a0);
    for s in 0..steps {
        let t = s as f64 * dt;
        coeff(t + 0.5 * dt, &mut a1);
        coeff(t + dt, &mut a2);
        rhs(&a0, &y, &mut k1);
        tmp.iter_mut().zip(&y).zip(&k1).for_each(|((o, y), k)| *o = y + 0.5 * dt * k);
        rhs(&a1, &tmp, &mut k2);
        tmp.iter_mut().zip(&y).zip(&k2).for_each(|((o, y), k)| *o = y + 0.5 * dt * k);
        rhs(&a1, &tmp, &mut k3);
        tmp.iter_mut().zip(&y).zip(&k3).for_each(|((o, y), k)| *o = y + dt * k);
        rhs(&a2, &tmp, &mut k4);
        for q in 0..len {
            y[q] += dt / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
        }
        for c in 0..count {
            let blk = &mut y[c * nn..(c + 1) * nn];
            let m = blk.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !(1e-100..=1e100).contains(&m) {
                blk.iter_mut().for_each(|v| *v /= m);
                log_scale[c] += m.ln();
            }
        }
        std::mem::swap(&mut a0, &mut a2);
    }
    (y, log_scale)
}

/// Perron pair of a positive `n x n` matrix by power iteration with repeated squaring.
fn perron_of_monodromy(phi: &[f64], n: usize) -> Result<(f64, Vec<f64>, usize, f64)> {
    let matmul = |a: &[f64], b: &[f64]| -> Vec<f64> {
        let mut o = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                o[i * n + j] = (0..n).map(|k| a[i * n + k] * b[k * n + j]).sum();
            }
        }
        o
    };
    let normalize = |v: &mut [f64]| {
        let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        v.iter_mut().for_each(|x| *x /= m);
    };
    let mut b = phi.to_vec();
    normalize(&mut b);
    let mut v = vec![1.0; n];
    let mut squarings = 0;
    let mut done = false;
    for _ in 0..64 {
        let mut w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| b[i * n + j] * v[j]).sum()).collect();
        normalize(&mut w);
        let change = w.iter().zip(&v).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
        v = w;
        if change <= 1e-15 {
            done = true;
            break;
        }
        b = matmul(&b, &b);
        normalize(&mut b);
        squarings += 1;
    }
    if !done {
        return Err(Error::Convergence { iterations: squarings, increment: f64::NAN });
    }
    let pv: Vec<f64> = (0..n).map(|i| (0..n).map(|j| phi[i * n + j] * v[j]).sum()).collect();
    let imax = (0..n).fold(0, |b, i| if v[i] > v[b] { i } else { b });
    let mu = pv[imax] / v[imax];
    let scale = phi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let residual = pv.iter().zip(&v).map(|(a, c)| (a - mu * c).abs()).fold(0.0, f64::max) / scale;
    if !(mu > 0.0) {
        return Err(Error::Positivity(format!("monodromy multiplier {mu:e} is not positive")));
    }
    Ok((mu, v, squarings, residual))
}

/// Principal Floquet exponent of `omega Phi' = B(t) Phi` on the unit period.
/// `coeff(t, out)` writes `B(t)` row-major.
pub fn ode_eigenvalue(
    n: usize,
    coeff: impl FnMut(f64, &mut [f64]),
    omega: f64,
    steps: usize,
) -> Result<MonodromyResult> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::Invalid(format!("omega must be positive, got {omega}")));
    }
    if steps < 4 {
        return Err(Error::Invalid(format!("need at least 4 steps, got {steps}")));
    }
    let (phi, log_scale) = batch_monodromy(n, 1, omega, steps, coeff);
    let (mu, v, squarings, residual) = perron_of_monodromy(&phi, n)?;
    let log_multiplier = mu.ln() + log_scale[0];
    Ok(MonodromyResult { h: -omega * log_multiplier, log_multiplier, eigenvector: v, steps, squarings, residual })
}

fn coefficient_bound(sampler: &FieldSampler, n: usize) -> f64 {
    let mut buf = vec![0.0; sampler.nodes() * n * n];
    let mut bound = 0.0f64;
    for m in 0..32 {
        sampler.eval_nodes(m as f64 / 32.0, &mut buf);
        for k in 0..sampler.nodes() {
            let blk = &buf[k * n * n..(k + 1) * n * n];
            for i in 0..n {
                bound = bound.max((0..n).map(|j| blk[i * n + j].abs()).sum());
            }
        }
    }
    bound
}

#[derive(Debug, Clone, Serialize)]
pub struct HUnder {
    /// `min_x h(x, omega)`
    pub value: f64,
    /// Nodes within `1e-9` of the minimum.
    pub argmin: Vec<usize>,
    pub per_node: Vec<f64>,
    pub steps: usize,
}

/// `h_under(omega) = min_x h(x, omega)`, the small-diffusion limit.
pub fn h_under(field: &MatrixField, grid: &SpatialGrid, omega: f64, base_steps: usize) -> Result<HUnder> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::Invalid(format!("omega must be positive, got {omega}")));
    }
    let n = field.n();
    let nn = n * n;
    let sampler = field.sampler(grid);
    let steps = steps_for(coefficient_bound(&sampler, n), omega, base_steps);
    let nodes = grid.nodes();
    let (phi, log_scale) = batch_monodromy(n, nodes, omega, steps, |t, out| sampler.eval_nodes(t, out));
    let mut per_node = Vec::with_capacity(nodes);
    for k in 0..nodes {
        let (mu, _, _, _) = perron_of_monodromy(&phi[k * nn..(k + 1) * nn], n)?;
        per_node.push(-omega * (mu.ln() + log_scale[k]));
    }
    let value = per_node.iter().copied().fold(f64::INFINITY, f64::min);
    let argmin = (0..nodes).filter(|&k| per_node[k] <= value + 1e-9).collect();
    Ok(HUnder { value, argmin, per_node, steps })
}

/// `h_bar(omega)`: Floquet exponent of the space-averaged system, the large-diffusion limit.
pub fn h_bar(field: &MatrixField, grid: &SpatialGrid, omega: f64, base_steps: usize) -> Result<MonodromyResult> {
    let n = field.n();
    let sampler = field.sampler(grid);
    let steps = steps_for(coefficient_bound(&sampler, n), omega, base_steps);
    let mut buf = vec![0.0; grid.nodes() * n * n];
    ode_eigenvalue(
        n,
        |t, out| {
            sampler.eval_nodes(t, &mut buf);
            out.copy_from_slice(&space_mean(&buf, n, grid));
        },
        omega,
        steps,
    )
}

/// Solves `f(w) = target` for nondecreasing `f` by bisection on `[lo, hi]`.
/// Stops when `|f - target| <= 1e-8` or the bracket is narrower than `1e-10 * hi`.
pub fn invert_monotone(mut f: impl FnMut(f64) -> Result<f64>, target: f64, lo: f64, hi: f64) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::Invalid(format!("empty bracket [{lo}, {hi}]")));
    }
    let (mut a, mut b) = (lo, hi);
    let mid = 0.5 * (a + b);
    let fm = f(mid)?;
    if (fm - target).abs() <= 1e-8 {
        return Ok(mid);
    }
    let (fa, fb) = (f(a)?, f(b)?);
    if fa > target + 1e-8 || fb < target - 1e-8 {
        return Err(Error::Bracket { lo, hi, target });
    }
    if fm < target {
        a = mid;
    } else {
        b = mid;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let v = f(m)?;
        if (v - target).abs() <= 1e-8 || b - a <= 1e-10 * hi {
            return Ok(m);
        }
        if v < target {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{CoefficientEntry, FourierTerm, TimeMode};

    #[test]
    fn constant_matrix_exponent() {
        let r = ode_eigenvalue(2, |_, o| o.copy_from_slice(&[0.0, 1.0, 1.0, 0.0]), 1.0, DEFAULT_STEPS).unwrap();
        assert!((r.h + 1.0).abs() < 1e-10);
        assert!((r.eigenvector[0] - r.eigenvector[1]).abs() < 1e-12);
        for omega in [0.5, 3.0] {
            let r = ode_eigenvalue(2, |_, o| o.copy_from_slice(&[0.0, 1.0, 1.0, 0.0]), omega, DEFAULT_STEPS).unwrap();
            assert!((r.h + 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn scalar_exponent_is_minus_mean() {
        let r = ode_eigenvalue(1, |t, o| o[0] = (2.0 * std::f64::consts::PI * t).cos(), 1.0, DEFAULT_STEPS).unwrap();
        assert!(r.h.abs() < 1e-10);
        let r = ode_eigenvalue(1, |t, o| o[0] = 0.7 + (2.0 * std::f64::consts::PI * t).sin(), 1e-3, 1 << 16).unwrap();
        assert!((r.h + 0.7).abs() < 1e-8);
    }

    #[test]
    fn h_under_of_time_independent_field() {
        let g = SpatialGrid::new(1.0, 21).unwrap();
        let mut f = MatrixField::new(1, 1.0).unwrap();
        f.set_entry(0, 0, CoefficientEntry::fourier(vec![FourierTerm::new(1.0, 1, TimeMode::Constant)])).unwrap();
        let h = h_under(&f, &g, 2.0, 256).unwrap();
        assert!((h.value + 1.0).abs() < 1e-10);
        assert_eq!(h.argmin, vec![0]);
        let b = h_bar(&f, &g, 2.0, 256).unwrap();
        assert!(b.h.abs() < 1e-10);
    }

    #[test]
    fn inversion() {
        let w = invert_monotone(Ok, 0.5, 0.0, 1.0).unwrap();
        assert!((w - 0.5).abs() < 1e-8);
        let w = invert_monotone(|w| Ok(w * w), 0.3, 0.0, 2.0).unwrap();
        assert!((w - 0.3f64.sqrt()).abs() < 1e-7);
        let w = invert_monotone(|_| Ok(0.2), 0.2, 1.0, 3.0).unwrap();
        assert_eq!(w, 2.0);
        assert!(matches!(invert_monotone(Ok, 5.0, 0.0, 1.0), Err(Error::Bracket { .. })));
    }
}
