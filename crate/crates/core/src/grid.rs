//! Uniform space and time grids, the mirror-Neumann Laplacian and trapezoid quadrature.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid of `nodes` points on `[0, length]`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    length: f64,
    nodes: usize,
}

impl SpatialGrid {
    pub fn new(length: f64, nodes: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Invalid(format!("domain length must be positive, got {length}")));
        }
        if nodes < 3 {
            return Err(Error::Invalid(format!("need at least 3 nodes, got {nodes}")));
        }
        Ok(Self { length, nodes })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn spacing(&self) -> f64 {
        self.length / (self.nodes - 1) as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.length * j as f64 / (self.nodes - 1) as f64
    }

    /// Trapezoid weights; they sum to the domain length.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let mut w = vec![h; self.nodes];
        w[0] = 0.5 * h;
        w[self.nodes - 1] = 0.5 * h;
        w
    }

    /// Same domain with `2(N-1)+1` nodes.
    pub fn refined(&self) -> Self {
        Self { length: self.length, nodes: 2 * (self.nodes - 1) + 1 }
    }
}

/// Uniform grid of `steps` intervals on the unit period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    steps: usize,
}

impl TimeGrid {
    pub fn new(steps: usize) -> Result<Self> {
        if steps < 2 {
            return Err(Error::Invalid(format!("need at least 2 time steps, got {steps}")));
        }
        Ok(Self { steps })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.steps as f64
    }

    pub fn t(&self, m: usize) -> f64 {
        m as f64 / self.steps as f64
    }
}

/// `n` components sampled on the spatial nodes, stored component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    components: usize,
    nodes: usize,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(components: usize, nodes: usize) -> Self {
        Self { components, nodes, values: vec![0.0; components * nodes] }
    }

    pub fn from_values(components: usize, nodes: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != components * nodes {
            return Err(Error::Dimension(format!(
                "expected {} values for {components} x {nodes}, got {}",
                components * nodes,
                values.len()
            )));
        }
        Ok(Self { components, nodes, values })
    }

    pub fn from_fn(components: usize, grid: &SpatialGrid, f: impl Fn(usize, f64) -> f64) -> Self {
        let nodes = grid.nodes();
        let mut values = Vec::with_capacity(components * nodes);
        for i in 0..components {
            for j in 0..nodes {
                values.push(f(i, grid.x(j)));
            }
        }
        Self { components, nodes, values }
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.nodes + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.nodes + j] = v;
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.values[i * self.nodes..(i + 1) * self.nodes]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.nodes..(i + 1) * self.nodes]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn check_grid(&self, grid: &SpatialGrid) -> Result<()> {
        if self.nodes != grid.nodes() {
            return Err(Error::Dimension(format!(
                "grid function has {} nodes, grid has {}",
                self.nodes,
                grid.nodes()
            )));
        }
        Ok(())
    }
}

/// Second difference with mirror ghost nodes `f[-1] = f[1]`, `f[N] = f[N-2]`.
pub fn neumann_laplacian(f: &GridFunction, grid: &SpatialGrid) -> Result<GridFunction> {
    f.check_grid(grid)?;
    let mut out = GridFunction::zeros(f.components, f.nodes);
    for i in 0..f.components {
        laplacian_into(f.component(i), grid.spacing(), out.component_mut(i));
    }
    Ok(out)
}

pub(crate) fn laplacian_into(f: &[f64], h: f64, out: &mut [f64]) {
    let n = f.len();
    let s = 1.0 / (h * h);
    out[0] = 2.0 * (f[1] - f[0]) * s;
    for j in 1..n - 1 {
        out[j] = (f[j + 1] - 2.0 * f[j] + f[j - 1]) * s;
    }
    out[n - 1] = 2.0 * (f[n - 2] - f[n - 1]) * s;
}

/// Central differences; zero at the two boundary nodes.
pub fn gradient_central(f: &GridFunction, grid: &SpatialGrid) -> Result<GridFunction> {
    f.check_grid(grid)?;
    let mut out = GridFunction::zeros(f.components, f.nodes);
    for i in 0..f.components {
        gradient_into(f.component(i), grid.spacing(), out.component_mut(i));
    }
    Ok(out)
}

pub(crate) fn gradient_into(f: &[f64], h: f64, out: &mut [f64]) {
    let n = f.len();
    out[0] = 0.0;
    out[n - 1] = 0.0;
    for j in 1..n - 1 {
        out[j] = (f[j + 1] - f[j - 1]) / (2.0 * h);
    }
}

/// Trapezoid integral of each component over the domain.
pub fn integrate_space(f: &GridFunction, grid: &SpatialGrid) -> Result<Vec<f64>> {
    f.check_grid(grid)?;
    Ok((0..f.components).map(|i| trapezoid(f.component(i), grid.spacing())).collect())
}

pub(crate) fn trapezoid(f: &[f64], h: f64) -> f64 {
    let n = f.len();
    let inner: f64 = f[1..n - 1].iter().sum();
    h * (inner + 0.5 * (f[0] + f[n - 1]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeIntegral {
    pub value: f64,
    /// `|s_M - s_0|`
    pub periodicity_defect: f64,
    pub periodic: bool,
}

/// Trapezoid rule over the `M + 1` samples `t_0 .. t_M` of one unit period.
pub fn integrate_time(samples: &[f64]) -> Result<TimeIntegral> {
    if samples.len() < 3 {
        return Err(Error::Dimension(format!("need at least 3 time samples, got {}", samples.len())));
    }
    let steps = samples.len() - 1;
    let value = trapezoid(samples, 1.0 / steps as f64);
    let scale = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let defect = (samples[steps] - samples[0]).abs();
    Ok(TimeIntegral { value, periodicity_defect: defect, periodic: defect <= 1e-8 * (1.0 + scale) })
}

/// Exact semigroup of the mirror-Neumann Laplacian, diagonalized by DCT-I.
///
/// Two real vectors are transformed at once through the real and imaginary
/// parts of one complex FFT of length `2(N-1)`: both even extensions have
/// real spectra, so the parts separate exactly.
pub struct NeumannHeat {
    nodes: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Laplacian eigenvalue attached to each FFT bin.
    symbol: Vec<f64>,
    buf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl NeumannHeat {
    pub fn new(grid: &SpatialGrid) -> Self {
        let nodes = grid.nodes();
        let len = 2 * (nodes - 1);
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(len);
        let inv = planner.plan_fft_inverse(len);
        let h = grid.spacing();
        let symbol = (0..len)
            .map(|k| {
                let s = (std::f64::consts::PI * k as f64 / len as f64).sin();
                -4.0 / (h * h) * s * s
            })
            .collect();
        let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        Self {
            nodes,
            fwd,
            inv,
            symbol,
            buf: vec![Complex::new(0.0, 0.0); len],
            scratch: vec![Complex::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// Per-bin multipliers `exp(s * kappa_k)`.
    pub fn multipliers(&self, s: f64) -> Vec<f64> {
        self.symbol.iter().map(|k| (s * k).exp()).collect()
    }

    /// `x <- exp(sx Lap) x`, `y <- exp(sy Lap) y` given precomputed multipliers.
    pub fn apply_pair(&mut self, x: &mut [f64], mx: &[f64], y: &mut [f64], my: &[f64]) {
        let n = self.nodes;
        let len = self.buf.len();
        for j in 0..n {
            self.buf[j] = Complex::new(x[j], y[j]);
        }
        for j in 1..n - 1 {
            self.buf[len - j] = self.buf[j];
        }
        self.fwd.process_with_scratch(&mut self.buf, &mut self.scratch);
        let norm = 1.0 / len as f64;
        for k in 0..len {
            let z = self.buf[k];
            self.buf[k] = Complex::new(z.re * mx[k] * norm, z.im * my[k] * norm);
        }
        self.inv.process_with_scratch(&mut self.buf, &mut self.scratch);
        for j in 0..n {
            x[j] = self.buf[j].re;
            y[j] = self.buf[j].im;
        }
    }

    pub fn apply(&mut self, x: &mut [f64], mx: &[f64]) {
        let n = self.nodes;
        let mut y = vec![0.0; n];
        self.apply_pair(x, mx, &mut y, mx);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_of_square() {
        let g = SpatialGrid::new(1.0, 11).unwrap();
        let f = GridFunction::from_fn(1, &g, |_, x| x * x);
        let l = neumann_laplacian(&f, &g).unwrap();
        for j in 1..10 {
            assert!((l.get(0, j) - 2.0).abs() < 1e-10);
        }
        // mirror ghosts: 2(f1 - f0)/h^2 and 2(f_{N-2} - f_{N-1})/h^2
        assert!((l.get(0, 0) - 2.0).abs() < 1e-10);
        assert!((l.get(0, 10) + 38.0).abs() < 1e-9);
    }

    #[test]
    fn cosine_is_eigenvector() {
        let g = SpatialGrid::new(1.0, 101).unwrap();
        let f = GridFunction::from_fn(1, &g, |_, x| (std::f64::consts::PI * x).cos());
        let l = neumann_laplacian(&f, &g).unwrap();
        let h = g.spacing();
        let ev = -4.0 / (h * h) * (std::f64::consts::PI * h / 2.0).sin().powi(2);
        for j in 0..101 {
            assert!((l.get(0, j) - ev * f.get(0, j)).abs() < 1e-9);
        }
        assert!((ev + std::f64::consts::PI.powi(2)).abs() < 1e-3);
    }

    #[test]
    fn trapezoid_integrals() {
        let g = SpatialGrid::new(2.0, 21).unwrap();
        let one = GridFunction::from_fn(1, &g, |_, _| 1.0);
        assert!((integrate_space(&one, &g).unwrap()[0] - 2.0).abs() < 1e-14);
        let s: Vec<f64> = (0..=64).map(|m| (2.0 * std::f64::consts::PI * m as f64 / 64.0).cos()).collect();
        let r = integrate_time(&s).unwrap();
        assert!(r.value.abs() < 1e-14 && r.periodic);
        let bad: Vec<f64> = (0..=64).map(|m| m as f64).collect();
        assert!(!integrate_time(&bad).unwrap().periodic);
    }

    #[test]
    fn heat_matches_mode_decay() {
        let g = SpatialGrid::new(1.0, 51).unwrap();
        let mut heat = NeumannHeat::new(&g);
        let h = g.spacing();
        let k = 3.0;
        let ev = -4.0 / (h * h) * (std::f64::consts::PI * k * h / 2.0).sin().powi(2);
        let mut x: Vec<f64> = (0..51).map(|j| (std::f64::consts::PI * k * g.x(j)).cos()).collect();
        let mut y: Vec<f64> = vec![1.0; 51];
        let m = heat.multipliers(0.01);
        let x0 = x.clone();
        heat.apply_pair(&mut x, &m, &mut y, &m);
        for j in 0..51 {
            assert!((x[j] - (0.01 * ev).exp() * x0[j]).abs() < 1e-13);
            assert!((y[j] - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn gradient_zero_at_ends() {
        let g = SpatialGrid::new(1.0, 11).unwrap();
        let f = GridFunction::from_fn(2, &g, |i, x| (i + 1) as f64 * x);
        let d = gradient_central(&f, &g).unwrap();
        assert_eq!(d.get(0, 0), 0.0);
        assert!((d.get(1, 5) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_mismatched_grid() {
        let g = SpatialGrid::new(1.0, 11).unwrap();
        let f = GridFunction::zeros(1, 12);
        assert!(matches!(neumann_laplacian(&f, &g), Err(Error::Dimension(_))));
    }
}
