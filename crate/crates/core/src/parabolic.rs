//! Principal eigenpair of `omega d_t phi - rho D Lap phi - A phi = lambda phi`,
//! periodic in `t`, Neumann in `x`.
//!
//! One time step of the period map is Strang splitting
//! `R(t_m + tau/2, t_{m+1}) H(tau) R(t_m, t_m + tau/2)` where `H` is the exact
//! semigroup of the discrete Neumann Laplacian (DCT-I) and `R` is the node-wise
//! exponential of `(1/omega) int A dt`. Both factors are entrywise positive.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::coefficients::{DiffusionMatrix, FieldSampler, MatrixField};
use crate::error::{Error, Result};
use crate::grid::{trapezoid, GridFunction, NeumannHeat, SpatialGrid, TimeGrid};
use crate::linalg::sym_exp;

/// Largest cached propagator table, in doubles.
const CACHE_LIMIT: usize = 1 << 23;

/// Values on the space-time grid, `values[(m * n + i) * nodes + j]`, `m = 0..=steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    pub n: usize,
    pub nodes: usize,
    pub steps: usize,
    pub values: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(n: usize, nodes: usize, steps: usize) -> Self {
        Self { n, nodes, steps, values: vec![0.0; n * nodes * (steps + 1)] }
    }

    pub fn get(&self, i: usize, j: usize, m: usize) -> f64 {
        self.values[(m * self.n + i) * self.nodes + j]
    }

    pub fn slice(&self, m: usize) -> &[f64] {
        let s = self.n * self.nodes;
        &self.values[m * s..(m + 1) * s]
    }

    pub fn slice_mut(&mut self, m: usize) -> &mut [f64] {
        let s = self.n * self.nodes;
        &mut self.values[m * s..(m + 1) * s]
    }

    pub fn at_time(&self, m: usize) -> GridFunction {
        GridFunction::from_values(self.n, self.nodes, self.slice(m).to_vec()).expect("consistent sizes")
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `int_0^1 int_Omega f^T g dx dt` with trapezoid weights.
    pub fn pairing(&self, other: &Self, grid: &SpatialGrid) -> f64 {
        let h = grid.spacing();
        let mut rows = Vec::with_capacity(self.steps + 1);
        for m in 0..=self.steps {
            let mut acc = 0.0;
            for i in 0..self.n {
                let a = &self.slice(m)[i * self.nodes..(i + 1) * self.nodes];
                let b = &other.slice(m)[i * self.nodes..(i + 1) * self.nodes];
                let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
                acc += trapezoid(&prod, h);
            }
            rows.push(acc);
        }
        trapezoid(&rows, 1.0 / self.steps as f64)
    }
}

enum Reaction {
    /// `2 * steps` propagators per node: first and second half of each step.
    Cached(Vec<f64>),
    OnTheFly(FieldSampler),
}

/// Discrete period map for fixed `(omega, rho)`.
pub struct PeriodMap {
    n: usize,
    nodes: usize,
    steps: usize,
    omega: f64,
    heat: NeumannHeat,
    multipliers: Vec<Vec<f64>>,
    reaction: Reaction,
    scratch: Vec<f64>,
}

impl PeriodMap {
    pub fn new(
        field: &MatrixField,
        diffusion: &DiffusionMatrix,
        grid: &SpatialGrid,
        steps: usize,
        omega: f64,
        rho: f64,
    ) -> Result<Self> {
        let n = field.n();
        if diffusion.len() != n {
            return Err(Error::Dimension(format!("{} diffusion rates for {n} components", diffusion.len())));
        }
        if (field.length() - grid.length()).abs() > 1e-12 * grid.length() {
            return Err(Error::Dimension(format!(
                "field domain length {} differs from grid length {}",
                field.length(),
                grid.length()
            )));
        }
        check_parameters(omega, rho)?;
        if steps < 2 {
            return Err(Error::Invalid(format!("need at least 2 time steps, got {steps}")));
        }
        let nodes = grid.nodes();
        let tau = 1.0 / steps as f64;
        let heat = NeumannHeat::new(grid);
        let multipliers = diffusion.rates().iter().map(|d| heat.multipliers(rho * d * tau / omega)).collect();
        let sampler = field.sampler(grid);
        let nn = n * n;
        let reaction = if 2 * steps * nodes * nn <= CACHE_LIMIT {
            let mut table = vec![0.0; 2 * steps * nodes * nn];
            let mut buf = vec![0.0; nodes * nn];
            for m in 0..steps {
                for half in 0..2 {
                    let a = (m as f64 + 0.5 * half as f64) * tau;
                    let off = (2 * m + half) * nodes * nn;
                    reaction_block(&sampler, a, a + 0.5 * tau, omega, &mut buf, &mut table[off..off + nodes * nn]);
                }
            }
            Reaction::Cached(table)
        } else {
            Reaction::OnTheFly(sampler)
        };
        Ok(Self { n, nodes, steps, omega, heat, multipliers, reaction, scratch: vec![0.0; 2 * nodes * nn] })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn size(&self) -> usize {
        self.n * self.nodes
    }

    /// Advances `cols` stacked states (`[col][comp][node]`) over one period.
    /// States are rescaled by a common factor after each step; the log of the
    /// total factor removed is returned. `record(m, state, log_scale)` is
    /// called at every step boundary `m = 0..=steps`.
    pub fn advance(
        &mut self,
        state: &mut [f64],
        cols: usize,
        mut record: impl FnMut(usize, &[f64], f64),
    ) -> Result<f64> {
        let size = self.size();
        debug_assert_eq!(state.len(), size * cols);
        let nn = self.n * self.nodes * self.n;
        let tau = 1.0 / self.steps as f64;
        let mut log_scale = 0.0;
        record(0, state, 0.0);
        let mut prev_sup = sup(state);
        if !(prev_sup > 0.0 && prev_sup.is_finite()) {
            return Err(Error::Invalid("initial state is zero or not finite".into()));
        }
        for m in 0..self.steps {
            for half in 0..2 {
                let off = match &self.reaction {
                    Reaction::Cached(_) => (2 * m + half) * nn,
                    Reaction::OnTheFly(sampler) => {
                        let a = (m as f64 + 0.5 * half as f64) * tau;
                        let (buf, out) = self.scratch.split_at_mut(nn);
                        reaction_block(sampler, a, a + 0.5 * tau, self.omega, buf, out);
                        nn
                    }
                };
                let props = match &self.reaction {
                    Reaction::Cached(t) => &t[off..off + nn],
                    Reaction::OnTheFly(_) => &self.scratch[off..off + nn],
                };
                apply_reaction(props, self.n, self.nodes, state, cols);
                if half == 0 {
                    diffuse(&mut self.heat, &self.multipliers, self.n, self.nodes, state, cols);
                }
            }
            let s = sup(state);
            if !(s.is_finite()) || s > 1e10 * prev_sup || s == 0.0 {
                return Err(Error::StepSize(format!(
                    "sup-norm jumped from {prev_sup:e} to {s:e} in step {m}; refine the time grid"
                )));
            }
            state.iter_mut().for_each(|v| *v /= s);
            log_scale += s.ln();
            prev_sup = 1.0;
            record(m + 1, state, log_scale);
        }
        Ok(log_scale)
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn reaction_block(sampler: &FieldSampler, a: f64, b: f64, omega: f64, buf: &mut [f64], out: &mut [f64]) {
    let n = sampler.n();
    let nn = n * n;
    sampler.integrate_nodes(a, b, buf);
    for k in 0..sampler.nodes() {
        let blk = &mut buf[k * nn..(k + 1) * nn];
        blk.iter_mut().for_each(|v| *v /= omega);
        sym_exp(blk, n, &mut out[k * nn..(k + 1) * nn]);
    }
}

fn apply_reaction(props: &[f64], n: usize, nodes: usize, state: &mut [f64], cols: usize) {
    let nn = n * n;
    let size = n * nodes;
    match n {
        1 => {
            for c in 0..cols {
                let s = &mut state[c * size..(c + 1) * size];
                s.iter_mut().zip(props).for_each(|(v, r)| *v *= r);
            }
        }
        2 => {
            for c in 0..cols {
                let (u0, u1) = state[c * size..(c + 1) * size].split_at_mut(nodes);
                for k in 0..nodes {
                    let r = &props[k * 4..k * 4 + 4];
                    let (a, b) = (u0[k], u1[k]);
                    u0[k] = r[0] * a + r[1] * b;
                    u1[k] = r[2] * a + r[3] * b;
                }
            }
        }
        _ => {
            let mut tmp = vec![0.0; n];
            for c in 0..cols {
                let s = &mut state[c * size..(c + 1) * size];
                for k in 0..nodes {
                    let r = &props[k * nn..(k + 1) * nn];
                    for i in 0..n {
                        tmp[i] = (0..n).map(|j| r[i * n + j] * s[j * nodes + k]).sum();
                    }
                    for i in 0..n {
                        s[i * nodes + k] = tmp[i];
                    }
                }
            }
        }
    }
}

fn diffuse(heat: &mut NeumannHeat, mult: &[Vec<f64>], n: usize, nodes: usize, state: &mut [f64], cols: usize) {
    let total = n * cols;
    let mut v = 0;
    while v < total {
        if v + 1 < total {
            let (a, b) = state[v * nodes..(v + 2) * nodes].split_at_mut(nodes);
            heat.apply_pair(a, &mult[v % n], b, &mult[(v + 1) % n]);
            v += 2;
        } else {
            heat.apply(&mut state[v * nodes..(v + 1) * nodes], &mult[v % n]);
            v += 1;
        }
    }
}

pub(crate) fn check_parameters(omega: f64, rho: f64) -> Result<()> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::Invalid(format!("omega must be positive and finite, got {omega}")));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Invalid(format!("rho must be positive and finite, got {rho}")));
    }
    Ok(())
}

/// One period of the map with every intermediate state.
pub fn apply_period_map(map: &mut PeriodMap, u0: &GridFunction) -> Result<(GridFunction, SpaceTimeField)> {
    if u0.components() * u0.nodes() != map.size() {
        return Err(Error::Dimension(format!("state has {} values, map expects {}", u0.values().len(), map.size())));
    }
    let (n, nodes, steps) = (u0.components(), u0.nodes(), map.steps());
    let mut traj = SpaceTimeField::zeros(n, nodes, steps);
    let mut logs = vec![0.0; steps + 1];
    let mut state = u0.values().to_vec();
    map.advance(&mut state, 1, |m, s, l| {
        traj.slice_mut(m).copy_from_slice(s);
        logs[m] = l;
    })?;
    for m in 0..=steps {
        let f = logs[m].exp();
        traj.slice_mut(m).iter_mut().for_each(|v| *v *= f);
    }
    let u1 = traj.at_time(steps);
    Ok((u1, traj))
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Stop when the relative change of the multiplier and its extrapolated
    /// remainder are both below this.
    pub tol: f64,
    pub max_cycles: usize,
    /// Assemble the space-time eigenfunction.
    pub eigenfunction: bool,
    pub warm_start: Option<Vec<f64>>,
    /// Largest physical time step `1 / (omega M)` before `M` is doubled.
    pub max_physical_step: f64,
    pub max_steps: usize,
    /// Assemble the monodromy matrix when power iteration would be slow.
    pub dense_fallback: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_cycles: 10_000,
            eigenfunction: true,
            warm_start: None,
            max_physical_step: 0.05,
            max_steps: 1 << 15,
            dense_fallback: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Confidence {
    Converged,
    /// Parameters outside `[1e-3, 1e3]`.
    LowConfidence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    PowerIteration,
    Krylov,
    Monodromy,
}

#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub lambda: f64,
    pub omega: f64,
    pub rho: f64,
    /// `log` of the principal multiplier of the period map.
    pub log_multiplier: f64,
    pub iterations: usize,
    pub last_increment: f64,
    pub method: Method,
    /// Steps per period actually used.
    pub steps_used: usize,
    pub confidence: Confidence,
    /// Sup-normalized positive eigenvector at `t = 0`.
    pub vector: Vec<f64>,
    /// Sup-normalized eigenfunction on the requested time grid.
    pub eigenfunction: Option<SpaceTimeField>,
    pub periodicity_defect: f64,
}

/// Steps per period for given `omega`: `base` doubled while the physical step is too long.
pub fn steps_for(omega: f64, base: usize, opts: &SolveOptions) -> usize {
    let mut m = base;
    while 1.0 / (omega * m as f64) > opts.max_physical_step && m < opts.max_steps {
        m *= 2;
    }
    m
}

pub fn principal_eigenvalue(
    field: &MatrixField,
    diffusion: &DiffusionMatrix,
    grid: &SpatialGrid,
    time: &TimeGrid,
    omega: f64,
    rho: f64,
    opts: &SolveOptions,
) -> Result<SpectralResult> {
    check_parameters(omega, rho)?;
    let steps = steps_for(omega, time.steps(), opts);
    let mut map = PeriodMap::new(field, diffusion, grid, steps, omega, rho)?;
    let size = map.size();
    let mut v = match &opts.warm_start {
        Some(w) if w.len() == size && w.iter().all(|x| *x > 0.0 && x.is_finite()) => w.clone(),
        _ => vec![1.0; size],
    };
    let s = sup(&v);
    v.iter_mut().for_each(|x| *x /= s);

    let mut log_mu = f64::NAN;
    let mut increments: Vec<f64> = Vec::new();
    let mut iterations = 0;
    let mut method = Method::PowerIteration;
    let mut converged = false;
    while iterations < opts.max_cycles {
        iterations += 1;
        let mut w = v.clone();
        let l = map.advance(&mut w, 1, |_, _, _| {})?;
        check_positive(&w)?;
        let s = sup(&w);
        w.iter_mut().for_each(|x| *x /= s);
        let next = l + s.ln();
        if log_mu.is_finite() {
            increments.push(next - log_mu);
        }
        log_mu = next;
        v = w;
        let k = increments.len();
        if k >= 3 {
            let d = increments[k - 1].abs();
            let ratio = (0..2)
                .map(|q| increments[k - 1 - q].abs() / increments[k - 2 - q].abs().max(f64::MIN_POSITIVE))
                .fold(0.0f64, f64::max);
            let remainder = if ratio < 1.0 { d * ratio / (1.0 - ratio) } else { f64::INFINITY };
            if d <= opts.tol && remainder <= opts.tol {
                converged = true;
                break;
            }
            if opts.dense_fallback && k >= 6 {
                let predicted = if ratio < 1.0 && d > 0.0 {
                    (opts.tol / d).ln() / ratio.ln()
                } else {
                    f64::INFINITY
                };
                if predicted > KRYLOV_SWITCH {
                    let (lm, vec, m) = match krylov_eigen(&mut map, &v, log_mu, opts.tol) {
                        Ok((lm, vec)) => (lm, vec, Method::Krylov),
                        Err(_) => {
                            let (lm, vec) = monodromy_eigen(&mut map, &v)?;
                            (lm, vec, Method::Monodromy)
                        }
                    };
                    log_mu = lm;
                    v = vec;
                    method = m;
                    converged = true;
                    break;
                }
            }
        }
    }
    let last_increment = increments.last().copied().unwrap_or(f64::NAN);
    if !converged {
        return Err(Error::Convergence { iterations, increment: last_increment });
    }
    let lambda = -omega * log_mu;
    let (eigenfunction, periodicity_defect) = if opts.eigenfunction {
        let (phi, defect) = eigenfunction_from(&mut map, &v, lambda, time.steps())?;
        (Some(phi), defect)
    } else {
        (None, f64::NAN)
    };
    let in_range = |p: f64| (1e-3..=1e3).contains(&p);
    Ok(SpectralResult {
        lambda,
        omega,
        rho,
        log_multiplier: log_mu,
        iterations,
        last_increment,
        method,
        steps_used: steps,
        confidence: if in_range(omega) && in_range(rho) { Confidence::Converged } else { Confidence::LowConfidence },
        vector: v,
        eigenfunction,
        periodicity_defect,
    })
}

fn check_positive(w: &[f64]) -> Result<()> {
    let s = sup(w);
    let lo = w.iter().copied().fold(f64::INFINITY, f64::min);
    if lo < -1e-10 * s {
        return Err(Error::Positivity(format!("entry {lo:e} against sup {s:e}")));
    }
    Ok(())
}

/// Predicted power-iteration cycles beyond which Arnoldi takes over.
const KRYLOV_SWITCH: f64 = 40.0;
const KRYLOV_DIM: usize = 30;

/// Restarted Arnoldi on `exp(-shift) P`, restarted from the Perron Ritz vector.
/// Returns `log mu` and the sup-normalized eigenvector.
fn krylov_eigen(map: &mut PeriodMap, start: &[f64], shift: f64, tol: f64) -> Result<(f64, Vec<f64>)> {
    let size = map.size();
    let dim = KRYLOV_DIM.min(size - 1);
    let mut x = start.to_vec();
    let mut apply = |v: &[f64]| -> Result<Vec<f64>> {
        let mut w = v.to_vec();
        let l = map.advance(&mut w, 1, |_, _, _| {})?;
        let f = (l - shift).exp();
        w.iter_mut().for_each(|a| *a *= f);
        Ok(w)
    };
    let mut last = f64::NAN;
    for _restart in 0..40 {
        let nrm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        let mut basis: Vec<Vec<f64>> = vec![x.iter().map(|a| a / nrm).collect()];
        let mut hess = DMatrix::<f64>::zeros(dim + 1, dim);
        let mut m = dim;
        for j in 0..dim {
            let mut w = apply(&basis[j])?;
            for _pass in 0..2 {
                for (i, b) in basis.iter().enumerate() {
                    let c: f64 = w.iter().zip(b).map(|(a, b)| a * b).sum();
                    hess[(i, j)] += c;
                    w.iter_mut().zip(b).for_each(|(a, b)| *a -= c * b);
                }
            }
            let beta = w.iter().map(|a| a * a).sum::<f64>().sqrt();
            hess[(j + 1, j)] = beta;
            if beta <= 1e-14 * hess[(j, j)].abs().max(1e-300) {
                m = j + 1;
                break;
            }
            w.iter_mut().for_each(|a| *a /= beta);
            basis.push(w);
        }
        let h = hess.view((0, 0), (m, m)).into_owned();
        let theta = h
            .complex_eigenvalues()
            .iter()
            .filter(|z| z.im.abs() <= 1e-10 * z.norm())
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        if !(theta > 0.0) {
            return Err(Error::Convergence { iterations: m, increment: theta });
        }
        // Ritz vector by inverse iteration on the small Hessenberg matrix
        let mut shifted = h.clone();
        for i in 0..m {
            shifted[(i, i)] -= theta * (1.0 + 1e-13);
        }
        let lu = shifted.lu();
        let mut y = nalgebra::DVector::from_element(m, 1.0);
        for _ in 0..3 {
            y = lu.solve(&y).ok_or_else(|| Error::Factorization("Ritz system singular".into()))?;
            let s = y.norm();
            y /= s;
        }
        let resid = (hess[(m, m - 1)] * y[m - 1]).abs();
        x = vec![0.0; size];
        for (k, b) in basis.iter().take(m).enumerate() {
            x.iter_mut().zip(b).for_each(|(a, b)| *a += y[k] * b);
        }
        if x.iter().sum::<f64>() < 0.0 {
            x.iter_mut().for_each(|a| *a = -*a);
        }
        let change = (theta - last).abs() / theta;
        last = theta;
        if resid <= 1e-3 * tol * theta || (resid <= tol * theta && change <= 1e-3 * tol) {
            let s = sup(&x);
            let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
            if lo < -1e-8 * s {
                return Err(Error::Positivity(format!("Ritz vector entry {lo:e} against sup {s:e}")));
            }
            let v: Vec<f64> = x.iter().map(|a| (a / s).max(0.0)).collect();
            return Ok((theta.ln() + shift, v));
        }
    }
    Err(Error::Convergence { iterations: 40 * dim, increment: last })
}

/// Assembles the period map explicitly and finds its Perron pair by shifted
/// inverse iteration with Collatz-Wielandt shifts.
fn monodromy_eigen(map: &mut PeriodMap, start: &[f64]) -> Result<(f64, Vec<f64>)> {
    let size = map.size();
    let mut batch = vec![0.0; size * size];
    for c in 0..size {
        batch[c * size + c] = 1.0;
    }
    let log_scale = map.advance(&mut batch, size, |_, _, _| {})?;
    // batch column c is P e_c, nalgebra is column-major
    let p = DMatrix::from_vec(size, size, batch);
    let vmax = sup(start);
    let mut v = nalgebra::DVector::from_iterator(size, start.iter().map(|x| x.max(1e-12 * vmax)));
    let mut mu = 0.0;
    for _ in 0..80 {
        let y = &p * &v;
        let vm = v.amax();
        let mut hi = 0.0f64;
        for i in 0..size {
            if v[i] > 1e-6 * vm {
                hi = hi.max(y[i] / v[i]);
            }
        }
        let est = y.sum() / v.sum();
        let resid = (&y - est * &v).amax() / (est * vm);
        mu = est;
        if resid < 1e-13 {
            let s = v.amax();
            let out: Vec<f64> = v.iter().map(|x| x / s).collect();
            return Ok((mu.ln() + log_scale, out));
        }
        let shift = hi.max(est) * (1.0 + 1e-14);
        let mut a = -p.clone();
        for i in 0..size {
            a[(i, i)] += shift;
        }
        let w = a
            .lu()
            .solve(&v)
            .ok_or_else(|| Error::Factorization("monodromy shift matrix is singular".into()))?;
        let sign = if w.sum() < 0.0 { -1.0 } else { 1.0 };
        let s = w.amax();
        v = w.map(|x| (sign * x / s).max(0.0));
    }
    Err(Error::Convergence { iterations: 80, increment: mu })
}

/// `phi(t_m) = exp(lambda t_m / omega) U(t_m) v` on the requested grid.
fn eigenfunction_from(map: &mut PeriodMap, v: &[f64], lambda: f64, steps: usize) -> Result<(SpaceTimeField, f64)> {
    let (n, nodes, used) = (map.n, map.nodes, map.steps());
    let stride = used / steps;
    let mut phi = SpaceTimeField::zeros(n, nodes, steps);
    let mut expo = vec![0.0; steps + 1];
    let omega = map.omega;
    let mut state = v.to_vec();
    map.advance(&mut state, 1, |m, s, l| {
        if m % stride == 0 {
            let q = m / stride;
            phi.slice_mut(q).copy_from_slice(s);
            expo[q] = l + lambda * (m as f64 / used as f64) / omega;
        }
    })?;
    let top = expo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for q in 0..=steps {
        let f = (expo[q] - top).exp();
        phi.slice_mut(q).iter_mut().for_each(|x| *x *= f);
    }
    let s = phi.sup_norm();
    phi.values.iter_mut().for_each(|x| *x /= s);
    let defect = phi.slice(steps).iter().zip(phi.slice(0)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok((phi, defect))
}

/// Forward and adjoint eigenfunctions, normalized so that `int int phi^T psi = 1`.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub forward: SpectralResult,
    pub adjoint: SpectralResult,
    pub phi: SpaceTimeField,
    pub psi: SpaceTimeField,
}

/// Solves the adjoint problem as the forward problem for `A(x, 1 - s)` and
/// reverses time; the discrete map is the exact adjoint in the trapezoid inner product.
pub fn adjoint_eigenpair(
    field: &MatrixField,
    diffusion: &DiffusionMatrix,
    grid: &SpatialGrid,
    time: &TimeGrid,
    omega: f64,
    rho: f64,
    opts: &SolveOptions,
) -> Result<EigenPair> {
    let mut o = opts.clone();
    o.eigenfunction = true;
    let forward = principal_eigenvalue(field, diffusion, grid, time, omega, rho, &o)?;
    o.warm_start = None;
    let adjoint = principal_eigenvalue(&field.time_reversed(), diffusion, grid, time, omega, rho, &o)?;
    if (adjoint.lambda - forward.lambda).abs() > 1e-7 * (1.0 + forward.lambda.abs()) {
        return Err(Error::AdjointMismatch { forward: forward.lambda, adjoint: adjoint.lambda });
    }
    let phi = forward.eigenfunction.clone().expect("requested");
    let rev = adjoint.eigenfunction.as_ref().expect("requested");
    let mut psi = SpaceTimeField::zeros(phi.n, phi.nodes, phi.steps);
    for m in 0..=phi.steps {
        psi.slice_mut(m).copy_from_slice(rev.slice(phi.steps - m));
    }
    let pair = phi.pairing(&psi, grid);
    psi.values.iter_mut().for_each(|x| *x /= pair);
    Ok(EigenPair { forward, adjoint, phi, psi })
}
