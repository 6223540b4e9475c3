//! Critical value `C(theta)` of `theta U_t + H(U_x, x, t) = -C`, periodic in `t`,
//! with `H(p, x, t) = mu(diag(d_i p^2) + A(x, t))`.
//!
//! `W_t = -H(W_x, x, t) / theta` is evolved from zero with a Lax-Friedrichs
//! scheme; the mean of `W` drifts like `C t / theta`.

use serde::Serialize;

use crate::coefficients::{limit_constants, DiffusionMatrix, LimitConstants, MatrixField};
use crate::error::{Error, Result};
use crate::grid::{trapezoid, GridFunction, SpatialGrid, TimeGrid};
use crate::linalg::perron_unchecked;
use crate::parabolic::SpaceTimeField;

#[derive(Debug, Clone)]
pub struct HjOptions {
    pub max_periods: usize,
    pub min_periods: usize,
    /// Points of the symmetric momentum grid on `[-P_max, P_max]`; odd.
    pub p_points: usize,
    /// Time nodes of the Hamiltonian lattice.
    pub lattice_times: usize,
    pub cfl: f64,
    /// Record the last period of `W` on a grid with this many steps.
    pub record_steps: Option<usize>,
    /// Drift agreement required over the last `max(5, ceil(theta))` periods.
    pub drift_tol: f64,
    /// Node-local dissipation instead of the global bound.
    pub local_dissipation: bool,
}

impl Default for HjOptions {
    fn default() -> Self {
        Self {
            max_periods: 4000,
            min_periods: 10,
            p_points: 257,
            lattice_times: 128,
            cfl: 0.4,
            record_steps: None,
            drift_tol: 1e-4,
            local_dissipation: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HjStatus {
    Converged,
    Oscillating,
    BudgetExhausted,
    /// `theta` too small to evolve; the value is the `theta -> 0` limit.
    RegimeLimit,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErgodicResult {
    pub theta: f64,
    pub c: f64,
    pub status: HjStatus,
    pub periods: usize,
    pub steps_per_period: usize,
    pub alpha: f64,
    pub p_max: f64,
    /// Per-period drift of the mean, scaled by `theta`.
    pub drifts: Vec<f64>,
    /// Final `W` with its mean removed.
    #[serde(skip)]
    pub profile: Option<GridFunction>,
    /// `W` over the last period on the recording grid, mean removed at `t = 0`.
    #[serde(skip)]
    pub period_profile: Option<SpaceTimeField>,
}

/// Cached `H` on `|p|` nodes by spatial nodes by lattice times.
pub struct HamiltonianLattice {
    nodes: usize,
    times: usize,
    p_nodes: usize,
    dp: f64,
    values: Vec<f64>,
    pub alpha: f64,
    pub p_max: f64,
}

impl HamiltonianLattice {
    pub fn new(
        field: &MatrixField,
        diffusion: &DiffusionMatrix,
        grid: &SpatialGrid,
        p_max: f64,
        p_points: usize,
        times: usize,
    ) -> Result<Self> {
        let n = field.n();
        if diffusion.len() != n {
            return Err(Error::Dimension(format!("{} diffusion rates for {n} components", diffusion.len())));
        }
        if p_points < 3 || p_points.is_multiple_of(2) {
            return Err(Error::Invalid(format!("momentum grid needs an odd count >= 3, got {p_points}")));
        }
        let nodes = grid.nodes();
        let p_nodes = p_points.div_ceil(2);
        let dp = p_max / (p_nodes - 1) as f64;
        let sampler = field.sampler(grid);
        let nn = n * n;
        let mut buf = vec![0.0; nodes * nn];
        let mut values = vec![0.0; times * nodes * p_nodes];
        let mut blk = vec![0.0; nn];
        let mut alpha = 0.0f64;
        for l in 0..times {
            sampler.eval_nodes(l as f64 / times as f64, &mut buf);
            for j in 0..nodes {
                let row = &mut values[(l * nodes + j) * p_nodes..(l * nodes + j + 1) * p_nodes];
                for (k, slot) in row.iter_mut().enumerate() {
                    let p = k as f64 * dp;
                    blk.copy_from_slice(&buf[j * nn..(j + 1) * nn]);
                    for i in 0..n {
                        blk[i * n + i] += diffusion.rates()[i] * p * p;
                    }
                    *slot = perron_unchecked(&blk, n).value;
                }
                for k in 0..p_nodes - 1 {
                    alpha = alpha.max((row[k + 1] - row[k]).abs() / dp);
                }
            }
        }
        Ok(Self { nodes, times, p_nodes, dp, values, alpha, p_max })
    }

    /// Row offsets and weight for time `t`.
    fn time_rows(&self, t: f64) -> (usize, usize, f64) {
        let u = t.rem_euclid(1.0) * self.times as f64;
        let l0 = (u.floor() as usize).min(self.times - 1);
        let w = u - l0 as f64;
        (l0 * self.nodes, ((l0 + 1) % self.times) * self.nodes, w)
    }

    fn row_eval(&self, row: usize, p: f64) -> f64 {
        let r = &self.values[row * self.p_nodes..(row + 1) * self.p_nodes];
        let q = p.abs() / self.dp;
        let k = (q.floor() as usize).min(self.p_nodes - 2);
        let w = q - k as f64;
        (1.0 - w) * r[k] + w * r[k + 1]
    }

    /// Upper bound of `|dH/dp|` on `[0, |p|]` for one row: slope of the segment containing `|p|`.
    fn row_slope(&self, row: usize, p: f64) -> f64 {
        let r = &self.values[row * self.p_nodes..(row + 1) * self.p_nodes];
        let k = ((p.abs() / self.dp).floor() as usize).min(self.p_nodes - 2);
        ((r[k + 1] - r[k]) / self.dp).abs()
    }

    pub fn eval(&self, p: f64, node: usize, t: f64) -> f64 {
        let (a, b, w) = self.time_rows(t);
        (1.0 - w) * self.row_eval(a + node, p) + w * self.row_eval(b + node, p)
    }
}

/// One Lax-Friedrichs step of `W_t = -H(W_x) / theta` with mirror ghosts.
///
/// With `local` the dissipation at node `j` is the largest `|dH/dp|` between
/// the one-sided gradients (`H` is even and convex in `p`); otherwise the
/// global bound. The time step must satisfy the CFL bound with the global one.
#[allow(clippy::too_many_arguments)]
pub fn lax_friedrichs_step(
    w: &[f64],
    out: &mut [f64],
    lattice: &HamiltonianLattice,
    t: f64,
    dt: f64,
    theta: f64,
    h: f64,
    local: bool,
) {
    let n = w.len();
    let (ra, rb, wt) = lattice.time_rows(t);
    let scale = dt / (2.0 * theta * h);
    for j in 0..n {
        let left = if j == 0 { w[1] } else { w[j - 1] };
        let right = if j == n - 1 { w[n - 2] } else { w[j + 1] };
        let p = (right - left) / (2.0 * h);
        let ham = (1.0 - wt) * lattice.row_eval(ra + j, p) + wt * lattice.row_eval(rb + j, p);
        let alpha = if local {
            let reach = (w[j] - left).abs().max((right - w[j]).abs()) / h;
            lattice.row_slope(ra + j, reach).max(lattice.row_slope(rb + j, reach))
        } else {
            lattice.alpha
        };
        out[j] = w[j] - dt / theta * ham + alpha * scale * (right - 2.0 * w[j] + left);
    }
}

fn mean(w: &[f64], h: f64, length: f64) -> f64 {
    trapezoid(w, h) / length
}

/// `1 + 2 sqrt((C̄ - C_ + 1) / min d)`.
pub fn gradient_bound(constants: &LimitConstants, diffusion: &DiffusionMatrix) -> f64 {
    1.0 + 2.0 * ((constants.c_bar - constants.c_under + 1.0) / diffusion.min()).sqrt()
}

pub fn ergodic_constant(
    theta: f64,
    field: &MatrixField,
    diffusion: &DiffusionMatrix,
    grid: &SpatialGrid,
    time: &TimeGrid,
    opts: &HjOptions,
) -> Result<ErgodicResult> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::Invalid(format!("theta must be positive, got {theta}")));
    }
    let constants = limit_constants(field, grid, time)?;
    let p_max = gradient_bound(&constants, diffusion);
    let lattice = HamiltonianLattice::new(field, diffusion, grid, p_max, opts.p_points, opts.lattice_times)?;
    evolve(theta, &lattice, grid, opts)
}

/// As `ergodic_constant`, but an infeasible `theta` returns the `theta -> 0` limit `C_` flagged as such.
pub fn ergodic_constant_or_limit(
    theta: f64,
    field: &MatrixField,
    diffusion: &DiffusionMatrix,
    grid: &SpatialGrid,
    time: &TimeGrid,
    opts: &HjOptions,
) -> Result<ErgodicResult> {
    match ergodic_constant(theta, field, diffusion, grid, time, opts) {
        Err(Error::Regime(_)) => {
            let c = limit_constants(field, grid, time)?;
            Ok(ErgodicResult {
                theta,
                c: c.c_under,
                status: HjStatus::RegimeLimit,
                periods: 0,
                steps_per_period: 0,
                alpha: f64::NAN,
                p_max: gradient_bound(&c, diffusion),
                drifts: Vec::new(),
                profile: None,
                period_profile: None,
            })
        }
        other => other,
    }
}

fn evolve(theta: f64, lattice: &HamiltonianLattice, grid: &SpatialGrid, opts: &HjOptions) -> Result<ErgodicResult> {
    let nodes = grid.nodes();
    let h = grid.spacing();
    let alpha = lattice.alpha.max(1e-12);
    let min_steps = (alpha / (opts.cfl * theta * h)).ceil().max(1.0);
    if 1.0 / min_steps < 1e-8 {
        return Err(Error::Regime(format!(
            "theta = {theta:e} needs dt = {:e} < 1e-8; use the theta -> 0 limit C_",
            1.0 / min_steps
        )));
    }
    let mut steps = min_steps as usize;
    if let Some(r) = opts.record_steps {
        steps = r * steps.div_ceil(r);
    }
    let dt = 1.0 / steps as f64;
    let mut w = vec![0.0; nodes];
    let mut next = vec![0.0; nodes];
    let mut means = vec![0.0];
    let mut drifts = Vec::new();
    let mut offset = 0.0;
    let mut record = opts.record_steps.map(|r| SpaceTimeField::zeros(1, nodes, r));
    let mut status = HjStatus::BudgetExhausted;
    let mut periods = 0;
    while periods < opts.max_periods {
        for s in 0..steps {
            if let (Some(rec), Some(r)) = (record.as_mut(), opts.record_steps) {
                if s % (steps / r) == 0 {
                    rec.slice_mut(s / (steps / r)).copy_from_slice(&w);
                }
            }
            lax_friedrichs_step(&w, &mut next, lattice, s as f64 * dt, dt, theta, h, opts.local_dissipation);
            std::mem::swap(&mut w, &mut next);
        }
        if let (Some(rec), Some(r)) = (record.as_mut(), opts.record_steps) {
            rec.slice_mut(r).copy_from_slice(&w);
        }
        periods += 1;
        let m = mean(&w, h, grid.length());
        // keep W bounded; only gradients enter H
        w.iter_mut().for_each(|v| *v -= m);
        if let Some(rec) = record.as_mut() {
            let m0 = mean(rec.slice(0), h, grid.length());
            rec.values.iter_mut().for_each(|v| *v -= m0);
        }
        offset += m;
        means.push(offset);
        drifts.push(theta * m);
        let k = drifts.len();
        // W relaxes over O(theta) periods, so the window grows with theta
        let window = (theta.ceil() as usize).clamp(5, opts.max_periods / 4);
        if k >= opts.min_periods.max(window) {
            let last = &drifts[k - window..];
            let hi = last.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = last.iter().copied().fold(f64::INFINITY, f64::min);
            if hi - lo <= opts.drift_tol * (1.0 + hi.abs()) {
                status = HjStatus::Converged;
                break;
            }
        }
    }
    if status != HjStatus::Converged && drifts.len() >= 12 {
        let d: Vec<f64> = drifts.windows(2).rev().take(10).map(|p| p[1] - p[0]).collect();
        let flips = d.windows(2).filter(|p| p[0] * p[1] < 0.0).count();
        if flips >= 6 {
            status = HjStatus::Oscillating;
        }
    }
    // least-squares slope of the mean over the last half of the run
    let k = means.len() - 1;
    let start = k / 2;
    let xs: Vec<f64> = (start..=k).map(|q| q as f64).collect();
    let ys = &means[start..=k];
    let xm = xs.iter().sum::<f64>() / xs.len() as f64;
    let ym = ys.iter().sum::<f64>() / ys.len() as f64;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let den: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let slope = if den > 0.0 { num / den } else { ys[ys.len() - 1] - ys[0] };
    let profile = GridFunction::from_values(1, nodes, w)?;
    Ok(ErgodicResult {
        theta,
        c: theta * slope,
        status,
        periods,
        steps_per_period: steps,
        alpha,
        p_max: lattice.p_max,
        drifts,
        profile: Some(profile),
        period_profile: record,
    })
}

/// `-max_x mu(A(x, t))`: critical value with time frozen.
pub fn stationary_critical_value(field: &MatrixField, grid: &SpatialGrid, t: f64) -> f64 {
    let n = field.n();
    let mut buf = vec![0.0; grid.nodes() * n * n];
    field.sampler(grid).eval_nodes(t, &mut buf);
    -(0..grid.nodes()).map(|k| perron_unchecked(&buf[k * n * n..(k + 1) * n * n], n).value).fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct AveragedCritical {
    /// `C*` from the limit constants.
    pub c_star: f64,
    /// Drift of the autonomous scheme with the time-averaged Hamiltonian, if evolved.
    pub evolved: Option<f64>,
    pub status: Option<HjStatus>,
}

/// Critical value of the time-averaged Hamiltonian, which is `C*`; optionally
/// cross-checked by evolving `W_t = -Ĥ(W_x, x)`.
pub fn averaged_critical_value(
    field: &MatrixField,
    diffusion: &DiffusionMatrix,
    grid: &SpatialGrid,
    time: &TimeGrid,
    evolve_check: bool,
    opts: &HjOptions,
) -> Result<AveragedCritical> {
    let constants = limit_constants(field, grid, time)?;
    if !evolve_check {
        return Ok(AveragedCritical { c_star: constants.c_star, evolved: None, status: None });
    }
    let p_max = gradient_bound(&constants, diffusion);
    let full = HamiltonianLattice::new(field, diffusion, grid, p_max, opts.p_points, opts.lattice_times)?;
    // average the lattice over its time rows into a single row
    let (nodes, p_nodes, times) = (full.nodes, full.p_nodes, full.times);
    let mut avg = vec![0.0; nodes * p_nodes];
    for l in 0..times {
        for q in 0..nodes * p_nodes {
            avg[q] += full.values[l * nodes * p_nodes + q] / times as f64;
        }
    }
    let mut alpha = 0.0f64;
    for j in 0..nodes {
        for k in 0..p_nodes - 1 {
            alpha = alpha.max((avg[j * p_nodes + k + 1] - avg[j * p_nodes + k]).abs() / full.dp);
        }
    }
    let lattice = HamiltonianLattice { nodes, times: 1, p_nodes, dp: full.dp, values: avg, alpha, p_max };
    let r = evolve(1.0, &lattice, grid, opts)?;
    Ok(AveragedCritical { c_star: constants.c_star, evolved: Some(r.c), status: Some(r.status) })
}
