//! Coupling matrices `A(x, t)`, diffusion rates, averages and the five limit constants.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{integrate_time, trapezoid, SpatialGrid, TimeGrid};
use crate::linalg::{perron, perron_unchecked};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TimeMode {
    Constant,
    Cos(u32),
    Sin(u32),
}

/// `coeff * cos(k pi x / L) * T(t)` with `T` one of `1`, `cos(2 pi m t)`, `sin(2 pi m t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm {
    pub coeff: f64,
    pub x_mode: u32,
    pub t_mode: TimeMode,
}

impl FourierTerm {
    pub fn constant(coeff: f64) -> Self {
        Self { coeff, x_mode: 0, t_mode: TimeMode::Constant }
    }

    pub fn new(coeff: f64, x_mode: u32, t_mode: TimeMode) -> Self {
        Self { coeff, x_mode, t_mode }
    }

    fn x_factor(&self, x: f64, length: f64) -> f64 {
        if self.x_mode == 0 {
            1.0
        } else {
            (self.x_mode as f64 * PI * x / length).cos()
        }
    }

    fn t_factor(&self, t: f64) -> f64 {
        match self.t_mode {
            TimeMode::Constant => 1.0,
            TimeMode::Cos(m) => (2.0 * PI * m as f64 * t).cos(),
            TimeMode::Sin(m) => (2.0 * PI * m as f64 * t).sin(),
        }
    }

    /// Exact `int_a^b T(t) dt`.
    fn t_integral(&self, a: f64, b: f64) -> f64 {
        match self.t_mode {
            TimeMode::Constant => b - a,
            TimeMode::Cos(0) => b - a,
            TimeMode::Sin(0) => 0.0,
            TimeMode::Cos(m) => {
                let w = 2.0 * PI * m as f64;
                2.0 * (0.5 * w * (a + b)).cos() * (0.5 * w * (b - a)).sin() / w
            }
            TimeMode::Sin(m) => {
                let w = 2.0 * PI * m as f64;
                2.0 * (0.5 * w * (a + b)).sin() * (0.5 * w * (b - a)).sin() / w
            }
        }
    }
}

/// Samples on `x_k` by `t_m = m / steps`, `m = 0..=steps`, bilinear in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    x: Vec<f64>,
    steps: usize,
    values: Vec<f64>,
}

impl Table {
    pub fn new(x: Vec<f64>, steps: usize, values: Vec<f64>) -> Result<Self> {
        if x.len() < 2 || steps < 2 {
            return Err(Error::Invalid("table needs at least 2 x nodes and 2 time steps".into()));
        }
        if values.len() != x.len() * (steps + 1) {
            return Err(Error::Dimension(format!(
                "table has {} values, expected {} x {}",
                values.len(),
                x.len(),
                steps + 1
            )));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("table x nodes must increase".into()));
        }
        for k in 0..x.len() {
            let row = &values[k * (steps + 1)..(k + 1) * (steps + 1)];
            let scale = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if (row[steps] - row[0]).abs() > 1e-10 * (1.0 + scale) {
                return Err(Error::Invalid(format!("table row {k} is not periodic in t")));
            }
        }
        Ok(Self { x, steps, values })
    }

    pub fn x_nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Time series at `x`, linearly interpolated between table rows.
    fn column(&self, x: f64) -> Vec<f64> {
        let nx = self.x.len();
        let k = match self.x.iter().position(|&xk| xk > x) {
            None => nx - 2,
            Some(0) => 0,
            Some(p) => p - 1,
        };
        let w = ((x - self.x[k]) / (self.x[k + 1] - self.x[k])).clamp(0.0, 1.0);
        let s = self.steps + 1;
        (0..s).map(|m| (1.0 - w) * self.values[k * s + m] + w * self.values[(k + 1) * s + m]).collect()
    }
}

/// Periodic piecewise-linear function from `steps + 1` samples.
fn series_eval(series: &[f64], t: f64) -> f64 {
    let steps = series.len() - 1;
    let u = t.rem_euclid(1.0) * steps as f64;
    let m = (u.floor() as usize).min(steps - 1);
    let w = u - m as f64;
    (1.0 - w) * series[m] + w * series[m + 1]
}

/// Antiderivative of the periodic interpolant, from 0.
fn series_antiderivative(series: &[f64], t: f64) -> f64 {
    let steps = series.len() - 1;
    let dt = 1.0 / steps as f64;
    let period: f64 = trapezoid(series, dt);
    let cycles = t.div_euclid(1.0);
    let u = t.rem_euclid(1.0) * steps as f64;
    let m = (u.floor() as usize).min(steps - 1);
    let w = u - m as f64;
    let full: f64 = (0..m).map(|k| 0.5 * (series[k] + series[k + 1]) * dt).sum();
    let partial = dt * (series[m] * w + 0.5 * (series[m + 1] - series[m]) * w * w);
    cycles * period + full + partial
}

/// One matrix entry: a Fourier sum plus an optional table.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub terms: Vec<FourierTerm>,
    pub table: Option<Table>,
}

impl CoefficientEntry {
    pub fn fourier(terms: Vec<FourierTerm>) -> Self {
        Self { terms, table: None }
    }

    pub fn constant(c: f64) -> Self {
        Self::fourier(vec![FourierTerm::constant(c)])
    }

    pub fn tabulated(table: Table) -> Self {
        Self { terms: Vec::new(), table: Some(table) }
    }

    pub fn kind(&self) -> &'static str {
        match (&self.table, self.terms.is_empty()) {
            (None, _) => "fourier",
            (Some(_), true) => "tabulated",
            (Some(_), false) => "mixed",
        }
    }

    pub fn is_zero(&self) -> bool {
        self.table.is_none() && self.terms.iter().all(|t| t.coeff == 0.0)
    }

    fn eval(&self, x: f64, t: f64, length: f64) -> f64 {
        let mut v: f64 = self.terms.iter().map(|q| q.coeff * q.x_factor(x, length) * q.t_factor(t)).sum();
        if let Some(tab) = &self.table {
            v += series_eval(&tab.column(x), t);
        }
        v
    }

    fn integral(&self, x: f64, a: f64, b: f64, length: f64) -> f64 {
        let mut v: f64 = self.terms.iter().map(|q| q.coeff * q.x_factor(x, length) * q.t_integral(a, b)).sum();
        if let Some(tab) = &self.table {
            let col = tab.column(x);
            v += series_antiderivative(&col, b) - series_antiderivative(&col, a);
        }
        v
    }
}

/// Symmetric `n x n` coupling field on `[0, L] x [0, 1)`, periodic in `t`.
///
/// Entries are stored for `i <= j`. Evaluation applies the time map
/// `t -> sign * t + offset`, which gives time-reversed and shifted copies
/// without touching the entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixField {
    n: usize,
    length: f64,
    entries: Vec<CoefficientEntry>,
    time_sign: f64,
    time_offset: f64,
}

fn packed(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

impl MatrixField {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("need at least one component".into()));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Invalid(format!("domain length must be positive, got {length}")));
        }
        Ok(Self {
            n,
            length,
            entries: vec![CoefficientEntry::default(); n * (n + 1) / 2],
            time_sign: 1.0,
            time_offset: 0.0,
        })
    }

    /// Constant matrix, row-major.
    pub fn constant(n: usize, length: f64, a: &[f64]) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::Dimension(format!("expected {} entries, got {}", n * n, a.len())));
        }
        let mut f = Self::new(n, length)?;
        for i in 0..n {
            for j in i..n {
                if (a[i * n + j] - a[j * n + i]).abs() > 1e-14 * (1.0 + a[i * n + j].abs()) {
                    return Err(Error::Validation(format!("matrix not symmetric at ({i},{j})")));
                }
                f.set_entry(i, j, CoefficientEntry::constant(a[i * n + j]))?;
            }
        }
        Ok(f)
    }

    pub fn set_entry(&mut self, i: usize, j: usize, e: CoefficientEntry) -> Result<()> {
        self.check_index(i, j)?;
        let k = packed(self.n, i, j);
        self.entries[k] = e;
        Ok(())
    }

    /// Append Fourier terms to entry `(i, j)`.
    pub fn add_terms(&mut self, i: usize, j: usize, terms: &[FourierTerm]) -> Result<()> {
        self.check_index(i, j)?;
        let k = packed(self.n, i, j);
        self.entries[k].terms.extend_from_slice(terms);
        Ok(())
    }

    /// Adds `e` to entry `(i, j)`. Two tables are summed when they share their grid.
    pub fn add_to_entry(&mut self, i: usize, j: usize, e: &CoefficientEntry) -> Result<()> {
        self.check_index(i, j)?;
        let k = packed(self.n, i, j);
        let target = &mut self.entries[k];
        target.terms.extend_from_slice(&e.terms);
        match (&mut target.table, &e.table) {
            (_, None) => {}
            (slot @ None, Some(t)) => *slot = Some(t.clone()),
            (Some(a), Some(b)) => {
                if a.x != b.x || a.steps != b.steps {
                    return Err(Error::Dimension(format!("tables of entry ({i},{j}) use different grids")));
                }
                a.values.iter_mut().zip(&b.values).for_each(|(x, y)| *x += y);
            }
        }
        Ok(())
    }

    pub fn entry(&self, i: usize, j: usize) -> Result<&CoefficientEntry> {
        self.check_index(i, j)?;
        Ok(&self.entries[packed(self.n, i, j)])
    }

    fn check_index(&self, i: usize, j: usize) -> Result<()> {
        if i >= self.n || j >= self.n {
            return Err(Error::Index(format!("entry ({i},{j}) outside a {n}x{n} field", n = self.n)));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    fn map_time(&self, t: f64) -> f64 {
        self.time_sign * t + self.time_offset
    }

    /// `A(x, 1 - t)`.
    pub fn time_reversed(&self) -> Self {
        let mut f = self.clone();
        f.time_sign = -self.time_sign;
        f.time_offset = self.time_sign + self.time_offset;
        f
    }

    /// `A(x, t + s)`.
    pub fn time_shifted(&self, s: f64) -> Self {
        let mut f = self.clone();
        f.time_offset = self.time_offset + self.time_sign * s;
        f
    }

    /// `A + g(t) I`.
    pub fn plus_scalar(&self, g: &[FourierTerm]) -> Self {
        let mut f = self.clone();
        for i in 0..self.n {
            f.entries[packed(self.n, i, i)].terms.extend_from_slice(g);
        }
        f
    }

    /// Row-major `A(x, t)`.
    pub fn eval(&self, x: f64, t: f64) -> Vec<f64> {
        let n = self.n;
        let tau = self.map_time(t);
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.entries[packed(n, i, j)].eval(x, tau, self.length);
                out[i * n + j] = v;
                out[j * n + i] = v;
            }
        }
        out
    }

    pub fn eval_node(&self, grid: &SpatialGrid, j: usize, t: f64) -> Result<Vec<f64>> {
        if j >= grid.nodes() {
            return Err(Error::Index(format!("node {j} outside grid of {}", grid.nodes())));
        }
        Ok(self.eval(grid.x(j), t))
    }

    /// Row-major `int_a^b A(x, t) dt`.
    pub fn integral(&self, x: f64, a: f64, b: f64) -> Vec<f64> {
        let n = self.n;
        let (lo, hi) = if self.time_sign > 0.0 {
            (self.map_time(a), self.map_time(b))
        } else {
            (self.map_time(b), self.map_time(a))
        };
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.entries[packed(n, i, j)].integral(x, lo, hi, self.length);
                out[i * n + j] = v;
                out[j * n + i] = v;
            }
        }
        out
    }

    pub fn is_x_independent(&self) -> bool {
        self.entries.iter().all(|e| {
            e.terms.iter().all(|q| q.x_mode == 0 || q.coeff == 0.0)
                && e.table.as_ref().is_none_or(|tab| {
                    let s = tab.steps + 1;
                    (1..tab.x.len()).all(|k| (0..s).all(|m| tab.values[k * s + m] == tab.values[m]))
                })
        })
    }

    pub fn is_t_independent(&self) -> bool {
        self.entries.iter().all(|e| {
            e.terms.iter().all(|q| q.t_mode == TimeMode::Constant || q.coeff == 0.0)
                && e.table.as_ref().is_none_or(|tab| {
                    let s = tab.steps + 1;
                    (0..tab.x.len()).all(|k| (1..s).all(|m| tab.values[k * s + m] == tab.values[k * s]))
                })
        })
    }

    /// Node-wise evaluator with cached spatial factors.
    pub fn sampler(&self, grid: &SpatialGrid) -> FieldSampler {
        let n = self.n;
        let nodes = grid.nodes();
        let mut slots = Vec::new();
        for i in 0..n {
            for j in i..n {
                let e = &self.entries[packed(n, i, j)];
                let terms = e.terms.iter().filter(|q| q.coeff != 0.0).copied().collect::<Vec<_>>();
                let xfac = terms
                    .iter()
                    .map(|q| (0..nodes).map(|k| q.coeff * q.x_factor(grid.x(k), self.length)).collect())
                    .collect();
                let table = e.table.as_ref().map(|tab| (0..nodes).map(|k| tab.column(grid.x(k))).collect());
                slots.push(Slot { i, j, terms, xfac, table });
            }
        }
        FieldSampler { n, nodes, time_sign: self.time_sign, time_offset: self.time_offset, slots }
    }
}

struct Slot {
    i: usize,
    j: usize,
    terms: Vec<FourierTerm>,
    xfac: Vec<Vec<f64>>,
    table: Option<Vec<Vec<f64>>>,
}

/// Evaluates a field at every node of a fixed grid. Output layout is
/// `out[node * n * n + i * n + j]`.
pub struct FieldSampler {
    n: usize,
    nodes: usize,
    time_sign: f64,
    time_offset: f64,
    slots: Vec<Slot>,
}

impl FieldSampler {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn eval_nodes(&self, t: f64, out: &mut [f64]) {
        let tau = self.time_sign * t + self.time_offset;
        self.fill(out, |q| q.t_factor(tau), |series| series_eval(series, tau), 1.0);
    }

    pub fn integrate_nodes(&self, a: f64, b: f64, out: &mut [f64]) {
        let (lo, hi) = if self.time_sign > 0.0 {
            (a + self.time_offset, b + self.time_offset)
        } else {
            (self.time_offset - b, self.time_offset - a)
        };
        self.fill(
            out,
            |q| q.t_integral(lo, hi),
            |series| series_antiderivative(series, hi) - series_antiderivative(series, lo),
            1.0,
        );
    }

    fn fill(&self, out: &mut [f64], tf: impl Fn(&FourierTerm) -> f64, tab: impl Fn(&[f64]) -> f64, scale: f64) {
        let n = self.n;
        let nn = n * n;
        out[..self.nodes * nn].iter_mut().for_each(|v| *v = 0.0);
        for s in &self.slots {
            for (q, xf) in s.terms.iter().zip(&s.xfac) {
                let f = tf(q) * scale;
                for k in 0..self.nodes {
                    out[k * nn + s.i * n + s.j] += f * xf[k];
                }
            }
            if let Some(cols) = &s.table {
                for k in 0..self.nodes {
                    out[k * nn + s.i * n + s.j] += scale * tab(&cols[k]);
                }
            }
            if s.i != s.j {
                for k in 0..self.nodes {
                    out[k * nn + s.j * n + s.i] = out[k * nn + s.i * n + s.j];
                }
            }
        }
    }
}

/// Positive diagonal diffusion rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionMatrix(Vec<f64>);

impl DiffusionMatrix {
    pub fn new(d: Vec<f64>) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::Invalid("diffusion rates are empty".into()));
        }
        if let Some((i, v)) = d.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::Validation(format!("diffusion rate d_{} = {v} is not positive", i + 1)));
        }
        Ok(Self(d))
    }

    pub fn rates(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub components: usize,
    pub samples: usize,
    /// Smallest off-diagonal sample.
    pub min_off_diagonal: f64,
    /// Pairs `(i, j)` whose entry is not identically zero.
    pub coupled_pairs: Vec<(usize, usize)>,
}

/// Checks essential positivity and full coupling on every grid sample.
pub fn validate(field: &MatrixField, grid: &SpatialGrid, time: &TimeGrid) -> Result<ValidationReport> {
    let n = field.n();
    let sampler = field.sampler(grid);
    let nodes = grid.nodes();
    let mut buf = vec![0.0; nodes * n * n];
    let mut min_off = f64::INFINITY;
    let mut nonzero = vec![false; n * n];
    for m in 0..=time.steps() {
        let t = time.t(m);
        sampler.eval_nodes(t, &mut buf);
        for k in 0..nodes {
            for i in 0..n {
                for j in i + 1..n {
                    let a = buf[k * n * n + i * n + j];
                    if !a.is_finite() {
                        return Err(Error::Validation(format!(
                            "a_{}{} is not finite at x = {}, t = {t}",
                            i + 1,
                            j + 1,
                            grid.x(k)
                        )));
                    }
                    if a < 0.0 {
                        return Err(Error::Validation(format!(
                            "essential positivity violated: a_{}{} = {a} at x = {}, t = {t}",
                            i + 1,
                            j + 1,
                            grid.x(k)
                        )));
                    }
                    min_off = min_off.min(a);
                    if a > 0.0 {
                        nonzero[i * n + j] = true;
                    }
                }
            }
        }
    }
    // full coupling: the graph of nonzero off-diagonal entries is connected
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            if i != j && !seen[j] && nonzero[a * n + b] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    if let Some(j) = seen.iter().position(|s| !s) {
        let left: Vec<usize> = (0..n).filter(|&i| seen[i]).map(|i| i + 1).collect();
        let right: Vec<usize> = (0..n).filter(|&i| !seen[i]).map(|i| i + 1).collect();
        return Err(Error::Validation(format!(
            "not fully coupled: components {left:?} never feed {right:?} (first: {})",
            j + 1
        )));
    }
    let coupled_pairs =
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| nonzero[i * n + j]).collect();
    Ok(ValidationReport {
        components: n,
        samples: nodes * (time.steps() + 1),
        min_off_diagonal: if n > 1 { min_off } else { 0.0 },
        coupled_pairs,
    })
}

/// `Â(x_j) = int_0^1 A(x_j, t) dt` by the trapezoid rule, `nodes * n * n` values.
pub fn temporal_average(field: &MatrixField, grid: &SpatialGrid, time: &TimeGrid) -> Vec<f64> {
    let n = field.n();
    let nodes = grid.nodes();
    let sampler = field.sampler(grid);
    let mut acc = vec![0.0; nodes * n * n];
    let mut buf = vec![0.0; nodes * n * n];
    let steps = time.steps();
    for m in 0..=steps {
        sampler.eval_nodes(time.t(m), &mut buf);
        let w = if m == 0 || m == steps { 0.5 } else { 1.0 } / steps as f64;
        acc.iter_mut().zip(&buf).for_each(|(a, b)| *a += w * b);
    }
    acc
}

/// Mean over the domain of `A(., t)` for one node sample.
pub(crate) fn space_mean(sampled: &[f64], n: usize, grid: &SpatialGrid) -> Vec<f64> {
    let nodes = grid.nodes();
    let h = grid.spacing();
    let nn = n * n;
    let mut out = vec![0.0; nn];
    for k in 0..nodes {
        let w = if k == 0 || k == nodes - 1 { 0.5 * h } else { h } / grid.length();
        for e in 0..nn {
            out[e] += w * sampled[k * nn + e];
        }
    }
    out
}

/// `Ā(t_m)` for `m = 0..=M`, `(M + 1) * n * n` values.
pub fn spatial_average(field: &MatrixField, grid: &SpatialGrid, time: &TimeGrid) -> Vec<f64> {
    let n = field.n();
    let sampler = field.sampler(grid);
    let mut buf = vec![0.0; grid.nodes() * n * n];
    let mut out = Vec::with_capacity((time.steps() + 1) * n * n);
    for m in 0..=time.steps() {
        sampler.eval_nodes(time.t(m), &mut buf);
        out.extend(space_mean(&buf, n, grid));
    }
    out
}

/// Space-time mean of `A`.
pub fn full_average(field: &MatrixField, grid: &SpatialGrid, time: &TimeGrid) -> Vec<f64> {
    space_mean(&temporal_average(field, grid, time), field.n(), grid)
}

/// `mu(diag(d_i p^2) + A(x, t))`.
pub fn hamiltonian(p: f64, field: &MatrixField, diffusion: &DiffusionMatrix, x: f64, t: f64) -> Result<f64> {
    let n = field.n();
    if diffusion.len() != n {
        return Err(Error::Dimension(format!("{} diffusion rates for {n} components", diffusion.len())));
    }
    let mut a = field.eval(x, t);
    for i in 0..n {
        a[i * n + i] += diffusion.rates()[i] * p * p;
    }
    Ok(perron(&a, n)?.value)
}

/// The five limit constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitConstants {
    /// `-int max_x mu(A) dt`
    pub c_under: f64,
    /// `-max_x int mu(A) dt`
    pub c_star: f64,
    /// `-max_x mu(Â)`
    pub c_star_plus: f64,
    /// `-int mu(Ā) dt`
    pub c_under_plus: f64,
    /// `-mu(mean of Â)`
    pub c_bar: f64,
}

impl LimitConstants {
    pub fn as_array(&self) -> [f64; 5] {
        [self.c_under, self.c_star, self.c_star_plus, self.c_under_plus, self.c_bar]
    }

    pub fn names() -> [&'static str; 5] {
        ["c_under", "c_star", "c_star_plus", "c_under_plus", "c_bar"]
    }

    /// `C_ <= C* <= min(C*+, C_+)` and `max(C*+, C_+) <= C̄`, up to `tol`.
    pub fn ordering_holds(&self, tol: f64) -> bool {
        self.c_under <= self.c_star + tol
            && self.c_star <= self.c_star_plus.min(self.c_under_plus) + tol
            && self.c_star_plus.max(self.c_under_plus) <= self.c_bar + tol
    }

    /// Smallest distance from `level` to any constant.
    pub fn distance(&self, level: f64) -> f64 {
        self.as_array().iter().map(|c| (c - level).abs()).fold(f64::INFINITY, f64::min)
    }
}

pub fn limit_constants(field: &MatrixField, grid: &SpatialGrid, time: &TimeGrid) -> Result<LimitConstants> {
    let n = field.n();
    let nn = n * n;
    let nodes = grid.nodes();
    let steps = time.steps();
    let sampler = field.sampler(grid);
    let mut buf = vec![0.0; nodes * nn];
    // mu(A(x_j, t_m)) stored node-major
    let mut mu = vec![0.0; nodes * (steps + 1)];
    let mut mu_bar = Vec::with_capacity(steps + 1);
    let mut max_x = Vec::with_capacity(steps + 1);
    let mut acc = vec![0.0; nodes * nn];
    for m in 0..=steps {
        sampler.eval_nodes(time.t(m), &mut buf);
        let mut best = f64::NEG_INFINITY;
        for k in 0..nodes {
            let v = perron_unchecked(&buf[k * nn..(k + 1) * nn], n).value;
            mu[k * (steps + 1) + m] = v;
            best = best.max(v);
        }
        max_x.push(best);
        mu_bar.push(perron_unchecked(&space_mean(&buf, n, grid), n).value);
        let w = if m == 0 || m == steps { 0.5 } else { 1.0 } / steps as f64;
        acc.iter_mut().zip(&buf).for_each(|(a, b)| *a += w * b);
    }
    let c_under = -integrate_time(&max_x)?.value;
    let mut c_star = f64::INFINITY;
    let mut c_star_plus = f64::INFINITY;
    for k in 0..nodes {
        let v = integrate_time(&mu[k * (steps + 1)..(k + 1) * (steps + 1)])?.value;
        c_star = c_star.min(-v);
        c_star_plus = c_star_plus.min(-perron_unchecked(&acc[k * nn..(k + 1) * nn], n).value);
    }
    let c_under_plus = -integrate_time(&mu_bar)?.value;
    let c_bar = -perron_unchecked(&space_mean(&acc, n, grid), n).value;
    Ok(LimitConstants { c_under, c_star, c_star_plus, c_under_plus, c_bar })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grids() -> (SpatialGrid, TimeGrid) {
        (SpatialGrid::new(1.0, 101).unwrap(), TimeGrid::new(512).unwrap())
    }

    #[test]
    fn constant_field_constants_coincide() {
        let (g, t) = grids();
        let f = MatrixField::constant(2, 1.0, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let c = limit_constants(&f, &g, &t).unwrap();
        for v in c.as_array() {
            assert!((v + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn scalar_cosine_constants() {
        let (g, t) = grids();
        let mut f = MatrixField::new(1, 1.0).unwrap();
        f.set_entry(0, 0, CoefficientEntry::fourier(vec![FourierTerm::new(1.0, 1, TimeMode::Cos(1))])).unwrap();
        let c = limit_constants(&f, &g, &t).unwrap();
        assert!((c.c_under + 2.0 / PI).abs() < 1e-4);
        assert!(c.c_star.abs() < 1e-12);
        assert!(c.c_star_plus.abs() < 1e-12);
        assert!(c.c_under_plus.abs() < 1e-12);
        assert!(c.c_bar.abs() < 1e-12);
    }

    #[test]
    fn time_independent_field() {
        let (g, t) = grids();
        let mut f = MatrixField::new(1, 1.0).unwrap();
        f.set_entry(0, 0, CoefficientEntry::fourier(vec![FourierTerm::new(1.0, 1, TimeMode::Constant)])).unwrap();
        let c = limit_constants(&f, &g, &t).unwrap();
        assert!((c.c_under + 1.0).abs() < 1e-12);
        assert!((c.c_star + 1.0).abs() < 1e-12);
        assert!((c.c_star_plus + 1.0).abs() < 1e-12);
        assert!(c.c_under_plus.abs() < 1e-12 && c.c_bar.abs() < 1e-12);
    }

    #[test]
    fn averages_of_separable_entry() {
        let (g, t) = grids();
        let mut f = MatrixField::new(1, 1.0).unwrap();
        f.set_entry(0, 0, CoefficientEntry::fourier(vec![FourierTerm::new(1.0, 1, TimeMode::Cos(1))])).unwrap();
        let hat = temporal_average(&f, &g, &t);
        assert!(hat.iter().all(|v| v.abs() < 1e-12));
        let bar = spatial_average(&f, &g, &t);
        assert!(bar.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn hamiltonian_examples() {
        let d = DiffusionMatrix::new(vec![1.0, 1.0]).unwrap();
        let zero = MatrixField::constant(2, 1.0, &[0.0; 4]).unwrap();
        assert!((hamiltonian(2.0, &zero, &d, 0.3, 0.1).unwrap() - 4.0).abs() < 1e-12);
        let f = MatrixField::constant(2, 1.0, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!((hamiltonian(0.0, &f, &d, 0.3, 0.1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn validation_witness_and_coupling() {
        let (g, t) = grids();
        let mut f = MatrixField::constant(2, 1.0, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!(validate(&f, &g, &t).is_ok());
        f.add_terms(0, 1, &[FourierTerm::new(-1.1, 0, TimeMode::Cos(1))]).unwrap();
        let err = validate(&f, &g, &t).unwrap_err().to_string();
        assert!(err.contains("a_12") && err.contains("t = 0"), "{err}");
        let diag = MatrixField::constant(2, 1.0, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        let err = validate(&diag, &g, &t).unwrap_err().to_string();
        assert!(err.contains("not fully coupled"), "{err}");
    }

    #[test]
    fn bad_diffusion_rejected() {
        assert!(DiffusionMatrix::new(vec![1.0, 0.0]).is_err());
        assert!(DiffusionMatrix::new(vec![1.0, -2.0]).is_err());
    }

    #[test]
    fn time_maps_and_integrals() {
        let mut f = MatrixField::new(1, 1.0).unwrap();
        f.set_entry(0, 0, CoefficientEntry::fourier(vec![FourierTerm::new(1.0, 0, TimeMode::Sin(1))])).unwrap();
        let r = f.time_reversed();
        assert!((r.eval(0.0, 0.1)[0] - (2.0 * PI * 0.9).sin()).abs() < 1e-12);
        let s = f.time_shifted(0.25);
        assert!((s.eval(0.0, 0.0)[0] - 1.0).abs() < 1e-12);
        let exact = (1.0 - (2.0 * PI * 0.3).cos()) / (2.0 * PI);
        assert!((f.integral(0.0, 0.0, 0.3)[0] - exact).abs() < 1e-14);
        // reversed: int_0^0.3 sin(2 pi (1 - t)) dt = -exact
        assert!((r.integral(0.0, 0.0, 0.3)[0] + exact).abs() < 1e-14);
    }

    #[test]
    fn table_interpolates_and_integrates() {
        let x = vec![0.0, 1.0];
        let steps = 4;
        let vals = vec![0.0, 1.0, 0.0, -1.0, 0.0, 2.0, 3.0, 2.0, 1.0, 2.0];
        let tab = Table::new(x, steps, vals).unwrap();
        let mut f = MatrixField::new(1, 1.0).unwrap();
        f.set_entry(0, 0, CoefficientEntry::tabulated(tab)).unwrap();
        assert_eq!(f.eval(0.0, 0.25)[0], 1.0);
        assert!((f.eval(0.5, 0.25)[0] - 2.0).abs() < 1e-14);
        assert!(f.integral(0.0, 0.0, 1.0)[0].abs() < 1e-14);
        assert!((f.integral(1.0, 0.0, 1.0)[0] - 2.0).abs() < 1e-14);
        assert!((f.integral(1.0, 0.9, 1.1)[0] - 0.4).abs() < 1e-14);
    }

    #[test]
    fn sampler_matches_eval() {
        let g = SpatialGrid::new(2.0, 11).unwrap();
        let mut f = MatrixField::new(2, 2.0).unwrap();
        f.set_entry(0, 1, CoefficientEntry::fourier(vec![FourierTerm::new(0.5, 2, TimeMode::Sin(3))])).unwrap();
        f.add_terms(0, 1, &[FourierTerm::constant(1.0)]).unwrap();
        let f = f.time_shifted(0.1).time_reversed();
        let s = f.sampler(&g);
        let mut buf = vec![0.0; 11 * 4];
        s.eval_nodes(0.37, &mut buf);
        for k in 0..11 {
            let e = f.eval(g.x(k), 0.37);
            for q in 0..4 {
                assert!((buf[k * 4 + q] - e[q]).abs() < 1e-14);
            }
        }
        s.integrate_nodes(0.2, 0.45, &mut buf);
        for k in 0..11 {
            let e = f.integral(g.x(k), 0.2, 0.45);
            for q in 0..4 {
                assert!((buf[k * 4 + q] - e[q]).abs() < 1e-14);
            }
        }
    }
}
