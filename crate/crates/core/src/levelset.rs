//! Level sets `{lambda(omega, rho) = level}`, their classification, the
//! persistence region of the mutation model and the non-monotonicity probe.

use serde::Serialize;

use crate::coefficients::{CoefficientEntry, DiffusionMatrix, LimitConstants, MatrixField};
use crate::diagnostics::{separable_time_fit, SeparableFit};
use crate::error::{Error, Result};
use crate::floquet_ode::invert_monotone;
use crate::grid::{SpatialGrid, TimeGrid};
use crate::problem::Problem;

/// Search window for `rho` roots.
pub const RHO_SEARCH: (f64, f64) = (1e-8, 1e8);
/// Search window for `omega` roots.
pub const OMEGA_SEARCH: (f64, f64) = (1e-5, 1e5);
/// Levels closer than this to one of the five constants are not classified.
pub const SEPARATRIX_GAP: f64 = 1e-3;

/// Illinois regula falsi for increasing `f` on `[a, b]` with `fa < 0 < fb`.
fn illinois(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut fa: f64,
    mut b: f64,
    mut fb: f64,
    ftol: f64,
    xtol: f64,
) -> Result<(f64, f64)> {
    let mut side = 0i8;
    for _ in 0..200 {
        let x = if fb - fa > 0.0 { (a * fb - b * fa) / (fb - fa) } else { 0.5 * (a + b) };
        let x = x.clamp(a.min(b), a.max(b));
        let fx = f(x)?;
        if fx.abs() <= ftol || (b - a).abs() <= xtol {
            return Ok((x, fx));
        }
        if fx < 0.0 {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::Convergence { iterations: 200, increment: (b - a).abs() })
}

/// Brackets the root of increasing `f` in `[lo, hi]` by geometric expansion
/// from `start`, then refines it. Returns `None` when no sign change is found.
fn root_increasing(
    mut f: impl FnMut(f64) -> Result<f64>,
    start: f64,
    step: f64,
    lo: f64,
    hi: f64,
    ftol: f64,
    xtol: f64,
) -> Result<Option<(f64, f64)>> {
    let s0 = start.clamp(lo, hi);
    let f0 = f(s0)?;
    if f0.abs() <= ftol {
        return Ok(Some((s0, f0)));
    }
    let dir = if f0 < 0.0 { 1.0 } else { -1.0 };
    let (mut s, mut fs) = (s0, f0);
    let mut d = step;
    loop {
        let next = (s + dir * d).clamp(lo, hi);
        if next == s {
            return Ok(None);
        }
        let fn_ = f(next)?;
        if fn_.abs() <= ftol {
            return Ok(Some((next, fn_)));
        }
        if (fn_ < 0.0) != (fs < 0.0) {
            let (a, fa, b, fb) = if dir > 0.0 { (s, fs, next, fn_) } else { (next, fn_, s, fs) };
            return illinois(f, a, fa, b, fb, ftol, xtol).map(Some);
        }
        s = next;
        fs = fn_;
        d *= 2.0;
    }
}

/// Root of `lambda_under(rho) = level`, defined for `level` in `(C_, C_+)`.
pub fn rho_ell(problem: &Problem, level: f64) -> Result<Option<f64>> {
    let c = problem.constants()?;
    if !(c.c_under < level && level < c.c_under_plus) {
        return Ok(None);
    }
    rho_root(|r| problem.lambda_under(r), level).map(Some)
}

/// Root of `lambda_bar(rho) = level`, defined for `level` in `(C*+, C^-)`.
pub fn rho_under_ell(problem: &Problem, level: f64) -> Result<Option<f64>> {
    let c = problem.constants()?;
    if !(c.c_star_plus < level && level < c.c_bar) {
        return Ok(None);
    }
    rho_root(|r| problem.lambda_bar(r), level).map(Some)
}

fn rho_root(mut f: impl FnMut(f64) -> Result<f64>, level: f64) -> Result<f64> {
    let (lo, hi) = (RHO_SEARCH.0.ln(), RHO_SEARCH.1.ln());
    let tol = 1e-11 * (1.0 + level.abs());
    match root_increasing(|s| Ok(f(s.exp())? - level), 0.0, std::f64::consts::LN_10, lo, hi, tol, 1e-13)? {
        Some((s, _)) => Ok(s.exp()),
        None => Err(Error::Level { level, reason: format!("no root for rho in {RHO_SEARCH:?}") }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    /// `lambda_under(rho) >= level`: the level lies below every `lambda(., rho)`.
    Below,
    /// `lambda_bar(rho) <= level`.
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Crossing {
    Root { omega: f64, lambda: f64 },
    Absent(Side),
    /// `lambda(., rho)` is flat.
    Degenerate,
}

/// `omega` with `lambda(omega, rho) = level`; `hint` seeds the bracket search.
pub fn omega_ell(problem: &Problem, level: f64, rho: f64, hint: Option<f64>) -> Result<Crossing> {
    let low = problem.lambda_under(rho)?;
    let high = problem.lambda_bar(rho)?;
    if high - low <= 1e-8 {
        return Ok(Crossing::Degenerate);
    }
    if low >= level {
        return Ok(Crossing::Absent(Side::Below));
    }
    if high <= level {
        return Ok(Crossing::Absent(Side::Above));
    }
    let tol = 0.5e-6 * (1.0 + level.abs());
    let start = hint.unwrap_or(1.0).ln();
    let step = if hint.is_some() { 0.25 } else { 4f64.ln() };
    let (lo, hi) = (OMEGA_SEARCH.0.ln(), OMEGA_SEARCH.1.ln());
    match root_increasing(|s| Ok(problem.lambda(s.exp(), rho)? - level), start, step, lo, hi, tol, 1e-12)? {
        Some((s, f)) => Ok(Crossing::Root { omega: s.exp(), lambda: f + level }),
        None => Err(Error::Level {
            level,
            reason: format!("no omega in {OMEGA_SEARCH:?} reaches the level at rho = {rho}"),
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CurveType {
    VerticalLine,
    /// `(C_, C*)`: domain `(0, rho_l)`, `omega ~ sqrt(rho)` at zero.
    Type1i,
    /// `(C*, min(C*+, C_+))`: domain `(0, rho_l)`, `omega -> h_under^-1(level)` at zero.
    Type1ii,
    /// `(C*+, C_+)`: domain `(rho_under_l, rho_l)`.
    Type2,
    /// `[C_+, C*+)`: domain `(0, inf)`.
    Type3,
    /// `(max(C*+, C_+), C^-)`: domain `(rho_under_l, inf)`.
    Type4,
}

impl CurveType {
    pub fn tag(self) -> &'static str {
        match self {
            CurveType::VerticalLine => "vertical-line",
            CurveType::Type1i => "1i",
            CurveType::Type1ii => "1ii",
            CurveType::Type2 => "2",
            CurveType::Type3 => "3",
            CurveType::Type4 => "4",
        }
    }

    /// Type by position of `level` among the constants.
    pub fn classify(c: &LimitConstants, level: f64) -> Self {
        let top = c.c_star_plus.max(c.c_under_plus);
        if level <= c.c_star {
            CurveType::Type1i
        } else if level < c.c_star_plus.min(c.c_under_plus) {
            CurveType::Type1ii
        } else if level > top {
            CurveType::Type4
        } else if c.c_star_plus < c.c_under_plus {
            CurveType::Type2
        } else {
            CurveType::Type3
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EndpointKind {
    Zero,
    Finite(f64),
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelSample {
    pub rho: f64,
    pub omega: f64,
    pub lambda_check: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn close(name: &str, observed: f64, expected: f64, tolerance: f64) -> Self {
        Self { name: name.into(), observed, expected, tolerance, passed: (observed - expected).abs() <= tolerance }
    }

    fn flag(name: &str, observed: f64, passed: bool) -> Self {
        Self { name: name.into(), observed, expected: f64::NAN, tolerance: f64::NAN, passed }
    }
}

#[derive(Debug, Clone)]
pub struct SamplePolicy {
    pub rho_min: f64,
    pub rho_max: f64,
    /// Interior log-spaced points per decade.
    pub per_decade: usize,
    /// Geometric refinement `e (1 +- 10^-k)`, `k = 1..=levels`, toward a finite
    /// endpoint where `omega -> inf`.
    pub refine_infinite: usize,
    /// Same, toward a finite endpoint where `omega -> 0`.
    pub refine_zero: usize,
    /// Smallest rho, one sample per decade below `rho_min`, on curves whose
    /// small-rho limit of omega is finite (types 1ii and 3).
    pub asymptote_rho: f64,
}

impl Default for SamplePolicy {
    fn default() -> Self {
        Self { rho_min: 10f64.powf(-3.5), rho_max: 1e3, per_decade: 2, refine_infinite: 4, refine_zero: 1, asymptote_rho: 1e-7 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelCurve {
    pub level: f64,
    pub curve_type: CurveType,
    pub lower: EndpointKind,
    pub upper: EndpointKind,
    pub rho_ell: Option<f64>,
    pub rho_under_ell: Option<f64>,
    pub samples: Vec<LevelSample>,
    /// Rho values where no crossing was found.
    pub misses: Vec<f64>,
    /// Fitted exponent `e` of `omega ~ rho^e` over the smallest decade (type 1i).
    pub exponent: Option<f64>,
    /// `min` and `max` of `omega / sqrt(rho)` over the three smallest samples (type 1i).
    pub sqrt_window: Option<(f64, f64)>,
    /// `e` in `omega ~ (rho - rho_under_ell)^-e` over the refinement samples.
    pub blowup_exponent: Option<f64>,
    pub separable_fit: Option<SeparableFit>,
    pub checks: Vec<Check>,
}

impl LevelCurve {
    pub fn passed(&self) -> bool {
        self.misses.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn max_omega(&self) -> Option<LevelSample> {
        self.samples.iter().copied().max_by(|a, b| a.omega.total_cmp(&b.omega))
    }
}

fn nearest_constant(c: &LimitConstants, level: f64) -> (&'static str, f64) {
    let names = LimitConstants::names();
    let vals = c.as_array();
    let k = (0..5).min_by(|&a, &b| (vals[a] - level).abs().total_cmp(&(vals[b] - level).abs())).expect("five");
    (names[k], vals[k])
}

/// Traces and classifies the level set; levels within `SEPARATRIX_GAP` of a constant are refused.
pub fn trace_level_set(problem: &Problem, level: f64, policy: &SamplePolicy) -> Result<LevelCurve> {
    let c = problem.constants()?;
    if !(c.c_under < level && level < c.c_bar) {
        return Err(Error::Level { level, reason: format!("outside ({}, {})", c.c_under, c.c_bar) });
    }
    let (name, value) = nearest_constant(&c, level);
    if (level - value).abs() < SEPARATRIX_GAP {
        return Err(Error::Level { level, reason: format!("within {SEPARATRIX_GAP} of {name} = {value}") });
    }
    trace_unchecked(problem, level, policy)
}

/// `inverse(level)` of a nondecreasing function of `omega`, bracketed by doubling.
fn invert_in_omega(mut f: impl FnMut(f64) -> Result<f64>, level: f64) -> Result<f64> {
    let mut lo = 1.0;
    let mut hi = 2.0;
    let mut flo = f(lo)?;
    while flo > level {
        hi = lo;
        lo *= 0.5;
        if lo < OMEGA_SEARCH.0 {
            return Err(Error::Bracket { lo, hi, target: level });
        }
        flo = f(lo)?;
    }
    while f(hi)? < level {
        lo = hi;
        hi *= 2.0;
        if hi > OMEGA_SEARCH.1 {
            return Err(Error::Bracket { lo, hi, target: level });
        }
    }
    invert_monotone(f, level, lo, hi)
}

fn rho_samples(lower: EndpointKind, upper: EndpointKind, policy: &SamplePolicy) -> Vec<f64> {
    let a = match lower {
        EndpointKind::Finite(r) => r.max(policy.rho_min),
        _ => policy.rho_min,
    };
    let b = match upper {
        EndpointKind::Finite(r) => r.min(policy.rho_max),
        _ => policy.rho_max,
    };
    let mut out = Vec::new();
    if !matches!(lower, EndpointKind::Finite(r) if r >= policy.rho_min) {
        out.push(policy.rho_min);
    }
    if !matches!(upper, EndpointKind::Finite(r) if r <= policy.rho_max) {
        out.push(policy.rho_max);
    }
    let k0 = (policy.rho_min.log10() * policy.per_decade as f64).round() as i64;
    let k1 = (policy.rho_max.log10() * policy.per_decade as f64).round() as i64;
    for k in k0..=k1 {
        let r = 10f64.powf(k as f64 / policy.per_decade as f64);
        // stay clear of the refinement points
        if r > a * 1.3 && r < b / 1.3 {
            out.push(r);
        }
    }
    if let EndpointKind::Finite(r) = lower {
        let levels = policy.refine_infinite;
        out.extend((1..=levels).map(|k| r * (1.0 + 10f64.powi(-(k as i32)))));
    }
    if let EndpointKind::Finite(r) = upper {
        out.extend((1..=policy.refine_zero).map(|k| r * (1.0 - 10f64.powi(-(k as i32)))));
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_slope(points: &[(f64, f64)]) -> f64 {
    let m = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x.ln(), b + y.ln()));
    let (mx, my) = (sx / m, sy / m);
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in points {
        num += (x.ln() - mx) * (y.ln() - my);
        den += (x.ln() - mx).powi(2);
    }
    num / den
}

pub(crate) fn trace_unchecked(problem: &Problem, level: f64, policy: &SamplePolicy) -> Result<LevelCurve> {
    let c = problem.constants()?;
    let curve_type = CurveType::classify(&c, level);
    let rho_hi = rho_ell(problem, level)?;
    let rho_lo = rho_under_ell(problem, level)?;
    let mut checks = Vec::new();
    let tol = 1e-6;
    if let Some(r) = rho_hi {
        checks.push(Check::close("lambda_under(rho_ell) = level", problem.lambda_under(r)?, level, tol));
    }
    if let Some(r) = rho_lo {
        checks.push(Check::close("lambda_bar(rho_under_ell) = level", problem.lambda_bar(r)?, level, tol));
    }
    let lower = rho_lo.map_or(EndpointKind::Zero, EndpointKind::Finite);
    let upper = rho_hi.map_or(EndpointKind::Infinite, EndpointKind::Finite);
    let mut curve = LevelCurve {
        level,
        curve_type,
        lower,
        upper,
        rho_ell: rho_hi,
        rho_under_ell: rho_lo,
        samples: Vec::new(),
        misses: Vec::new(),
        exponent: None,
        sqrt_window: None,
        blowup_exponent: None,
        separable_fit: None,
        checks,
    };
    if let (Some(a), Some(b)) = (rho_lo, rho_hi) {
        if (b - a).abs() <= 1e-5 * b {
            let fit = separable_time_fit(problem, b)?;
            curve.checks.push(Check::flag("separable time dependence", fit.residual, fit.residual <= 1e-6));
            curve.curve_type = CurveType::VerticalLine;
            curve.separable_fit = Some(fit);
            return Ok(curve);
        }
    }

    // Sweep from the upper end downward so that omega hints move toward larger values.
    let mut rhos = rho_samples(lower, upper, policy);
    if matches!(curve_type, CurveType::Type1ii | CurveType::Type3) {
        let top = policy.rho_min.log10().ceil() as i32 - 1;
        let bottom = policy.asymptote_rho.log10().round() as i32;
        rhos.extend((bottom..=top).map(|k| 10f64.powi(k)).filter(|&r| r < policy.rho_min / 1.3));
        rhos.sort_by(f64::total_cmp);
    }
    let mut hint = None;
    let mut samples = Vec::with_capacity(rhos.len());
    for &rho in rhos.iter().rev() {
        match omega_ell(problem, level, rho, hint)? {
            Crossing::Root { omega, lambda } => {
                hint = Some(omega);
                samples.push(LevelSample { rho, omega, lambda_check: lambda });
            }
            _ => curve.misses.push(rho),
        }
    }
    samples.reverse();
    curve.misses.reverse();
    let worst = samples.iter().map(|s| (s.lambda_check - level).abs()).fold(0.0, f64::max);
    curve.checks.push(Check::close("sample residual", worst, 0.0, 1e-6 * (1.0 + level.abs())));

    let k = samples.len();
    if k >= 3 {
        if matches!(upper, EndpointKind::Finite(_)) {
            // omega -> 0 toward rho_ell: the refinement sample lies below its neighbour
            let ok = samples[k - 1].omega < samples[k - 2].omega;
            curve.checks.push(Check::flag("omega -> 0 at rho_ell", samples[k - 1].omega, ok));
        }
        if let EndpointKind::Finite(r) = lower {
            // omega -> inf toward rho_under_ell: omega ~ (rho - rho_under_ell)^-e over the refinements
            let near: Vec<(f64, f64)> = samples
                .iter()
                .take(policy.refine_infinite)
                .filter(|s| s.rho > r && s.rho <= r * 1.11)
                .map(|s| (s.rho / r - 1.0, s.omega))
                .collect();
            if near.len() >= 2 {
                let e = -log_slope(&near);
                curve.blowup_exponent = Some(e);
                curve.checks.push(Check::flag("omega -> inf at rho_under_ell", e, e >= 0.25));
            }
        }
    }
    if let (CurveType::Type1i, Some(first)) = (curve_type, samples.first()) {
        let decade: Vec<(f64, f64)> =
            samples.iter().filter(|s| s.rho <= first.rho * 10.0 * (1.0 + 1e-9)).map(|s| (s.rho, s.omega)).collect();
        if decade.len() >= 2 {
            let e = log_slope(&decade);
            curve.exponent = Some(e);
            curve.checks.push(Check::close("small-rho exponent", e, 0.5, 0.1));
        }
        let ratios: Vec<f64> = samples.iter().take(3).map(|s| s.omega / s.rho.sqrt()).collect();
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(0.0, f64::max);
        curve.sqrt_window = Some((lo, hi));
    }
    if matches!(curve_type, CurveType::Type1ii | CurveType::Type3) {
        if let Some(first) = samples.first() {
            let target = invert_in_omega(|w| problem.h_under(w), level)?;
            curve.checks.push(Check::close(
                "omega at smallest rho vs h_under^-1(level)",
                first.omega,
                target,
                2e-2 * (1.0 + target.abs()),
            ));
        }
    }
    if matches!(curve_type, CurveType::Type3 | CurveType::Type4) {
        if let Some(last) = samples.last() {
            let target = invert_in_omega(|w| problem.h_bar(w), level)?;
            curve.checks.push(Check::close(
                "omega at largest rho vs h_bar^-1(level)",
                last.omega,
                target,
                2e-2 * (1.0 + target.abs()),
            ));
        }
    }
    curve.samples = samples;
    Ok(curve)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Empty,
    Full,
    BoundedByCurve,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionReport {
    pub verdict: Verdict,
    pub constants: LimitConstants,
    /// Case 1..=5 by the position of 0 among the constants (bounded verdict only).
    pub case: Option<u8>,
    /// The level curve at 0, skipped when 0 sits on a separatrix.
    pub curve: Option<LevelCurve>,
}

/// Tolerance of the empty/full verdicts.
pub const VERDICT_TOL: f64 = 1e-9;

/// Checks `m_ii = -sum_{j != i} m_ij` on every grid sample.
pub fn validate_mutation(mutation: &MatrixField, grid: &SpatialGrid, time: &TimeGrid) -> Result<()> {
    let n = mutation.n();
    let sampler = mutation.sampler(grid);
    let mut buf = vec![0.0; grid.nodes() * n * n];
    for m in 0..=time.steps() {
        sampler.eval_nodes(time.t(m), &mut buf);
        for k in 0..grid.nodes() {
            let a = &buf[k * n * n..(k + 1) * n * n];
            for i in 0..n {
                let off: f64 = (0..n).filter(|&j| j != i).map(|j| a[i * n + j]).sum();
                let scale = 1.0 + off.abs() + a[i * n + i].abs();
                if (a[i * n + i] + off).abs() > 1e-12 * scale {
                    return Err(Error::Validation(format!(
                        "mutation structure violated: m_{0}{0} = {1} but -sum of row = {2} at x = {3}, t = {4}",
                        i + 1,
                        a[i * n + i],
                        -off,
                        grid.x(k),
                        time.t(m)
                    )));
                }
            }
        }
    }
    Ok(())
}

/// `A = M + diag(c)`.
pub fn mutation_field(mutation: &MatrixField, rates: &[CoefficientEntry]) -> Result<MatrixField> {
    if rates.len() != mutation.n() {
        return Err(Error::Dimension(format!("{} rates for {} components", rates.len(), mutation.n())));
    }
    let mut a = mutation.clone();
    for (i, r) in rates.iter().enumerate() {
        a.add_to_entry(i, i, r)?;
    }
    Ok(a)
}

pub fn region_case(c: &LimitConstants) -> u8 {
    if 0.0 <= c.c_star {
        1
    } else if 0.0 < c.c_star_plus.min(c.c_under_plus) {
        2
    } else if 0.0 >= c.c_star_plus.max(c.c_under_plus) {
        5
    } else if c.c_star_plus < c.c_under_plus {
        3
    } else {
        4
    }
}

/// The persistence region `{lambda < 0}` of the mutation model with `A = M + diag(c)`.
pub fn persistence_region(
    mutation: &MatrixField,
    rates: &[CoefficientEntry],
    diffusion: &DiffusionMatrix,
    grid: &SpatialGrid,
    time: &TimeGrid,
    policy: Option<&SamplePolicy>,
) -> Result<RegionReport> {
    validate_mutation(mutation, grid, time)?;
    let field = mutation_field(mutation, rates)?;
    let problem = Problem::new(field, diffusion.clone(), *grid, *time)?;
    region_of(&problem, policy)
}

/// Verdict for an assembled problem; the boundary `lambda = 0` is traced when a policy is given.
pub fn region_of(problem: &Problem, policy: Option<&SamplePolicy>) -> Result<RegionReport> {
    let c = problem.constants()?;
    if c.c_under >= -VERDICT_TOL {
        return Ok(RegionReport { verdict: Verdict::Empty, constants: c, case: None, curve: None });
    }
    if c.c_bar <= VERDICT_TOL {
        return Ok(RegionReport { verdict: Verdict::Full, constants: c, case: None, curve: None });
    }
    let case = region_case(&c);
    let curve = match policy.map(|p| trace_level_set(problem, 0.0, p)) {
        Some(Ok(curve)) => Some(curve),
        None | Some(Err(Error::Level { .. })) => None,
        Some(Err(e)) => return Err(e),
    };
    Ok(RegionReport { verdict: Verdict::BoundedByCurve, constants: c, case: Some(case), curve })
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub omega: f64,
    pub c_star: f64,
    pub applicable: bool,
    /// Scan points `(rho, lambda)`.
    pub scan: Vec<(f64, f64)>,
    pub rho_under: Option<f64>,
    pub rho_over: Option<f64>,
    /// `C* - min lambda` over the scan.
    pub dip: f64,
    pub rho_at_min: f64,
    pub h_under: f64,
    /// `(lambda - h_under) / sqrt(rho)` at the three smallest scan points.
    pub eta_ratios: Vec<f64>,
    pub eta: f64,
}

/// Scans `rho -> lambda(omega, rho)` for a dip below `C*`.
pub fn nonmonotonicity_probe(problem: &Problem, omega: f64, policy: &SamplePolicy) -> Result<ProbeReport> {
    let c = problem.constants()?;
    let h = problem.h_under(omega)?;
    let mut report = ProbeReport {
        omega,
        c_star: c.c_star,
        applicable: c.c_star - c.c_under > 1e-6,
        scan: Vec::new(),
        rho_under: None,
        rho_over: None,
        dip: f64::NAN,
        rho_at_min: f64::NAN,
        h_under: h,
        eta_ratios: Vec::new(),
        eta: f64::NAN,
    };
    if !report.applicable {
        return Ok(report);
    }
    let per = (2 * policy.per_decade).max(4) as f64;
    let k0 = (policy.rho_min.log10() * per).round() as i64;
    let k1 = (policy.rho_max.log10() * per).round() as i64;
    for k in k0..=k1 {
        let rho = 10f64.powf(k as f64 / per);
        report.scan.push((rho, problem.lambda(omega, rho)?));
    }
    let (imin, &(rmin, lmin)) =
        report.scan.iter().enumerate().min_by(|a, b| a.1 .1.total_cmp(&b.1 .1)).expect("nonempty scan");
    report.dip = c.c_star - lmin;
    report.rho_at_min = rmin;
    let tol = 1e-7;
    if lmin < c.c_star {
        let f = |s: f64| Ok(problem.lambda(omega, s.exp())? - c.c_star);
        if let Some(k) = (0..imin).rev().find(|&k| report.scan[k].1 > c.c_star) {
            let (a, b) = (report.scan[k], report.scan[k + 1]);
            // decreasing branch: solve in -log(rho)
            let g = |u: f64| f(-u);
            let (s, _) = illinois(g, -b.0.ln(), b.1 - c.c_star, -a.0.ln(), a.1 - c.c_star, tol, 1e-12)?;
            report.rho_under = Some((-s).exp());
        }
        if let Some(k) = (imin + 1..report.scan.len()).find(|&k| report.scan[k].1 > c.c_star) {
            let (a, b) = (report.scan[k - 1], report.scan[k]);
            let (s, _) = illinois(f, a.0.ln(), a.1 - c.c_star, b.0.ln(), b.1 - c.c_star, tol, 1e-12)?;
            report.rho_over = Some(s.exp());
        }
    }
    report.eta_ratios = report.scan.iter().take(3).map(|(r, l)| (l - h) / r.sqrt()).collect();
    report.eta = report.eta_ratios.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(report)
}

/// `omega*`: the largest `omega` on the traced `level = C*` curve.
pub fn omega_star(problem: &Problem, policy: &SamplePolicy) -> Result<(f64, LevelCurve)> {
    let c = problem.constants()?;
    if c.c_star - c.c_under <= 1e-6 {
        return Err(Error::Level { level: c.c_star, reason: "C_ = C*, the curve is empty".into() });
    }
    let curve = trace_unchecked(problem, c.c_star, policy)?;
    let top = curve
        .max_omega()
        .ok_or_else(|| Error::Level { level: c.c_star, reason: "no samples on the curve".into() })?;
    Ok((top.omega, curve))
}
