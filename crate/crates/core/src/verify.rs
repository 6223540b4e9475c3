//! The acceptance suite on the embedded fixtures.
//!
//! Each criterion produces a [`CriterionReport`] with one line per check.
//! Solver errors inside a criterion fail that criterion only.

use std::collections::HashMap;
use std::time::Instant;

use serde::Serialize;

use crate::config::{parse_config, ProblemConfig};
use crate::diagnostics::energy_identity;
use crate::error::{Error, Result};
use crate::levelset::{
    nonmonotonicity_probe, omega_star, region_of, trace_level_set, CurveType, SamplePolicy, Verdict,
};
use crate::parabolic::adjoint_eigenpair;
use crate::problem::Problem;

/// Fixture name and config text.
pub const FIXTURES: &[(&str, &str)] = &[
    ("constant", include_str!("../fixtures/constant.cfg")),
    ("separable", include_str!("../fixtures/separable.cfg")),
    ("separable_scalar", include_str!("../fixtures/separable_scalar.cfg")),
    ("x_independent", include_str!("../fixtures/x_independent.cfg")),
    ("t_independent", include_str!("../fixtures/t_independent.cfg")),
    ("generic", include_str!("../fixtures/generic.cfg")),
    ("regime", include_str!("../fixtures/regime.cfg")),
    ("time_dominant", include_str!("../fixtures/time_dominant.cfg")),
    ("mutation_empty", include_str!("../fixtures/mutation_empty.cfg")),
    ("mutation_full", include_str!("../fixtures/mutation_full.cfg")),
    ("mutation_bounded", include_str!("../fixtures/mutation_bounded.cfg")),
    ("mutation_invalid", include_str!("../fixtures/mutation_invalid.cfg")),
];

/// `(omega, rho, lambda)` of the scalar problem with `a = cos(2 pi t) cos(pi x)`, `d = 1`,
/// from a 24-mode cosine Galerkin system with an RK4 monodromy (see `tests/oracles.rs`).
pub const SEPARABLE_SCALAR: &[(f64, f64, f64)] = &[(1.0, 1.0, -0.017999175251815), (0.5, 0.1, -0.022808137534235)];

/// Levels traced on the generic fixture, one per type.
pub const GENERIC_LEVELS: [(f64, CurveType); 4] =
    [(-1.56, CurveType::Type1i), (-1.48, CurveType::Type1ii), (-1.33, CurveType::Type2), (-1.12, CurveType::Type4)];

/// Level traced on the time-dominant fixture.
pub const TIME_DOMINANT_LEVEL: f64 = -1.13;

pub const TITLES: [&str; 12] = [
    "exact eigenvalue for constant coupling",
    "separable oracle and its grid convergence",
    "monotone in omega",
    "ordering of the limit constants",
    "global bounds C_ <= lambda <= C^-",
    "lower bound by the ergodic constant",
    "single-parameter limits",
    "regime transition as rho -> 0",
    "forward/adjoint energy identity",
    "level-set classification",
    "non-monotone dependence on rho",
    "persistence region of the mutation model",
];

pub fn fixture_text(name: &str) -> Result<&'static str> {
    FIXTURES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| Error::Invalid(format!("no fixture named {name}")))
}

pub fn fixture(name: &str) -> Result<ProblemConfig> {
    parse_config(fixture_text(name)?, None)
}

pub fn fixture_problem(name: &str) -> Result<Problem> {
    fixture(name)?.problem()
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: usize,
    pub title: &'static str,
    pub passed: bool,
    pub lines: Vec<String>,
    pub seconds: f64,
}

impl CriterionReport {
    pub fn summary(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!("[{tag}] {:>2} {} ({:.1} s)", self.id, self.title, self.seconds)
    }
}

#[derive(Default)]
struct Sheet {
    lines: Vec<String>,
    passed: bool,
}

impl Sheet {
    /// `observed <= limit`
    fn at_most(&mut self, what: &str, observed: f64, limit: f64) -> bool {
        let ok = observed <= limit;
        self.line(ok, format!("{what}: {observed:.3e} <= {limit:.1e}"));
        ok
    }

    fn at_least(&mut self, what: &str, observed: f64, limit: f64) -> bool {
        let ok = observed >= limit;
        self.line(ok, format!("{what}: {observed:.6e} >= {limit:.3e}"));
        ok
    }

    fn flag(&mut self, what: impl Into<String>, ok: bool) -> bool {
        self.line(ok, what.into());
        ok
    }

    fn note(&mut self, what: impl Into<String>) {
        self.lines.push(format!("       {}", what.into()));
    }

    fn line(&mut self, ok: bool, text: String) {
        self.passed &= ok;
        self.lines.push(format!("{} {text}", if ok { "  ok " } else { "  FAIL" }));
    }
}

/// Runs criterion `id` (1..=12).
pub fn run(id: usize) -> CriterionReport {
    let start = Instant::now();
    let mut sheet = Sheet { lines: Vec::new(), passed: true };
    let outcome = match id {
        1 => constant_coupling(&mut sheet),
        2 => separable(&mut sheet),
        3 => monotone_in_omega(&mut sheet),
        4 => constant_ordering(&mut sheet),
        5 => global_bounds(&mut sheet),
        6 => ergodic_lower_bound(&mut sheet),
        7 => single_limits(&mut sheet),
        8 => regime_transition(&mut sheet),
        9 => identity(&mut sheet),
        10 => level_sets(&mut sheet),
        11 => nonmonotone(&mut sheet),
        12 => persistence(&mut sheet),
        _ => Err(Error::Invalid(format!("no criterion {id}"))),
    };
    if let Err(e) = outcome {
        sheet.flag(format!("error: {e}"), false);
    }
    let seconds = start.elapsed().as_secs_f64();
    if id == 1 {
        sheet.at_most("wall time [s]", seconds, 5.0);
    }
    CriterionReport {
        id,
        title: TITLES.get(id.wrapping_sub(1)).copied().unwrap_or("unknown"),
        passed: sheet.passed,
        lines: sheet.lines,
        seconds,
    }
}

pub fn run_all() -> Vec<CriterionReport> {
    (1..=TITLES.len()).map(run).collect()
}

fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| 10f64.powf(a + (b - a) * k as f64 / (n - 1) as f64)).collect()
}

fn constant_coupling(s: &mut Sheet) -> Result<()> {
    let p = fixture_problem("constant")?;
    let mut worst: f64 = 0.0;
    for omega in [0.1, 1.0, 10.0] {
        for rho in [0.1, 1.0, 10.0] {
            worst = worst.max((p.lambda(omega, rho)? + 1.0).abs());
        }
    }
    s.at_most("max |lambda + 1| over 9 points", worst, 1e-6);
    Ok(())
}

fn separable(s: &mut Sheet) -> Result<()> {
    let coarse = fixture_problem("separable")?;
    let mut cfg = fixture("separable")?;
    cfg.nodes = 2 * cfg.nodes - 1;
    cfg.steps *= 2;
    let fine = cfg.problem()?;
    for &(omega, rho, scalar) in SEPARABLE_SCALAR {
        // the Perron value of [[0, 1], [1, 0]] is 1
        let target = scalar - 1.0;
        let d0 = (coarse.lambda(omega, rho)? - target).abs();
        let d1 = (fine.lambda(omega, rho)? - target).abs();
        s.at_most(&format!("defect at ({omega}, {rho})"), d0, 5e-4);
        s.at_least(&format!("defect ratio after halving h and dt at ({omega}, {rho})"), d0 / d1, 3.0);
    }
    Ok(())
}

fn monotone_in_omega(s: &mut Sheet) -> Result<()> {
    // one time resolution per row, fine enough for the smallest omega
    let mut cfg = fixture("generic")?;
    cfg.steps = 2048;
    let mut p = cfg.problem()?;
    p.solve.max_physical_step = f64::INFINITY;
    let omegas = logspace(-2.0, 2.0, 20);
    for rho in [0.05, 0.5, 5.0] {
        let values = omegas.iter().map(|&w| p.lambda(w, rho)).collect::<Result<Vec<_>>>()?;
        let drop = values.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);
        s.at_most(&format!("largest decrease at rho = {rho}"), drop.max(0.0), 1e-8);
        s.note(format!("lambda from {:.6} to {:.6}", values[0], values[values.len() - 1]));
    }
    Ok(())
}

fn constant_ordering(s: &mut Sheet) -> Result<()> {
    let tol = 1e-6;
    let (mut star_first, mut under_first) = (None, None);
    for (name, _) in FIXTURES.iter().filter(|(n, _)| *n != "mutation_invalid") {
        let c = fixture_problem(name)?.constants()?;
        let ok = c.c_under <= c.c_star + tol
            && c.c_star <= c.c_star_plus.min(c.c_under_plus) + tol
            && c.c_star_plus.max(c.c_under_plus) <= c.c_bar + tol;
        s.flag(
            format!(
                "{name}: {:.6} <= {:.6} <= ({:.6}, {:.6}) <= {:.6}",
                c.c_under, c.c_star, c.c_star_plus, c.c_under_plus, c.c_bar
            ),
            ok,
        );
        if c.c_star_plus < c.c_under_plus - tol {
            star_first.get_or_insert(*name);
        }
        if c.c_under_plus < c.c_star_plus - tol {
            under_first.get_or_insert(*name);
        }
    }
    s.flag(format!("C*+ < C_+ realized by {star_first:?}"), star_first.is_some());
    s.flag(format!("C_+ < C*+ realized by {under_first:?}"), under_first.is_some());
    Ok(())
}

fn global_bounds(s: &mut Sheet) -> Result<()> {
    let p = fixture_problem("generic")?;
    let c = p.constants()?;
    let grid = logspace(-2.0, 2.0, 8);
    let (mut low, mut high) = (f64::INFINITY, f64::INFINITY);
    for &omega in &grid {
        for &rho in &grid {
            let l = p.lambda(omega, rho)?;
            low = low.min(l - c.c_under);
            high = high.min(c.c_bar - l);
        }
    }
    s.at_least("min lambda - C_ over the 8x8 grid", low, -1e-3);
    s.at_least("min C^- - lambda over the 8x8 grid", high, -1e-3);
    Ok(())
}

struct Critical<'a> {
    problem: &'a Problem,
    cache: HashMap<u64, f64>,
}

impl Critical<'_> {
    fn at(&mut self, s: &mut Sheet, theta: f64) -> Result<f64> {
        if let Some(c) = self.cache.get(&theta.to_bits()) {
            return Ok(*c);
        }
        let r = self.problem.critical(theta)?;
        s.note(format!("C({theta:.4}) = {:.6} ({:?}, {} periods)", r.c, r.status, r.periods));
        self.cache.insert(theta.to_bits(), r.c);
        Ok(r.c)
    }
}

fn ergodic_lower_bound(s: &mut Sheet) -> Result<()> {
    let p = fixture_problem("generic")?;
    let mut crit = Critical { problem: &p, cache: HashMap::new() };
    let mut worst = f64::INFINITY;
    for omega in [0.3, 1.0, 3.0] {
        for rho in [0.1, 1.0, 10.0] {
            let gap = p.lambda(omega, rho)? - crit.at(s, omega / f64::sqrt(rho))?;
            worst = worst.min(gap);
        }
    }
    s.at_least("min lambda - C(omega / sqrt(rho)) over 9 points", worst, -5e-3);
    let thetas = [0.1, 0.3, 1.0, 3.0, 10.0];
    let values = thetas.iter().map(|&t| crit.at(s, t)).collect::<Result<Vec<_>>>()?;
    let drop = values.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);
    s.at_most("largest decrease of C over theta in {0.1, 0.3, 1, 3, 10}", drop.max(0.0), 2e-3);
    Ok(())
}

fn single_limits(s: &mut Sheet) -> Result<()> {
    let p = fixture_problem("generic")?;
    for rho in [0.1, 1.0] {
        let bar = p.lambda_bar(rho)?;
        let under = p.lambda_under(rho)?;
        s.at_most(&format!("|lambda(1e3, {rho}) - lambda_bar|"), (p.lambda(1e3, rho)? - bar).abs(), 2e-2);
        s.at_most(&format!("|lambda(1e-3, {rho}) - lambda_under|"), (p.lambda(1e-3, rho)? - under).abs(), 2e-2);
    }
    for omega in [0.5, 2.0] {
        let high = p.h_bar(omega)?;
        s.at_most(&format!("|lambda({omega}, 1e3) - h_bar|"), (p.lambda(omega, 1e3)? - high).abs(), 2e-2);
    }
    // the generic wells are steep: the gap closes like 2.3 sqrt(rho) and is
    // still 0.023 at rho = 1e-4, so the small-rho limit is checked on the
    // milder heterogeneous fixture and only reported for the generic one
    let mild = fixture_problem("time_dominant")?;
    for omega in [0.5, 2.0] {
        let low = mild.h_under(omega)?;
        s.at_most(&format!("|lambda({omega}, 1e-4) - h_under| (time_dominant)"), (mild.lambda(omega, 1e-4)? - low).abs(), 2e-2);
    }
    let low = p.h_under(0.5)?;
    let gaps = [1e-4, 1e-5, 1e-6].map(|rho| p.lambda(0.5, rho).map(|l| (l - low).abs()));
    if let [Ok(a), Ok(b), Ok(c)] = gaps {
        s.note(format!("generic |lambda(0.5, rho) - h_under| at rho = 1e-4, 1e-5, 1e-6: {a:.3e} {b:.3e} {c:.3e}"));
    }
    Ok(())
}

fn regime_transition(s: &mut Sheet) -> Result<()> {
    let p = fixture_problem("regime")?;
    let c = p.constants()?;
    let c1 = p.critical(1.0)?;
    s.note(format!("C_ = {:.6}, C* = {:.6}, C(1) = {:.6} ({:?})", c.c_under, c.c_star, c1.c, c1.status));
    let rhos = [1e-1, 1e-2, 1e-3];
    let mut rows: [Vec<f64>; 3] = Default::default();
    for &rho in &rhos {
        rows[0].push((p.lambda(rho, rho)? - c.c_under).abs());
        rows[1].push((p.lambda(rho.powf(0.25), rho)? - c.c_star).abs());
        rows[2].push((p.lambda(rho.sqrt(), rho)? - c1.c).abs());
    }
    let names = ["|lambda(rho, rho) - C_|", "|lambda(rho^1/4, rho) - C*|", "|lambda(rho^1/2, rho) - C(1)|"];
    for (name, row) in names.iter().zip(&rows) {
        let decreasing = row.windows(2).all(|w| w[1] < w[0]);
        s.flag(format!("{name} decreasing: {:.3e} {:.3e} {:.3e}", row[0], row[1], row[2]), decreasing);
        s.at_most(&format!("{name} at rho = 1e-3"), row[2], 3e-2);
    }
    Ok(())
}

fn identity(s: &mut Sheet) -> Result<()> {
    for (name, limit) in [("generic", 1e-4), ("t_independent", 1e-8)] {
        let p = fixture_problem(name)?;
        let mut opts = p.solve.clone();
        opts.eigenfunction = true;
        let pair = adjoint_eigenpair(&p.field, &p.diffusion, &p.grid, &p.time, 1.0, 1.0, &opts)?;
        let r = energy_identity(&pair, &p.field, &p.diffusion, &p.grid, &p.time)?;
        s.note(format!("{name}: lhs {:.9e}, rhs {:.9e}", r.lhs, r.rhs));
        s.at_most(&format!("{name}: relative residual at (1, 1)"), r.relative, limit);
    }
    Ok(())
}

fn report_curve(s: &mut Sheet, name: &str, p: &Problem, level: f64, expected: CurveType) -> Result<()> {
    let curve = trace_level_set(p, level, &SamplePolicy::default())?;
    s.flag(
        format!("{name} level {level}: type {} (expected {})", curve.curve_type.tag(), expected.tag()),
        curve.curve_type == expected,
    );
    for c in &curve.checks {
        let text = if c.expected.is_nan() {
            format!("    {}: {:.6e}", c.name, c.observed)
        } else {
            format!("    {}: {:.9e} vs {:.9e} (tol {:.1e})", c.name, c.observed, c.expected, c.tolerance)
        };
        s.flag(text, c.passed);
    }
    s.flag(format!("    {} samples, missed rho {:?}", curve.samples.len(), curve.misses), curve.misses.is_empty());
    if expected == CurveType::Type1i {
        let e = curve.exponent.unwrap_or(f64::NAN);
        s.flag(format!("    fitted small-rho exponent {e:.4} in [0.4, 0.6]"), (0.4..=0.6).contains(&e));
    }
    Ok(())
}

fn level_sets(s: &mut Sheet) -> Result<()> {
    let p = fixture_problem("generic")?;
    let c = p.constants()?;
    s.flag(
        "generic: C_ < C* < C*+ < C_+ < C^-",
        c.c_under < c.c_star && c.c_star < c.c_star_plus && c.c_star_plus < c.c_under_plus && c.c_under_plus < c.c_bar,
    );
    for (level, ty) in GENERIC_LEVELS {
        report_curve(s, "generic", &p, level, ty)?;
    }
    let q = fixture_problem("time_dominant")?;
    let c = q.constants()?;
    s.flag("time_dominant: C_+ < C*+", c.c_under_plus < c.c_star_plus);
    report_curve(s, "time_dominant", &q, TIME_DOMINANT_LEVEL, CurveType::Type3)
}

fn nonmonotone(s: &mut Sheet) -> Result<()> {
    let p = fixture_problem("generic")?;
    let policy = SamplePolicy::default();
    let (top, _) = omega_star(&p, &policy)?;
    let omega = 0.5 * top;
    s.note(format!("omega* = {top:.6}, probing at omega = {omega:.6}"));
    let scan = SamplePolicy { rho_min: 1e-4, rho_max: 1e3, ..policy };
    let r = nonmonotonicity_probe(&p, omega, &scan)?;
    s.flag(format!("C_ < C*: {:.6} < {:.6}", p.constants()?.c_under, r.c_star), r.applicable);
    match (r.rho_under, r.rho_over) {
        (Some(a), Some(b)) => {
            s.flag(format!("crossings rho_under = {a:.6e} < rho_over = {b:.6e}"), a < b);
            s.at_most("|lambda(omega, rho_under) - C*|", (p.lambda(omega, a)? - r.c_star).abs(), 1e-5);
            s.at_most("|lambda(omega, rho_over) - C*|", (p.lambda(omega, b)? - r.c_star).abs(), 1e-5);
        }
        other => {
            s.flag(format!("crossings of C* found: {other:?}"), false);
        }
    }
    s.at_least(&format!("dip C* - min lambda (at rho = {:.3e})", r.rho_at_min), r.dip, 1e-3);
    s.at_least(&format!("eta from {:?}", r.eta_ratios), r.eta, f64::MIN_POSITIVE);
    Ok(())
}

fn persistence(s: &mut Sheet) -> Result<()> {
    for (name, expected, case) in [
        ("mutation_empty", Verdict::Empty, None),
        ("mutation_full", Verdict::Full, None),
        ("mutation_bounded", Verdict::BoundedByCurve, Some(1)),
    ] {
        let r = region_of(&fixture_problem(name)?, None)?;
        s.flag(
            format!("{name}: {:?} case {:?} (expected {expected:?} case {case:?})", r.verdict, r.case),
            r.verdict == expected && r.case == case,
        );
    }
    match fixture_problem("mutation_invalid") {
        Err(Error::Validation(msg)) => s.flag(format!("mutation_invalid rejected: {msg}"), true),
        Err(e) => s.flag(format!("mutation_invalid rejected for another reason: {e}"), false),
        Ok(_) => s.flag("mutation_invalid accepted", false),
    };
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_fixture_parses() {
        for (name, _) in FIXTURES {
            fixture(name).unwrap();
        }
    }
}
