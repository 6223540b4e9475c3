//! Sectioned key-value configuration.
//!
//! ```text
//! [problem]
//! n = 2
//! length = 1
//! diffusion = 1, 2
//!
//! [grid]
//! nodes = 201
//! steps = 512
//!
//! # a_11 = cos(pi x) + 0.5 sin(2 pi t)
//! [entry.1.1]
//! term = 1, 1, const
//! term = 0.5, 0, sin, 1
//!
//! [entry.1.2]
//! term = 1, 0, const
//! csv = coupling.csv
//!
//! [solve]
//! omega = 1
//! rho = 0.1
//!
//! [sweep]
//! omega = logspace(-2, 2, 8)
//! rho = 0.05, 0.5, 5
//!
//! [levelset]
//! level = -1.2
//!
//! [output]
//! dir = out
//! ```
//!
//! A term `c, k, cos, m` is `c cos(k pi x / L) cos(2 pi m t)`. Indices are
//! 1-based and `(j, i)` may stand for `(i, j)`. A mutation model replaces the
//! `[entry.i.j]` sections by `[mutation.i.j]` and `[rate.i]`; the coupling
//! matrix is then `M + diag(c)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::coefficients::{CoefficientEntry, DiffusionMatrix, FourierTerm, MatrixField, Table, TimeMode};
use crate::error::{Error, Result};
use crate::grid::{SpatialGrid, TimeGrid};
use crate::levelset::{mutation_field, validate_mutation, SamplePolicy};
use crate::problem::Problem;

pub const DEFAULT_NODES: usize = 201;
pub const DEFAULT_STEPS: usize = 512;

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct EntrySpec {
    pub terms: Vec<FourierTerm>,
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemConfig {
    pub n: usize,
    pub length: f64,
    pub diffusion: Vec<f64>,
    pub nodes: usize,
    pub steps: usize,
    /// Keys are 0-based with `i <= j`.
    pub entries: BTreeMap<(usize, usize), EntrySpec>,
    pub mutation: BTreeMap<(usize, usize), EntrySpec>,
    pub rates: BTreeMap<usize, EntrySpec>,
    pub tol: Option<f64>,
    pub max_cycles: Option<usize>,
    pub omega: Option<f64>,
    pub rho: Option<f64>,
    pub theta: Option<f64>,
    pub sweep_omega: Vec<f64>,
    pub sweep_rho: Vec<f64>,
    pub sweep_theta: Vec<f64>,
    pub levels: Vec<f64>,
    pub rho_min: Option<f64>,
    pub rho_max: Option<f64>,
    pub output: Option<PathBuf>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            n: 0,
            length: 1.0,
            diffusion: Vec::new(),
            nodes: DEFAULT_NODES,
            steps: DEFAULT_STEPS,
            entries: BTreeMap::new(),
            mutation: BTreeMap::new(),
            rates: BTreeMap::new(),
            tol: None,
            max_cycles: None,
            omega: None,
            rho: None,
            theta: None,
            sweep_omega: Vec::new(),
            sweep_rho: Vec::new(),
            sweep_theta: Vec::new(),
            levels: Vec::new(),
            rho_min: None,
            rho_max: None,
            output: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    None,
    Problem,
    Grid,
    Entry(usize, usize),
    Mutation(usize, usize),
    Rate(usize),
    Solve,
    Sweep,
    Levelset,
    Output,
}

struct Parser<'a> {
    base: Option<&'a Path>,
    errors: Vec<String>,
    line: usize,
}

impl Parser<'_> {
    fn err(&mut self, msg: impl std::fmt::Display) {
        self.errors.push(format!("line {}: {msg}", self.line));
    }

    fn float(&mut self, key: &str, v: &str) -> Option<f64> {
        match v.trim().parse::<f64>() {
            Ok(x) if x.is_finite() => Some(x),
            _ => {
                self.err(format!("{key}: expected a number, got '{}'", v.trim()));
                None
            }
        }
    }

    fn uint(&mut self, key: &str, v: &str) -> Option<usize> {
        match v.trim().parse::<usize>() {
            Ok(x) => Some(x),
            Err(_) => {
                self.err(format!("{key}: expected a nonnegative integer, got '{}'", v.trim()));
                None
            }
        }
    }

    fn list(&mut self, key: &str, v: &str) -> Vec<f64> {
        let v = v.trim();
        if let Some(inner) = v.strip_prefix("logspace(").and_then(|r| r.strip_suffix(')')) {
            let parts: Vec<&str> = inner.split(',').collect();
            if parts.len() != 3 {
                self.err(format!("{key}: logspace takes (lo_exp, hi_exp, count)"));
                return Vec::new();
            }
            let (a, b) = (self.float(key, parts[0]), self.float(key, parts[1]));
            let c = self.uint(key, parts[2]);
            return match (a, b, c) {
                (Some(a), Some(b), Some(c)) if c >= 2 => {
                    (0..c).map(|k| 10f64.powf(a + (b - a) * k as f64 / (c - 1) as f64)).collect()
                }
                (Some(a), Some(_), Some(1)) => vec![10f64.powf(a)],
                (_, _, Some(0)) => {
                    self.err(format!("{key}: logspace count must be positive"));
                    Vec::new()
                }
                _ => Vec::new(),
            };
        }
        v.split(',').filter_map(|s| self.float(key, s)).collect()
    }

    fn term(&mut self, v: &str) -> Option<FourierTerm> {
        let parts: Vec<&str> = v.split(',').map(str::trim).collect();
        if parts.len() < 3 {
            self.err("term: expected 'coeff, k, const' or 'coeff, k, cos|sin, m'");
            return None;
        }
        let coeff = self.float("term", parts[0])?;
        let k = self.uint("term", parts[1])? as u32;
        let mode = match (parts[2], parts.get(3)) {
            ("const", None) => TimeMode::Constant,
            (kind @ ("cos" | "sin"), Some(m)) => {
                let m = self.uint("term", m)? as u32;
                if m == 0 {
                    self.err("term: time frequency must be at least 1");
                    return None;
                }
                if kind == "cos" {
                    TimeMode::Cos(m)
                } else {
                    TimeMode::Sin(m)
                }
            }
            _ => {
                self.err(format!("term: unknown time mode '{}'", parts[2..].join(", ")));
                return None;
            }
        };
        if parts.len() > 4 {
            self.err("term: too many fields");
            return None;
        }
        Some(FourierTerm::new(coeff, k, mode))
    }

    fn csv_path(&mut self, v: &str) -> Option<PathBuf> {
        let p = PathBuf::from(v.trim());
        let full = match self.base {
            Some(b) if p.is_relative() => b.join(&p),
            _ => p.clone(),
        };
        if !full.exists() {
            self.err(format!("csv: file '{}' does not exist", full.display()));
            return None;
        }
        Some(full)
    }
}

fn index(s: &str) -> Option<usize> {
    s.parse::<usize>().ok().filter(|&i| i >= 1).map(|i| i - 1)
}

fn parse_section(name: &str) -> Option<Section> {
    let parts: Vec<&str> = name.split('.').collect();
    Some(match parts.as_slice() {
        ["problem"] => Section::Problem,
        ["grid"] => Section::Grid,
        ["solve"] => Section::Solve,
        ["sweep"] => Section::Sweep,
        ["levelset"] => Section::Levelset,
        ["output"] => Section::Output,
        ["entry", i, j] => Section::Entry(index(i)?, index(j)?),
        ["mutation", i, j] => Section::Mutation(index(i)?, index(j)?),
        ["rate", i] => Section::Rate(index(i)?),
        _ => return None,
    })
}

/// Parses config text; relative CSV paths are resolved against `base`.
/// Every problem found is reported, each with its line number.
pub fn parse_config(text: &str, base: Option<&Path>) -> Result<ProblemConfig> {
    let mut cfg = ProblemConfig::default();
    let mut p = Parser { base, errors: Vec::new(), line: 0 };
    let mut section = Section::None;
    let mut seen_sections: Vec<String> = Vec::new();
    let mut n_line = 0;
    let mut entry_lines: Vec<((usize, usize), usize)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        p.line = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            let name = name.trim();
            if seen_sections.iter().any(|s| s == name) {
                p.err(format!("section [{name}] appears twice"));
            }
            seen_sections.push(name.to_string());
            section = match parse_section(name) {
                Some(s) => s,
                None => {
                    p.err(format!("unknown section [{name}]"));
                    Section::None
                }
            };
            match section {
                Section::Entry(i, j) => {
                    let key = (i.min(j), i.max(j));
                    if cfg.entries.insert(key, EntrySpec::default()).is_some() {
                        p.err(format!("entry ({}, {}) given twice (symmetry implies the other)", i + 1, j + 1));
                    }
                    entry_lines.push((key, p.line));
                    section = Section::Entry(key.0, key.1);
                }
                Section::Mutation(i, j) => {
                    let key = (i.min(j), i.max(j));
                    if cfg.mutation.insert(key, EntrySpec::default()).is_some() {
                        p.err(format!("mutation entry ({}, {}) given twice", i + 1, j + 1));
                    }
                    entry_lines.push((key, p.line));
                    section = Section::Mutation(key.0, key.1);
                }
                Section::Rate(i) => {
                    cfg.rates.insert(i, EntrySpec::default());
                    entry_lines.push(((i, i), p.line));
                }
                _ => {}
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            p.err(format!("expected 'key = value', got '{line}'"));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        match (section, key) {
            (Section::Problem, "n") => {
                n_line = p.line;
                cfg.n = p.uint(key, value).unwrap_or(0);
            }
            (Section::Problem, "length") => {
                if let Some(l) = p.float(key, value) {
                    if l <= 0.0 {
                        p.err("length must be positive");
                    }
                    cfg.length = l;
                }
            }
            (Section::Problem, "diffusion") => {
                cfg.diffusion = p.list(key, value);
                if cfg.diffusion.iter().any(|&d| d <= 0.0) {
                    p.err("diffusion must be positive");
                }
            }
            (Section::Grid, "nodes") => {
                cfg.nodes = p.uint(key, value).unwrap_or(DEFAULT_NODES);
                if cfg.nodes < 3 {
                    p.err("nodes must be at least 3");
                }
            }
            (Section::Grid, "steps") => {
                cfg.steps = p.uint(key, value).unwrap_or(DEFAULT_STEPS);
                if cfg.steps < 2 {
                    p.err("steps must be at least 2");
                }
            }
            (Section::Entry(i, j) | Section::Mutation(i, j), "term") => {
                if let Some(t) = p.term(value) {
                    let map = if matches!(section, Section::Entry(..)) { &mut cfg.entries } else { &mut cfg.mutation };
                    map.get_mut(&(i, j)).expect("created with the section").terms.push(t);
                }
            }
            (Section::Entry(i, j) | Section::Mutation(i, j), "csv") => {
                let path = p.csv_path(value);
                let map = if matches!(section, Section::Entry(..)) { &mut cfg.entries } else { &mut cfg.mutation };
                let e = map.get_mut(&(i, j)).expect("created with the section");
                if e.csv.is_some() {
                    p.err("csv given twice for one entry");
                }
                e.csv = path;
            }
            (Section::Rate(i), "term") => {
                if let Some(t) = p.term(value) {
                    cfg.rates.get_mut(&i).expect("created with the section").terms.push(t);
                }
            }
            (Section::Rate(i), "csv") => {
                let path = p.csv_path(value);
                cfg.rates.get_mut(&i).expect("created with the section").csv = path;
            }
            (Section::Solve, "tol") => cfg.tol = p.float(key, value).filter(|t| *t > 0.0),
            (Section::Solve, "max_cycles") => cfg.max_cycles = p.uint(key, value),
            (Section::Solve, "omega") => cfg.omega = p.float(key, value),
            (Section::Solve, "rho") => cfg.rho = p.float(key, value),
            (Section::Solve, "theta") => cfg.theta = p.float(key, value),
            (Section::Sweep, "omega") => cfg.sweep_omega = p.list(key, value),
            (Section::Sweep, "rho") => cfg.sweep_rho = p.list(key, value),
            (Section::Sweep, "theta") => cfg.sweep_theta = p.list(key, value),
            (Section::Levelset, "level") => cfg.levels = p.list(key, value),
            (Section::Levelset, "rho_min") => cfg.rho_min = p.float(key, value),
            (Section::Levelset, "rho_max") => cfg.rho_max = p.float(key, value),
            (Section::Output, "dir") => cfg.output = Some(PathBuf::from(value)),
            (Section::None, _) => p.err(format!("key '{key}' outside any section")),
            _ => p.err(format!("unknown key '{key}' in this section")),
        }
    }
    // cross-field checks
    p.line = n_line;
    if cfg.n == 0 {
        p.err("[problem] n must be a positive integer");
    } else {
        if cfg.diffusion.len() != cfg.n {
            p.err(format!("diffusion lists {} rates for n = {}", cfg.diffusion.len(), cfg.n));
        }
        for &((i, j), line) in &entry_lines {
            if i >= cfg.n || j >= cfg.n {
                p.line = line;
                p.err(format!("index ({}, {}) outside n = {}", i + 1, j + 1, cfg.n));
            }
        }
    }
    p.line = 0;
    if !cfg.mutation.is_empty() && !cfg.entries.is_empty() {
        p.err("give either [entry.i.j] or [mutation.i.j] sections, not both");
    }
    if cfg.mutation.is_empty() && !cfg.rates.is_empty() {
        p.err("[rate.i] sections need a mutation matrix");
    }
    for (k, s) in cfg.entries.values().chain(cfg.mutation.values()).chain(cfg.rates.values()).enumerate() {
        if s.terms.is_empty() && s.csv.is_none() {
            p.err(format!("coefficient section #{} has neither terms nor csv", k + 1));
        }
    }
    if p.errors.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(p.errors))
    }
}

pub fn load_config(path: &Path) -> Result<ProblemConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, path.parent())
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

fn write_entry(out: &mut String, header: &str, e: &EntrySpec) {
    let _ = writeln!(out, "\n[{header}]");
    for t in &e.terms {
        let mode = match t.t_mode {
            TimeMode::Constant => "const".to_string(),
            TimeMode::Cos(m) => format!("cos, {m}"),
            TimeMode::Sin(m) => format!("sin, {m}"),
        };
        let _ = writeln!(out, "term = {:?}, {}, {mode}", t.coeff, t.x_mode);
    }
    if let Some(p) = &e.csv {
        let _ = writeln!(out, "csv = {}", p.display());
    }
}

/// Canonical text; `parse_config(serialize_config(c)) == c`.
pub fn serialize_config(cfg: &ProblemConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[problem]\nn = {}\nlength = {:?}\ndiffusion = {}", cfg.n, cfg.length, fmt_list(&cfg.diffusion));
    let _ = writeln!(out, "\n[grid]\nnodes = {}\nsteps = {}", cfg.nodes, cfg.steps);
    for (&(i, j), e) in &cfg.entries {
        write_entry(&mut out, &format!("entry.{}.{}", i + 1, j + 1), e);
    }
    for (&(i, j), e) in &cfg.mutation {
        write_entry(&mut out, &format!("mutation.{}.{}", i + 1, j + 1), e);
    }
    for (&i, e) in &cfg.rates {
        write_entry(&mut out, &format!("rate.{}", i + 1), e);
    }
    let mut solve = String::new();
    if let Some(v) = cfg.tol {
        let _ = writeln!(solve, "tol = {v:?}");
    }
    if let Some(v) = cfg.max_cycles {
        let _ = writeln!(solve, "max_cycles = {v}");
    }
    for (k, v) in [("omega", cfg.omega), ("rho", cfg.rho), ("theta", cfg.theta)] {
        if let Some(v) = v {
            let _ = writeln!(solve, "{k} = {v:?}");
        }
    }
    if !solve.is_empty() {
        let _ = write!(out, "\n[solve]\n{solve}");
    }
    let mut sweep = String::new();
    for (k, v) in [("omega", &cfg.sweep_omega), ("rho", &cfg.sweep_rho), ("theta", &cfg.sweep_theta)] {
        if !v.is_empty() {
            let _ = writeln!(sweep, "{k} = {}", fmt_list(v));
        }
    }
    if !sweep.is_empty() {
        let _ = write!(out, "\n[sweep]\n{sweep}");
    }
    let mut level = String::new();
    if !cfg.levels.is_empty() {
        let _ = writeln!(level, "level = {}", fmt_list(&cfg.levels));
    }
    for (k, v) in [("rho_min", cfg.rho_min), ("rho_max", cfg.rho_max)] {
        if let Some(v) = v {
            let _ = writeln!(level, "{k} = {v:?}");
        }
    }
    if !level.is_empty() {
        let _ = write!(out, "\n[levelset]\n{level}");
    }
    if let Some(d) = &cfg.output {
        let _ = write!(out, "\n[output]\ndir = {}\n", d.display());
    }
    out
}

/// Reads a table with header `x,t0,t1,...` and one row per spatial node.
pub fn load_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Config(vec![format!("{}: empty table", path.display())]))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"x") || cols.len() < 3 {
        return Err(Error::Config(vec![format!("{}: header must be 'x,t0,t1,...'", path.display())]));
    }
    let steps = cols.len() - 2;
    let mut x = Vec::new();
    let mut values = Vec::new();
    for (k, l) in lines.enumerate() {
        let row: std::result::Result<Vec<f64>, _> = l.split(',').map(|s| s.trim().parse::<f64>()).collect();
        match row {
            Ok(r) if r.len() == cols.len() => {
                x.push(r[0]);
                values.extend_from_slice(&r[1..]);
            }
            _ => {
                return Err(Error::Config(vec![format!(
                    "{}: row {} must hold {} numbers",
                    path.display(),
                    k + 2,
                    cols.len()
                )]))
            }
        }
    }
    Table::new(x, steps, values)
}

fn entry_of(given: &EntrySpec) -> Result<CoefficientEntry> {
    let mut e = CoefficientEntry::fourier(given.terms.clone());
    if let Some(p) = &given.csv {
        e.table = Some(load_table(p)?);
    }
    Ok(e)
}

impl ProblemConfig {
    pub fn grids(&self) -> Result<(SpatialGrid, TimeGrid)> {
        Ok((SpatialGrid::new(self.length, self.nodes)?, TimeGrid::new(self.steps)?))
    }

    pub fn diffusion_matrix(&self) -> Result<DiffusionMatrix> {
        DiffusionMatrix::new(self.diffusion.clone())
    }

    pub fn is_mutation_model(&self) -> bool {
        !self.mutation.is_empty()
    }

    /// The mutation matrix and the rates, for a mutation model.
    pub fn mutation_parts(&self) -> Result<Option<(MatrixField, Vec<CoefficientEntry>)>> {
        if !self.is_mutation_model() {
            return Ok(None);
        }
        let mut m = MatrixField::new(self.n, self.length)?;
        for (&(i, j), given) in &self.mutation {
            m.set_entry(i, j, entry_of(given)?)?;
        }
        let rates = (0..self.n)
            .map(|i| self.rates.get(&i).map_or(Ok(CoefficientEntry::default()), entry_of))
            .collect::<Result<Vec<_>>>()?;
        Ok(Some((m, rates)))
    }

    /// The coupling matrix `A`.
    pub fn field(&self) -> Result<MatrixField> {
        if let Some((m, rates)) = self.mutation_parts()? {
            let (grid, time) = self.grids()?;
            validate_mutation(&m, &grid, &time)?;
            return mutation_field(&m, &rates);
        }
        let mut f = MatrixField::new(self.n, self.length)?;
        for (&(i, j), given) in &self.entries {
            f.set_entry(i, j, entry_of(given)?)?;
        }
        Ok(f)
    }

    /// Validated problem with the solver overrides applied.
    pub fn problem(&self) -> Result<Problem> {
        let (grid, time) = self.grids()?;
        let mut p = Problem::new(self.field()?, self.diffusion_matrix()?, grid, time)?;
        if let Some(t) = self.tol {
            p.solve.tol = t;
        }
        if let Some(c) = self.max_cycles {
            p.solve.max_cycles = c;
        }
        Ok(p)
    }

    pub fn sample_policy(&self) -> SamplePolicy {
        let mut s = SamplePolicy::default();
        if let Some(v) = self.rho_min {
            s.rho_min = v;
        }
        if let Some(v) = self.rho_max {
            s.rho_max = v;
        }
        s
    }
}
