//! Subcommand dispatch behind the `coop-spectra` binary.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::config::{serialize_config, ProblemConfig};
use crate::error::{Error, Result};
use crate::hj::HjStatus;
use crate::levelset::{region_of, trace_level_set, LevelCurve};
use crate::output::{svg_heatmap, svg_lines, write_csv, write_file, Axis, Cell, OpRecord, RunRecord, Status};
use crate::parabolic::Confidence;
use crate::problem::Problem;
use crate::verify;

/// Environment variable that overrides the output directory of the config file.
pub const OUT_ENV: &str = "COOP_SPECTRA_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Eigen,
    Ode,
    Elliptic,
    Hj,
    Constants,
    Levelset,
    Sweep,
    Persistence,
    Verify,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::Eigen,
        Command::Ode,
        Command::Elliptic,
        Command::Hj,
        Command::Constants,
        Command::Levelset,
        Command::Sweep,
        Command::Persistence,
        Command::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Eigen => "eigen",
            Command::Ode => "ode",
            Command::Elliptic => "elliptic",
            Command::Hj => "hj",
            Command::Constants => "constants",
            Command::Levelset => "levelset",
            Command::Sweep => "sweep",
            Command::Persistence => "persistence",
            Command::Verify => "verify",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown subcommand {s:?}")))
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub omega: Option<f64>,
    pub rho: Option<f64>,
    pub theta: Option<f64>,
    pub level: Option<f64>,
    pub tol: Option<f64>,
}

/// `--out`, then the environment, then `[output] dir`, then `./out`.
pub fn output_dir(flag: Option<&Path>, cfg: &ProblemConfig) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    cfg.output.clone().unwrap_or_else(|| PathBuf::from("out"))
}

/// Everything a run produced, written or not.
#[derive(Debug)]
pub struct Outcome {
    pub record: RunRecord,
    /// First solver or config error; the record still lists what finished.
    pub error: Option<Error>,
    /// Some verification check failed.
    pub failed_checks: bool,
    /// Human-readable lines for the terminal.
    pub lines: Vec<String>,
}

impl Outcome {
    /// 0 ok, 1 verification failure, 2 config error, 3 solver error.
    pub fn exit_code(&self) -> i32 {
        match &self.error {
            Some(e) => exit_code(e),
            None if self.failed_checks => 1,
            None => 0,
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Validation(_) | Error::Invalid(_) | Error::Dimension(_) | Error::Index(_) => 2,
        _ => 3,
    }
}

struct Session<'a> {
    cfg: &'a ProblemConfig,
    over: &'a Overrides,
    out: &'a Path,
    record: RunRecord,
    error: Option<Error>,
    failed_checks: bool,
    lines: Vec<String>,
}

impl Session<'_> {
    /// Runs one operation, recording its status and wall time.
    fn op<T>(&mut self, name: &str, f: impl FnOnce(&mut Self, &mut Vec<PathBuf>) -> Result<(T, Status)>) -> Option<T> {
        let start = Instant::now();
        let mut files = Vec::new();
        let res = f(self, &mut files);
        let seconds = start.elapsed().as_secs_f64();
        let (value, status, detail) = match res {
            Ok((v, s)) => (Some(v), s, String::new()),
            Err(e) => {
                let d = e.to_string();
                self.error.get_or_insert(e);
                (None, Status::Error, d)
            }
        };
        self.record.operations.push(OpRecord { name: name.into(), status, seconds, detail, files });
        value
    }

    fn problem(&self) -> Result<Problem> {
        let mut p = self.cfg.problem()?;
        if let Some(t) = self.over.tol {
            p.solve.tol = t;
        }
        Ok(p)
    }

    fn csv(&self, files: &mut Vec<PathBuf>, name: &str, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
        let path = self.out.join(name);
        write_csv(&path, header, rows)?;
        files.push(path);
        Ok(())
    }

    fn text(&self, files: &mut Vec<PathBuf>, name: &str, text: &str) -> Result<()> {
        let path = self.out.join(name);
        write_file(&path, text)?;
        files.push(path);
        Ok(())
    }
}

fn pick(flag: Option<f64>, single: Option<f64>, list: &[f64], what: &str) -> Result<Vec<f64>> {
    if let Some(v) = flag.or(single) {
        return Ok(vec![v]);
    }
    if list.is_empty() {
        return Err(Error::Config(vec![format!("no {what} given: pass --{what} or set it in the config")]));
    }
    Ok(list.to_vec())
}

fn worst(a: Status, b: Status) -> Status {
    match (a, b) {
        (Status::Error, _) | (_, Status::Error) => Status::Error,
        (Status::LowConfidence, _) | (_, Status::LowConfidence) => Status::LowConfidence,
        _ => Status::Ok,
    }
}

/// Runs `cmd` and writes CSV, SVG and `run.json` under `out`.
pub fn run_subcommand(cmd: Command, cfg: &ProblemConfig, over: &Overrides, out: &Path) -> Outcome {
    let mut s = Session {
        cfg,
        over,
        out,
        record: RunRecord::new(&serialize_config(cfg)),
        error: None,
        failed_checks: false,
        lines: Vec::new(),
    };
    match cmd {
        Command::Eigen => eigen(&mut s),
        Command::Ode => ode(&mut s),
        Command::Elliptic => elliptic(&mut s),
        Command::Hj => hj(&mut s),
        Command::Constants => constants(&mut s),
        Command::Levelset => levelset(&mut s),
        Command::Sweep => sweep(&mut s),
        Command::Persistence => persistence(&mut s),
        Command::Verify => run_verify(&mut s),
    }
    if let Err(e) = s.record.write(out) {
        s.lines.push(format!("run record: {e}"));
        s.error.get_or_insert(e);
    }
    Outcome { record: s.record, error: s.error, failed_checks: s.failed_checks, lines: s.lines }
}

fn eigen(s: &mut Session) {
    s.op("eigen", |s, files| {
        let p = s.problem()?;
        let omega = pick(s.over.omega, s.cfg.omega, &[], "omega")?[0];
        let rho = pick(s.over.rho, s.cfg.rho, &[], "rho")?[0];
        let r = p.spectral(omega, rho)?;
        s.lines.push(format!("lambda({omega}, {rho}) = {:.12e}", r.lambda));
        let row = vec![
            Cell::Num(omega),
            Cell::Num(rho),
            Cell::Num(r.lambda),
            Cell::Num(r.log_multiplier),
            r.iterations.into(),
            format!("{:?}", r.method).into(),
            r.steps_used.into(),
            format!("{:?}", r.confidence).into(),
        ];
        let header = ["omega", "rho", "lambda", "log_multiplier", "iterations", "method", "steps", "confidence"];
        s.csv(files, "eigen.csv", &header, &[row])?;
        let n = p.n();
        let nodes = p.grid.nodes();
        let rows: Vec<Vec<Cell>> = (0..n)
            .flat_map(|i| (0..nodes).map(move |k| (i, k)))
            .map(|(i, k)| vec![Cell::Int(i as i64 + 1), Cell::Num(p.grid.x(k)), Cell::Num(r.vector[i * nodes + k])])
            .collect();
        s.csv(files, "eigenvector.csv", &["component", "x", "value"], &rows)?;
        let status = if r.confidence == Confidence::Converged { Status::Ok } else { Status::LowConfidence };
        Ok(((), status))
    });
}

fn ode(s: &mut Session) {
    s.op("ode", |s, files| {
        let p = s.problem()?;
        let omegas = pick(s.over.omega, s.cfg.omega, &s.cfg.sweep_omega, "omega")?;
        let mut rows = Vec::new();
        let mut nodes = Vec::new();
        for &w in &omegas {
            let low = crate::floquet_ode::h_under(&p.field, &p.grid, w, p.ode_steps)?;
            let high = p.h_bar(w)?;
            s.lines.push(format!("omega {w}: h_under = {:.12e}, h_bar = {:.12e}", low.value, high));
            let at = p.grid.x(low.argmin[0]);
            rows.push(vec![Cell::Num(w), Cell::Num(low.value), Cell::Num(at), Cell::Num(high)]);
            for (k, h) in low.per_node.iter().enumerate() {
                nodes.push(vec![Cell::Num(w), Cell::Num(p.grid.x(k)), Cell::Num(*h)]);
            }
        }
        s.csv(files, "ode.csv", &["omega", "h_under", "argmin_x", "h_bar"], &rows)?;
        s.csv(files, "ode_nodes.csv", &["omega", "x", "h"], &nodes)?;
        Ok(((), Status::Ok))
    });
}

fn elliptic(s: &mut Session) {
    s.op("elliptic", |s, files| {
        let p = s.problem()?;
        let rhos = pick(s.over.rho, s.cfg.rho, &s.cfg.sweep_rho, "rho")?;
        let mut rows = Vec::new();
        let mut frozen = Vec::new();
        for &r in &rhos {
            let bar = p.lambda_bar(r)?;
            let under = crate::elliptic::lambda_under(&p.field, &p.diffusion, &p.grid, &p.time, r)?;
            s.lines.push(format!("rho {r}: lambda_bar = {bar:.12e}, lambda_under = {:.12e}", under.value));
            rows.push(vec![Cell::Num(r), Cell::Num(bar), Cell::Num(under.value)]);
            for (m, l) in under.frozen.iter().enumerate() {
                frozen.push(vec![Cell::Num(r), Cell::Num(m as f64 * p.time.dt()), Cell::Num(*l)]);
            }
        }
        s.csv(files, "elliptic.csv", &["rho", "lambda_bar", "lambda_under"], &rows)?;
        s.csv(files, "elliptic_frozen.csv", &["rho", "t", "lambda_0"], &frozen)?;
        Ok(((), Status::Ok))
    });
}

fn hj(s: &mut Session) {
    s.op("hj", |s, files| {
        let p = s.problem()?;
        let thetas = pick(s.over.theta, s.cfg.theta, &s.cfg.sweep_theta, "theta")?;
        let results = thetas.par_iter().map(|&t| p.critical(t)).collect::<Result<Vec<_>>>()?;
        let mut status = Status::Ok;
        let mut rows = Vec::new();
        for r in &results {
            s.lines.push(format!("C({}) = {:.12e} ({:?})", r.theta, r.c, r.status));
            if r.status != HjStatus::Converged {
                status = Status::LowConfidence;
            }
            rows.push(vec![
                Cell::Num(r.theta),
                Cell::Num(r.c),
                format!("{:?}", r.status).into(),
                r.periods.into(),
                r.steps_per_period.into(),
            ]);
        }
        s.csv(files, "hj.csv", &["theta", "c", "status", "periods", "steps_per_period"], &rows)?;
        if results.len() > 1 {
            let pts = results.iter().map(|r| (r.theta, r.c)).collect();
            let svg = svg_lines("ergodic constant", &Axis::log("theta"), &Axis::linear("C(theta)"), &[("C".into(), pts)])?;
            s.text(files, "hj.svg", &svg)?;
        }
        Ok(((), status))
    });
}

fn constants(s: &mut Session) {
    s.op("constants", |s, files| {
        let c = s.problem()?.constants()?;
        let names = crate::coefficients::LimitConstants::names();
        for (n, v) in names.iter().zip(c.as_array()) {
            s.lines.push(format!("{n} = {v:.12e}"));
        }
        let row: Vec<Cell> = c.as_array().into_iter().map(Cell::Num).collect();
        s.csv(files, "constants.csv", &names, &[row])?;
        Ok(((), Status::Ok))
    });
}

fn curve_files(s: &Session, files: &mut Vec<PathBuf>, stem: &str, curves: &[LevelCurve]) -> Result<()> {
    let mut series = Vec::new();
    for (k, c) in curves.iter().enumerate() {
        let rows: Vec<Vec<Cell>> = c
            .samples
            .iter()
            .map(|q| vec![Cell::Num(q.rho), Cell::Num(q.omega), Cell::Num(q.lambda_check)])
            .collect();
        if !rows.is_empty() {
            s.csv(files, &format!("{stem}_{}.csv", k + 1), &["rho", "omega", "lambda_check"], &rows)?;
            let pts = c.samples.iter().map(|q| (q.rho, q.omega)).collect();
            series.push((format!("level {} ({})", c.level, c.curve_type.tag()), pts));
        }
    }
    s.text(files, &format!("{stem}.json"), &(serde_json::to_string_pretty(curves)? + "\n"))?;
    if !series.is_empty() {
        let svg = svg_lines("level sets of lambda(omega, rho)", &Axis::log("rho"), &Axis::log("omega"), &series)?;
        s.text(files, &format!("{stem}.svg"), &svg)?;
    }
    Ok(())
}

fn levelset(s: &mut Session) {
    s.op("levelset", |s, files| {
        let p = s.problem()?;
        let levels = pick(s.over.level, None, &s.cfg.levels, "level")?;
        let policy = s.cfg.sample_policy();
        let mut curves = Vec::new();
        let mut status = Status::Ok;
        for &l in &levels {
            let c = trace_level_set(&p, l, &policy)?;
            s.lines.push(format!(
                "level {l}: type {}, {} samples, checks {}",
                c.curve_type.tag(),
                c.samples.len(),
                if c.passed() { "passed" } else { "failed" }
            ));
            if !c.passed() {
                status = worst(status, Status::LowConfidence);
            }
            curves.push(c);
        }
        curve_files(s, files, "levelset", &curves)?;
        Ok(((), status))
    });
}

fn sweep(s: &mut Session) {
    s.op("sweep", |s, files| {
        let p = s.problem()?;
        let omegas = pick(s.over.omega, None, &s.cfg.sweep_omega, "omega")?;
        let rhos = pick(s.over.rho, None, &s.cfg.sweep_rho, "rho")?;
        let pairs: Vec<(f64, f64)> = omegas.iter().flat_map(|&w| rhos.iter().map(move |&r| (w, r))).collect();
        // indexed parallel collect keeps the row order
        let values = pairs.par_iter().map(|&(w, r)| p.lambda(w, r)).collect::<Result<Vec<_>>>()?;
        let rows: Vec<Vec<Cell>> =
            pairs.iter().zip(&values).map(|(&(w, r), &l)| vec![Cell::Num(w), Cell::Num(r), Cell::Num(l)]).collect();
        s.csv(files, "sweep.csv", &["omega", "rho", "lambda"], &rows)?;
        s.lines.push(format!("{} values written", rows.len()));
        let grid: Vec<Vec<f64>> = omegas.iter().enumerate().map(|(i, _)| values[i * rhos.len()..(i + 1) * rhos.len()].to_vec()).collect();
        if omegas.len() > 1 && rhos.len() > 1 {
            let svg = svg_heatmap("lambda(omega, rho)", &Axis::log("rho"), &Axis::log("omega"), &rhos, &omegas, &grid)?;
            s.text(files, "sweep.svg", &svg)?;
        }
        Ok(((), Status::Ok))
    });
}

fn persistence(s: &mut Session) {
    s.op("persistence", |s, files| {
        if !s.cfg.is_mutation_model() {
            return Err(Error::Config(vec!["persistence needs [mutation.i.j] sections".into()]));
        }
        let p = s.problem()?;
        let policy = s.cfg.sample_policy();
        let r = region_of(&p, Some(&policy))?;
        s.lines.push(format!("verdict {:?}, case {:?}", r.verdict, r.case));
        s.text(files, "persistence.json", &(serde_json::to_string_pretty(&r)? + "\n"))?;
        if let Some(c) = &r.curve {
            curve_files(s, files, "persistence_curve", std::slice::from_ref(c))?;
        }
        Ok(((), Status::Ok))
    });
}

fn run_verify(s: &mut Session) {
    let mut rows = Vec::new();
    let mut report = String::new();
    for id in 1..=verify::TITLES.len() {
        let r = s.op(&format!("verify {id}"), |_, _| {
            let r = verify::run(id);
            let status = if r.passed { Status::Ok } else { Status::Error };
            Ok((r, status))
        });
        let Some(r) = r else { continue };
        s.lines.push(r.summary());
        report.push_str(&r.summary());
        report.push('\n');
        for l in &r.lines {
            report.push_str(l);
            report.push('\n');
        }
        s.failed_checks |= !r.passed;
        rows.push(vec![r.id.into(), r.title.into(), Cell::Int(r.passed as i64), Cell::Num(r.seconds)]);
    }
    s.op("verify report", |s, files| {
        s.csv(files, "verify.csv", &["criterion", "title", "passed", "seconds"], &rows)?;
        s.text(files, "verify.txt", &report)?;
        Ok(((), Status::Ok))
    });
}
