//! Traces `{lambda = level}` in the `(rho, omega)` plane and writes CSV and SVG.

use coop_spectra::levelset::{trace_level_set, SamplePolicy};
use coop_spectra::output::{svg_lines, write_csv, write_file, Axis, Cell};
use coop_spectra::verify::fixture_problem;

fn main() -> coop_spectra::Result<()> {
    let level: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(-1.12);
    let p = fixture_problem("generic")?;
    let curve = trace_level_set(&p, level, &SamplePolicy::default())?;
    println!("level {level}: type {}, from {:?} to {:?}", curve.curve_type.tag(), curve.lower, curve.upper);
    for c in &curve.checks {
        println!("  {} {}", if c.passed { "ok  " } else { "FAIL" }, c.name);
    }
    let rows: Vec<Vec<Cell>> = curve.samples.iter().map(|s| vec![s.rho.into(), s.omega.into()]).collect();
    write_csv("out/level_set.csv".as_ref(), &["rho", "omega"], &rows)?;
    let pts = curve.samples.iter().map(|s| (s.rho, s.omega)).collect();
    let svg = svg_lines(&format!("lambda = {level}"), &Axis::log("rho"), &Axis::log("omega"), &[("curve".into(), pts)])?;
    write_file("out/level_set.svg".as_ref(), &svg)?;
    println!("wrote out/level_set.csv and out/level_set.svg");
    Ok(())
}
