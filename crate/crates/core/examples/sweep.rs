//! `lambda` on a log grid in `(omega, rho)`, in parallel, as a heat map.

use rayon::prelude::*;

use coop_spectra::output::{svg_heatmap, write_file, Axis};
use coop_spectra::verify::fixture_problem;

fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| 10f64.powf(a + (b - a) * k as f64 / (n - 1) as f64)).collect()
}

fn main() -> coop_spectra::Result<()> {
    let p = fixture_problem("separable")?;
    let (omegas, rhos) = (logspace(-2.0, 2.0, 8), logspace(-2.0, 2.0, 8));
    let values = omegas
        .par_iter()
        .map(|&w| rhos.iter().map(|&r| p.lambda(w, r)).collect::<coop_spectra::Result<Vec<_>>>())
        .collect::<coop_spectra::Result<Vec<_>>>()?;
    for (w, row) in omegas.iter().zip(&values) {
        println!("omega {w:>9.4}: {}", row.iter().map(|v| format!("{v:8.4}")).collect::<Vec<_>>().join(" "));
    }
    let svg = svg_heatmap("lambda(omega, rho)", &Axis::log("rho"), &Axis::log("omega"), &rhos, &omegas, &values)?;
    write_file("out/sweep.svg".as_ref(), &svg)?;
    Ok(())
}
