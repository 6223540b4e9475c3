//! Principal eigenvalue of a two-species system for a few `(omega, rho)`.

use coop_spectra::coefficients::{DiffusionMatrix, FourierTerm, MatrixField, TimeMode};
use coop_spectra::grid::{SpatialGrid, TimeGrid};
use coop_spectra::problem::Problem;

fn main() -> coop_spectra::Result<()> {
    let mut field = MatrixField::new(2, 1.0)?;
    field.add_terms(0, 0, &[FourierTerm::new(1.0, 1, TimeMode::Constant), FourierTerm::new(0.5, 0, TimeMode::Sin(1))])?;
    field.add_terms(1, 1, &[FourierTerm::new(-1.0, 1, TimeMode::Constant), FourierTerm::new(1.5, 0, TimeMode::Cos(1))])?;
    field.add_terms(0, 1, &[FourierTerm::constant(1.0)])?;
    let problem = Problem::new(field, DiffusionMatrix::new(vec![1.0, 2.0])?, SpatialGrid::new(1.0, 101)?, TimeGrid::new(256)?)?;

    println!("{:>8} {:>8} {:>16} {:>6} {:>15}", "omega", "rho", "lambda", "M", "method");
    for (omega, rho) in [(0.1, 0.1), (1.0, 0.1), (10.0, 0.1), (1.0, 0.01), (1.0, 10.0)] {
        let r = problem.spectral(omega, rho)?;
        println!("{omega:>8} {rho:>8} {:>16.10} {:>6} {:>15}", r.lambda, r.steps_used, format!("{:?}", r.method));
    }
    Ok(())
}
