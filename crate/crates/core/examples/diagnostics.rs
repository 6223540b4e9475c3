//! Energy identity of the forward/adjoint pair and the lower bound on `lambda - C(theta)`.

use coop_spectra::diagnostics::{energy_identity, gap_bound};
use coop_spectra::parabolic::adjoint_eigenpair;
use coop_spectra::verify::fixture_problem;

fn main() -> coop_spectra::Result<()> {
    let mut p = fixture_problem("generic")?;
    p.grid = coop_spectra::grid::SpatialGrid::new(1.0, 101)?;
    p.hj.record_steps = Some(p.time.steps());
    let (omega, rho) = (1.0, 0.25);
    let pair = adjoint_eigenpair(&p.field, &p.diffusion, &p.grid, &p.time, omega, rho, &p.solve)?;
    let e = energy_identity(&pair, &p.field, &p.diffusion, &p.grid, &p.time)?;
    println!("lambda = {:.8}; identity {:.8e} = {:.8e} (relative {:.1e})", pair.forward.lambda, e.lhs, e.rhs, e.relative);

    let theta = omega / rho.sqrt();
    let hj = p.critical(theta)?;
    if let Some(profile) = &hj.period_profile {
        let g = gap_bound(&pair, profile, hj.c, &p.diffusion, &p.grid, &p.time)?;
        println!("C({theta}) = {:.8}; lambda - C = {:.6e} >= {:.6e}", hj.c, g.gap, g.bound);
    }
    Ok(())
}
