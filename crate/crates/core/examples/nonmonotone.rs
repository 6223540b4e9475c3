//! At fixed `omega` below `omega*`, `rho -> lambda` dips under `C*` and comes back.

use coop_spectra::levelset::{nonmonotonicity_probe, omega_star, SamplePolicy};
use coop_spectra::verify::fixture_problem;

fn main() -> coop_spectra::Result<()> {
    let p = fixture_problem("generic")?;
    let policy = SamplePolicy::default();
    let (top, _) = omega_star(&p, &policy)?;
    let r = nonmonotonicity_probe(&p, 0.5 * top, &SamplePolicy { rho_min: 1e-4, ..policy })?;
    println!("omega* = {top:.6}; at omega = {:.6} the dip below C* = {:.6} is {:.4e} near rho = {:.3e}", r.omega, r.c_star, r.dip, r.rho_at_min);
    println!("crossings {:?} and {:?}, eta = {:.4}", r.rho_under, r.rho_over, r.eta);
    for (rho, l) in &r.scan {
        println!("  {rho:.3e} {l:.8}");
    }
    Ok(())
}
