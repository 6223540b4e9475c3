//! Critical value `C(theta)` of the time-periodic Hamilton-Jacobi equation.

use coop_spectra::verify::fixture_problem;

fn main() -> coop_spectra::Result<()> {
    let p = fixture_problem("generic")?;
    let c = p.constants()?;
    println!("between C_ = {:.6} and C* = {:.6}", c.c_under, c.c_star);
    for theta in [0.1, 0.3, 1.0, 3.0, 10.0] {
        let r = p.critical(theta)?;
        println!("C({theta:>4}) = {:.6}  {:?} after {} periods", r.c, r.status, r.periods);
    }
    Ok(())
}
