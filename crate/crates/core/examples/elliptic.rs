//! Large- and small-frequency limits `lambda_bar(rho)` and `lambda_under(rho)`.

use coop_spectra::verify::fixture_problem;

fn main() -> coop_spectra::Result<()> {
    let p = fixture_problem("generic")?;
    let c = p.constants()?;
    println!("C_ = {:.6}, C_+ = {:.6}, C*+ = {:.6}, C^- = {:.6}", c.c_under, c.c_under_plus, c.c_star_plus, c.c_bar);
    for k in -3..=3 {
        let rho = 10f64.powi(k);
        println!("rho 1e{k:<3} lambda_under {:.8}  lambda_bar {:.8}", p.lambda_under(rho)?, p.lambda_bar(rho)?);
    }
    Ok(())
}
