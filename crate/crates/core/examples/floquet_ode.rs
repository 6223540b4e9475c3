//! Node-wise Floquet exponents `h(x, omega)` and their extremes.

use coop_spectra::floquet_ode::{h_bar, h_under};
use coop_spectra::verify::fixture_problem;

fn main() -> coop_spectra::Result<()> {
    let p = fixture_problem("generic")?;
    for omega in [0.1, 1.0, 10.0] {
        let low = h_under(&p.field, &p.grid, omega, p.ode_steps)?;
        let high = h_bar(&p.field, &p.grid, omega, p.ode_steps)?;
        let at: Vec<String> = low.argmin.iter().map(|&k| format!("{:.3}", p.grid.x(k))).collect();
        println!("omega {omega:>5}: min_x h = {:.8} at x = {}, h of the mean = {:.8}", low.value, at.join(" "), high.h);
    }
    Ok(())
}
