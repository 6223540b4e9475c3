//! The five limit constants of a field read from a config file.
//!
//! `cargo run --release --example limit_constants -- crates/core/fixtures/time_dominant.cfg`

use coop_spectra::coefficients::LimitConstants;
use coop_spectra::config::load_config;

fn main() -> coop_spectra::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/generic.cfg").into());
    let cfg = load_config(path.as_ref())?;
    let c = cfg.problem()?.constants()?;
    for (name, v) in LimitConstants::names().iter().zip(c.as_array()) {
        println!("{name:>13} {v:.10}");
    }
    println!("C*+ {} C_+", if c.c_star_plus < c.c_under_plus { "<" } else { ">=" });
    Ok(())
}
