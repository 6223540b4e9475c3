//! Drives a CLI subcommand from code and prints the run record.

use coop_spectra::cli::{run_subcommand, Command, Overrides};
use coop_spectra::config::load_config;

fn main() -> coop_spectra::Result<()> {
    let cfg = load_config(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/constant.cfg").as_ref())?;
    let over = Overrides { omega: Some(2.0), rho: Some(0.5), ..Overrides::default() };
    let outcome = run_subcommand(Command::Eigen, &cfg, &over, "out/subcommand".as_ref());
    outcome.lines.iter().for_each(|l| println!("{l}"));
    println!("{}", serde_json::to_string_pretty(&outcome.record)?);
    std::process::exit(outcome.exit_code());
}
