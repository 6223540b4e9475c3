//! Persistence verdicts of the mutation-selection model `M + diag(c)`.

use coop_spectra::levelset::region_of;
use coop_spectra::verify::fixture;

fn main() -> coop_spectra::Result<()> {
    for name in ["mutation_empty", "mutation_full", "mutation_bounded", "mutation_invalid"] {
        let report = fixture(name).and_then(|cfg| cfg.problem()).and_then(|p| region_of(&p, None));
        match report {
            Ok(r) => println!("{name:>16}: {:?}, case {:?}", r.verdict, r.case),
            Err(e) => println!("{name:>16}: rejected ({e})"),
        }
    }
    Ok(())
}
