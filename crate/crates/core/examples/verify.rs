//! Runs selected acceptance checks: `cargo run --release --example verify -- 1 4 9`.

use coop_spectra::verify::{run, TITLES};

fn main() {
    let ids: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let ids = if ids.is_empty() { vec![1, 2, 4, 9, 12] } else { ids };
    for id in ids.into_iter().filter(|id| (1..=TITLES.len()).contains(id)) {
        let r = run(id);
        println!("{}", r.summary());
        for l in &r.lines {
            println!("{l}");
        }
    }
}
