//! The twelve acceptance criteria, one test each.

use coop_spectra::verify;

fn criterion(id: usize) {
    let r = verify::run(id);
    println!("{}", r.summary());
    for line in &r.lines {
        println!("{line}");
    }
    assert!(r.passed, "criterion {id} failed");
}

#[test]
fn c01_constant_coupling() {
    criterion(1);
}

#[test]
fn c02_separable_oracle() {
    criterion(2);
}

#[test]
fn c03_monotone_in_omega() {
    criterion(3);
}

#[test]
fn c04_constant_ordering() {
    criterion(4);
}

#[test]
fn c05_global_bounds() {
    criterion(5);
}

#[test]
fn c06_ergodic_lower_bound() {
    criterion(6);
}

#[test]
fn c07_single_parameter_limits() {
    criterion(7);
}

#[test]
fn c08_regime_transition() {
    criterion(8);
}

#[test]
fn c09_energy_identity() {
    criterion(9);
}

#[test]
fn c10_level_set_classification() {
    criterion(10);
}

#[test]
fn c11_nonmonotone_in_rho() {
    criterion(11);
}

#[test]
fn c12_persistence_region() {
    criterion(12);
}
