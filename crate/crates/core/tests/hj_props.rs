mod common;

use proptest::prelude::*;

use coop_spectra::coefficients::{FourierTerm, TimeMode};
use coop_spectra::grid::{SpatialGrid, TimeGrid};
use coop_spectra::hj::{ergodic_constant, lax_friedrichs_step, HamiltonianLattice, HjOptions, HjStatus};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn scheme_is_monotone(
        field in common::field(2),
        w in prop::collection::vec(-0.5f64..0.5, 33),
        bump in 0.0f64..0.1,
        at in 0usize..33,
        theta in 0.2f64..5.0,
        t in 0.0f64..1.0,
        local in any::<bool>(),
    ) {
        let grid = SpatialGrid::new(1.0, 33).unwrap();
        let d = coop_spectra::coefficients::DiffusionMatrix::new(vec![1.0; field.n()]).unwrap();
        let lattice = HamiltonianLattice::new(&field, &d, &grid, 8.0, 129, 16).unwrap();
        let h = grid.spacing();
        let dt = 0.4 * theta * h / lattice.alpha;
        let mut up = w.clone();
        up[at] += bump;
        let (mut a, mut b) = (vec![0.0; 33], vec![0.0; 33]);
        lax_friedrichs_step(&w, &mut a, &lattice, t, dt, theta, h, local);
        lax_friedrichs_step(&up, &mut b, &lattice, t, dt, theta, h, local);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(y >= &(x - 1e-12), "{x} -> {y}");
        }
    }
}

fn hj_problem() -> coop_spectra::problem::Problem {
    let mut f = coop_spectra::coefficients::MatrixField::new(2, 1.0).unwrap();
    f.add_terms(0, 0, &[FourierTerm::new(1.0, 1, TimeMode::Constant), FourierTerm::new(0.5, 1, TimeMode::Cos(1))]).unwrap();
    f.add_terms(1, 1, &[FourierTerm::new(-0.6, 1, TimeMode::Constant), FourierTerm::new(0.8, 0, TimeMode::Sin(1))]).unwrap();
    f.add_terms(0, 1, &[FourierTerm::constant(0.7)]).unwrap();
    let d = coop_spectra::coefficients::DiffusionMatrix::new(vec![1.0, 2.0]).unwrap();
    let mut p = coop_spectra::problem::Problem::new(f, d, SpatialGrid::new(1.0, 65).unwrap(), TimeGrid::new(128).unwrap()).unwrap();
    p.hj = HjOptions { lattice_times: 64, p_points: 129, ..HjOptions::default() };
    p
}

#[test]
fn critical_value_grows_with_theta() {
    let p = hj_problem();
    let c = p.constants().unwrap();
    let values: Vec<f64> = [0.1, 0.3, 1.0, 3.0, 10.0, 100.0]
        .iter()
        .map(|&t| {
            let r = p.critical(t).unwrap();
            assert_eq!(r.status, HjStatus::Converged, "theta {t}");
            r.c
        })
        .collect();
    for w in values.windows(2) {
        assert!(w[1] >= w[0] - 2e-3, "{values:?}");
    }
    assert!(values.iter().all(|v| *v >= c.c_under - 2e-3 && *v <= c.c_star + 2e-3), "{values:?} {c:?}");
    assert!((values[5] - c.c_star).abs() <= 2e-2, "C(100) = {} vs C* = {}", values[5], c.c_star);
}

#[test]
fn scalar_shift_moves_the_critical_value() {
    let p = hj_problem();
    let g = [FourierTerm::constant(0.4), FourierTerm::new(0.5, 0, TimeMode::Cos(1))];
    let base = p.critical(1.0).unwrap().c;
    let grid = p.grid;
    let moved = ergodic_constant(1.0, &p.field.plus_scalar(&g), &p.diffusion, &grid, &p.time, &p.hj).unwrap().c;
    assert!((moved - (base - 0.4)).abs() <= 2e-3, "{base} -> {moved}");
}

#[test]
fn refinement_increments_shrink() {
    let mut values = Vec::new();
    for nodes in [33, 65, 129] {
        let mut p = hj_problem();
        p.grid = SpatialGrid::new(1.0, nodes).unwrap();
        values.push(p.critical(1.0).unwrap().c);
    }
    assert!((values[2] - values[1]).abs() <= (values[1] - values[0]).abs() + 1e-6, "{values:?}");
}

#[test]
fn small_theta_approaches_c_under() {
    let p = hj_problem();
    let c = p.constants().unwrap();
    let r = coop_spectra::hj::ergodic_constant_or_limit(0.01, &p.field, &p.diffusion, &p.grid, &p.time, &p.hj).unwrap();
    assert!((r.c - c.c_under).abs() <= 2e-2, "C(0.01) = {} ({:?}) vs C_ = {}", r.c, r.status, c.c_under);
}
