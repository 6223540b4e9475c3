mod common;

use proptest::prelude::*;

use coop_spectra::coefficients::{FourierTerm, MatrixField, TimeMode};
use coop_spectra::floquet_ode::{h_bar, h_under, ode_eigenvalue};
use coop_spectra::grid::SpatialGrid;

fn grid() -> SpatialGrid {
    SpatialGrid::new(1.0, 9).unwrap()
}

fn exponent(field: &MatrixField, x: f64, omega: f64, steps: usize) -> f64 {
    let n = field.n();
    ode_eigenvalue(n, |t, out| out.copy_from_slice(&field.eval(x, t)), omega, steps).unwrap().h
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn time_shift_leaves_h_unchanged(field in common::field(3), s in 0.0f64..1.0, omega in 0.3f64..5.0) {
        let a = h_under(&field, &grid(), omega, 256).unwrap();
        let b = h_under(&field.time_shifted(s), &grid(), omega, 256).unwrap();
        for (x, y) in a.per_node.iter().zip(&b.per_node) {
            prop_assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn scalar_shift_moves_h_by_its_mean(field in common::field(3), c in -1.0f64..1.0, amp in -1.0f64..1.0, omega in 0.3f64..5.0) {
        let g = [FourierTerm::constant(c), FourierTerm::new(amp, 0, TimeMode::Cos(1)), FourierTerm::new(amp, 0, TimeMode::Sin(2))];
        let a = h_bar(&field, &grid(), omega, 4096).unwrap().h;
        let b = h_bar(&field.plus_scalar(&g), &grid(), omega, 4096).unwrap().h;
        prop_assert!((b - (a - c)).abs() <= 1e-9, "{a} {b} {c}");
    }

    #[test]
    fn h_is_nondecreasing_in_omega(field in common::field(2), x in 0.0f64..1.0) {
        let omegas: Vec<f64> = (0..20).map(|k| 10f64.powf(-1.0 + 2.0 * k as f64 / 19.0)).collect();
        let hs: Vec<f64> = omegas.iter().map(|&w| exponent(&field, x, w, 8192)).collect();
        for w in hs.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9, "{hs:?}");
        }
    }
}

#[test]
fn rk4_is_fourth_order() {
    let mut f = MatrixField::new(2, 1.0).unwrap();
    f.add_terms(0, 0, &[FourierTerm::new(1.0, 0, TimeMode::Cos(1))]).unwrap();
    f.add_terms(1, 1, &[FourierTerm::new(-0.5, 0, TimeMode::Sin(1)), FourierTerm::constant(0.3)]).unwrap();
    f.add_terms(0, 1, &[FourierTerm::constant(1.0), FourierTerm::new(0.4, 0, TimeMode::Cos(2))]).unwrap();
    let omega = 0.5;
    let h: Vec<f64> = [16, 32, 64].iter().map(|&s| exponent(&f, 0.0, omega, s)).collect();
    let ratio = (h[0] - h[1]).abs() / (h[1] - h[2]).abs();
    assert!(ratio >= 12.0, "{h:?} ratio {ratio}");
}
