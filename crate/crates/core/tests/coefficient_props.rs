mod common;

use proptest::prelude::*;

use coop_spectra::coefficients::{
    full_average, hamiltonian, limit_constants, spatial_average, temporal_average, validate, DiffusionMatrix,
    MatrixField,
};
use coop_spectra::grid::{integrate_time, SpatialGrid, TimeGrid};
use coop_spectra::linalg::perron;

fn essentially_positive(max_n: usize) -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec(-3.0f64..3.0, n * n).prop_map(move |mut s| {
            for i in 0..n {
                for j in 0..i {
                    let v = s[i * n + j].abs();
                    s[i * n + j] = v;
                    s[j * n + i] = v;
                }
            }
            (n, s)
        })
    })
}

fn grids() -> (SpatialGrid, TimeGrid) {
    (SpatialGrid::new(1.0, 33).unwrap(), TimeGrid::new(32).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn perron_pair((n, s) in essentially_positive(5)) {
        let p = perron(&s, n).unwrap();
        let scale = 1.0 + s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            let sv: f64 = (0..n).map(|j| s[i * n + j] * p.vector[j]).sum();
            prop_assert!((sv - p.value * p.vector[i]).abs() <= 1e-12 * scale);
            prop_assert!(p.vector[i] >= 0.0);
            prop_assert!(p.value >= s[i * n + i] - 1e-12 * scale);
        }
    }

    #[test]
    fn hamiltonian_is_even_monotone_and_sandwiched(
        field in common::field(3),
        rates in prop::collection::vec(0.2f64..3.0, 3),
        x in 0.0f64..1.0,
        t in 0.0f64..1.0,
        p in 0.0f64..4.0,
        dp in 0.0f64..1.0,
    ) {
        let n = field.n();
        let d = DiffusionMatrix::new(rates[..n].to_vec()).unwrap();
        let h = hamiltonian(p, &field, &d, x, t).unwrap();
        prop_assert!((h - hamiltonian(-p, &field, &d, x, t).unwrap()).abs() <= 1e-12 * (1.0 + h.abs()));
        prop_assert!(hamiltonian(p + dp, &field, &d, x, t).unwrap() >= h - 1e-10);
        let mu = perron(&field.eval(x, t), n).unwrap().value;
        prop_assert!(h >= mu + d.min() * p * p - 1e-10);
        prop_assert!(h <= mu + d.max() * p * p + 1e-10);
    }

    #[test]
    fn constants_are_ordered(field in common::field(3)) {
        let (grid, time) = grids();
        let c = limit_constants(&field, &grid, &time).unwrap();
        prop_assert!(c.ordering_holds(1e-6), "{c:?}");
    }

    #[test]
    fn averages_commute(field in common::field(3)) {
        let (grid, time) = grids();
        let n = field.n();
        let nn = n * n;
        let full = full_average(&field, &grid, &time);
        let bar = spatial_average(&field, &grid, &time);
        let hat = temporal_average(&field, &grid, &time);
        let w = grid.weights();
        for e in 0..nn {
            let series: Vec<f64> = (0..=time.steps()).map(|m| bar[m * nn + e]).collect();
            let via_time = integrate_time(&series).unwrap().value;
            let via_space: f64 = (0..grid.nodes()).map(|k| w[k] * hat[k * nn + e]).sum::<f64>() / grid.length();
            prop_assert!((via_time - full[e]).abs() <= 1e-12);
            prop_assert!((via_space - full[e]).abs() <= 1e-12);
        }
    }

    #[test]
    fn random_fields_validate(field in common::field(3)) {
        let (grid, time) = grids();
        let report = validate(&field, &grid, &time).unwrap();
        prop_assert_eq!(report.components, field.n());
    }
}

#[test]
fn negative_coupling_is_rejected() {
    let (grid, time) = grids();
    let f = MatrixField::constant(2, 1.0, &[0.0, -0.5, -0.5, 0.0]).unwrap();
    assert!(validate(&f, &grid, &time).is_err());
}
