mod common;

use proptest::prelude::*;

use coop_spectra::coefficients::{temporal_average, DiffusionMatrix, MatrixField};
use coop_spectra::elliptic::{elliptic_principal, lambda_bar, lambda_under};
use coop_spectra::grid::{neumann_laplacian, SpatialGrid, TimeGrid};

fn grids() -> (SpatialGrid, TimeGrid) {
    (SpatialGrid::new(1.0, 41).unwrap(), TimeGrid::new(32).unwrap())
}

fn field_and_rates() -> impl Strategy<Value = (MatrixField, DiffusionMatrix)> {
    common::field(3).prop_flat_map(|f| {
        let n = f.n();
        (Just(f), common::diffusion(n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn eigenvalues_grow_with_rho((field, d) in field_and_rates()) {
        let (grid, time) = grids();
        let rhos: Vec<f64> = (0..15).map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / 14.0)).collect();
        let mut last = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &rho in &rhos {
            let bar = lambda_bar(&field, &d, &grid, &time, rho).unwrap().lambda;
            let under = lambda_under(&field, &d, &grid, &time, rho).unwrap().value;
            prop_assert!(bar >= last.0 - 1e-9 && under >= last.1 - 1e-9, "rho {rho}: {bar} {under} after {last:?}");
            last = (bar, under);
        }
    }

    #[test]
    fn eigenpair_is_positive_and_consistent((field, d) in field_and_rates(), rho in 1e-2f64..10.0, shift in -2.0f64..2.0) {
        let (grid, time) = grids();
        let n = field.n();
        let coeff = temporal_average(&field, &grid, &time);
        let e = elliptic_principal(&coeff, rho, &d, &grid, None).unwrap();
        let phi = &e.eigenfunction;
        prop_assert!(phi.values().iter().all(|v| *v > 0.0));

        // <L phi, phi> / <phi, phi> with L = -rho D Lap - B
        let lap = neumann_laplacian(phi, &grid).unwrap();
        let w = grid.weights();
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..grid.nodes() {
            for i in 0..n {
                let mut lphi = -rho * d.rates()[i] * lap.get(i, k);
                for j in 0..n {
                    lphi -= coeff[k * n * n + i * n + j] * phi.get(j, k);
                }
                num += w[k] * lphi * phi.get(i, k);
                den += w[k] * phi.get(i, k).powi(2);
            }
        }
        prop_assert!((e.lambda - num / den).abs() <= 1e-8 * (1.0 + e.lambda.abs()), "{} vs {}", e.lambda, num / den);

        let mut shifted = coeff.clone();
        for k in 0..grid.nodes() {
            for i in 0..n {
                shifted[k * n * n + i * n + i] += shift;
            }
        }
        let moved = elliptic_principal(&shifted, rho, &d, &grid, None).unwrap().lambda;
        prop_assert!((moved - (e.lambda - shift)).abs() <= 1e-10 * (1.0 + e.lambda.abs()));
    }
}
