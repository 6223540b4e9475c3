use proptest::prelude::*;

use coop_spectra::grid::{integrate_space, integrate_time, neumann_laplacian, GridFunction, SpatialGrid};

fn inner(f: &GridFunction, g: &GridFunction, grid: &SpatialGrid) -> f64 {
    let w = grid.weights();
    f.values().iter().zip(g.values()).zip(w.iter().cycle()).map(|((a, b), w)| a * b * w).sum()
}

fn norm(f: &GridFunction, grid: &SpatialGrid) -> f64 {
    inner(f, f, grid).sqrt()
}

fn grid_and_values() -> impl Strategy<Value = (SpatialGrid, Vec<f64>, Vec<f64>)> {
    (3usize..60, 0.3f64..5.0).prop_flat_map(|(nodes, length)| {
        let grid = SpatialGrid::new(length, nodes).unwrap();
        (Just(grid), prop::collection::vec(-1.0f64..1.0, nodes), prop::collection::vec(-1.0f64..1.0, nodes))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn constants_are_harmonic(nodes in 3usize..200, length in 0.1f64..10.0, c in -1e3f64..1e3) {
        let grid = SpatialGrid::new(length, nodes).unwrap();
        let f = GridFunction::from_fn(2, &grid, |i, _| c * (i as f64 + 1.0));
        prop_assert!(neumann_laplacian(&f, &grid).unwrap().sup_norm() <= 1e-14 * (1.0 + c.abs()));
    }

    #[test]
    fn laplacian_is_symmetric((grid, a, b) in grid_and_values()) {
        let nodes = grid.nodes();
        let f = GridFunction::from_values(1, nodes, a).unwrap();
        let g = GridFunction::from_values(1, nodes, b).unwrap();
        let lf = neumann_laplacian(&f, &grid).unwrap();
        let lg = neumann_laplacian(&g, &grid).unwrap();
        let scale = norm(&f, &grid) * norm(&g, &grid) / grid.spacing().powi(2);
        prop_assert!((inner(&lf, &g, &grid) - inner(&f, &lg, &grid)).abs() <= 1e-10 * scale.max(1e-300));
    }

    #[test]
    fn laplacian_is_negative_semidefinite((grid, a, _b) in grid_and_values()) {
        let f = GridFunction::from_values(1, grid.nodes(), a).unwrap();
        let lf = neumann_laplacian(&f, &grid).unwrap();
        prop_assert!(inner(&lf, &f, &grid) <= 1e-12 * norm(&f, &grid).powi(2) / grid.spacing().powi(2));
    }

    #[test]
    fn trapezoid_integrates_linear_functions(nodes in 3usize..100, length in 0.1f64..10.0, a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let grid = SpatialGrid::new(length, nodes).unwrap();
        let f = GridFunction::from_fn(1, &grid, |_, x| a + b * x);
        let exact = a * length + 0.5 * b * length * length;
        prop_assert!((integrate_space(&f, &grid).unwrap()[0] - exact).abs() <= 1e-12 * (1.0 + exact.abs()));
    }
}

#[test]
fn laplacian_is_second_order() {
    let length = 2.0;
    let error = |nodes: usize| {
        let grid = SpatialGrid::new(length, nodes).unwrap();
        let k = std::f64::consts::PI / length;
        let f = GridFunction::from_fn(1, &grid, |_, x| (k * x).cos());
        let lf = neumann_laplacian(&f, &grid).unwrap();
        (0..nodes).map(|j| (lf.get(0, j) + k * k * (k * grid.x(j)).cos()).abs()).fold(0.0, f64::max)
    };
    for nodes in [21, 41, 81] {
        let ratio = error(nodes) / error(2 * nodes - 1);
        assert!(ratio >= 3.5, "nodes {nodes}: ratio {ratio}");
    }
}

#[test]
fn periodic_trapezoid_is_spectral() {
    let samples: Vec<f64> = (0..=16).map(|m| (2.0 * std::f64::consts::PI * m as f64 / 16.0).cos().exp()).collect();
    // int_0^1 e^{cos 2 pi t} dt = I_0(1)
    assert!((integrate_time(&samples).unwrap().value - 1.266_065_877_752_008_4).abs() < 1e-13);
}
