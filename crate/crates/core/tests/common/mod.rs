#![allow(dead_code)]

use proptest::prelude::*;

use coop_spectra::coefficients::{DiffusionMatrix, FourierTerm, MatrixField, TimeMode};
use coop_spectra::grid::{SpatialGrid, TimeGrid};
use coop_spectra::problem::Problem;

fn mode() -> impl Strategy<Value = TimeMode> {
    prop_oneof![Just(TimeMode::Constant), (1u32..3).prop_map(TimeMode::Cos), (1u32..3).prop_map(TimeMode::Sin)]
}

fn terms(max: usize) -> impl Strategy<Value = Vec<FourierTerm>> {
    prop::collection::vec((-1.0f64..1.0, 0u32..3, mode()).prop_map(|(c, k, m)| FourierTerm::new(c, k, m)), 0..=max)
}

/// Random cooperative, fully coupled field: off-diagonal entries are a positive
/// constant that dominates their oscillating part.
pub fn field(max_n: usize) -> impl Strategy<Value = MatrixField> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs = n * (n + 1) / 2;
        prop::collection::vec((terms(2), 0.2f64..1.5), pairs).prop_map(move |entries| {
            let mut f = MatrixField::new(n, 1.0).unwrap();
            let mut it = entries.into_iter();
            for i in 0..n {
                for j in i..n {
                    let (mut ts, base) = it.next().unwrap();
                    if i != j {
                        let wobble: f64 = ts.iter().map(|t| t.coeff.abs()).sum();
                        ts.iter_mut().for_each(|t| t.coeff *= 0.5 * base / wobble.max(1.0));
                        ts.push(FourierTerm::constant(base));
                    }
                    f.add_terms(i, j, &ts).unwrap();
                }
            }
            f
        })
    })
}

pub fn diffusion(n: usize) -> impl Strategy<Value = DiffusionMatrix> {
    prop::collection::vec(0.2f64..3.0, n).prop_map(|d| DiffusionMatrix::new(d).unwrap())
}

pub fn coarse(field: MatrixField, diffusion: DiffusionMatrix) -> Problem {
    Problem::new(field, diffusion, SpatialGrid::new(1.0, 41).unwrap(), TimeGrid::new(64).unwrap()).unwrap()
}
