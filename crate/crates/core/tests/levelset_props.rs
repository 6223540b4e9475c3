use proptest::prelude::*;

use coop_spectra::coefficients::{CoefficientEntry, FourierTerm, LimitConstants, MatrixField, TimeMode};
use coop_spectra::grid::{SpatialGrid, TimeGrid};
use coop_spectra::levelset::{omega_ell, region_case, rho_ell, rho_under_ell, validate_mutation, Crossing, CurveType};
use coop_spectra::verify::fixture_problem;

fn ordered_constants() -> impl Strategy<Value = LimitConstants> {
    (-3.0f64..0.0, prop::collection::vec(0.0f64..1.0, 4), any::<bool>()).prop_map(|(base, gaps, swap)| {
        let c_under = base;
        let c_star = c_under + gaps[0];
        let (a, b) = (c_star + gaps[1], c_star + gaps[1] + gaps[2]);
        let (c_star_plus, c_under_plus) = if swap { (b, a) } else { (a, b) };
        LimitConstants { c_under, c_star, c_star_plus, c_under_plus, c_bar: b + gaps[3] }
    })
}

proptest! {
    #[test]
    fn every_level_gets_one_type(c in ordered_constants(), u in 0.0f64..1.0) {
        let level = c.c_under + u * (c.c_bar - c.c_under);
        prop_assume!(c.distance(level) > 1e-3);
        let t = CurveType::classify(&c, level);
        let expected = if level < c.c_star {
            CurveType::Type1i
        } else if level < c.c_star_plus.min(c.c_under_plus) {
            CurveType::Type1ii
        } else if level > c.c_star_plus.max(c.c_under_plus) {
            CurveType::Type4
        } else if c.c_star_plus < c.c_under_plus {
            CurveType::Type2
        } else {
            CurveType::Type3
        };
        prop_assert_eq!(t, expected);
    }

    #[test]
    fn region_case_follows_the_zero_level(c in ordered_constants(), lift in -1.0f64..3.0) {
        let shifted = LimitConstants {
            c_under: c.c_under + lift,
            c_star: c.c_star + lift,
            c_star_plus: c.c_star_plus + lift,
            c_under_plus: c.c_under_plus + lift,
            c_bar: c.c_bar + lift,
        };
        prop_assume!(shifted.c_under < 0.0 && shifted.c_bar > 0.0 && shifted.distance(0.0) > 1e-9);
        let case = region_case(&shifted);
        let tag = CurveType::classify(&shifted, 0.0).tag();
        let expected = match tag {
            "1i" => 1,
            "1ii" => 2,
            "2" => 3,
            "3" => 4,
            _ => 5,
        };
        prop_assert_eq!(case, expected, "{:?}", shifted);
    }

    #[test]
    fn mutation_rows_must_balance(
        off in prop::collection::vec(0.1f64..2.0, 6),
        wobble in -0.5f64..0.5,
        defect in prop_oneof![Just(0.0), 1e-3f64..1.0],
    ) {
        let n = 3;
        let mut m = MatrixField::new(n, 1.0).unwrap();
        let mut k = 0;
        let mut rows = vec![Vec::new(); n];
        for i in 0..n {
            for j in i + 1..n {
                let t = [FourierTerm::constant(off[k]), FourierTerm::new(wobble * off[k], 0, TimeMode::Cos(1))];
                m.add_terms(i, j, &t).unwrap();
                rows[i].extend(t);
                rows[j].extend(t);
                k += 1;
            }
        }
        for (i, r) in rows.iter().enumerate() {
            let neg: Vec<FourierTerm> = r.iter().map(|t| FourierTerm { coeff: -t.coeff, ..*t }).collect();
            m.add_terms(i, i, &neg).unwrap();
        }
        m.add_to_entry(1, 1, &CoefficientEntry::constant(defect)).unwrap();
        let ok = validate_mutation(&m, &SpatialGrid::new(1.0, 11).unwrap(), &TimeGrid::new(16).unwrap()).is_ok();
        prop_assert_eq!(ok, defect == 0.0);
    }
}

#[test]
fn endpoints_are_ordered_and_increase_with_the_level() {
    let p = fixture_problem("generic").unwrap();
    let c = p.constants().unwrap();
    let levels: Vec<f64> = (1..=5).map(|k| c.c_under + (c.c_bar - c.c_under) * k as f64 / 6.0).collect();
    let mut last = (0.0, 0.0);
    for &l in &levels {
        let upper = rho_ell(&p, l).unwrap();
        let lower = rho_under_ell(&p, l).unwrap();
        if let Some(r) = upper {
            assert!(r >= last.0 - 1e-6, "rho_ell({l}) = {r} after {}", last.0);
            last.0 = r;
        }
        if let Some(r) = lower {
            assert!(r >= last.1 - 1e-6, "rho_under_ell({l}) = {r} after {}", last.1);
            last.1 = r;
        }
        if let (Some(a), Some(b)) = (upper, lower) {
            assert!(b <= a, "level {l}: {b} > {a}");
        }
    }
}

#[test]
fn level_curves_are_nested() {
    let p = fixture_problem("generic").unwrap();
    let rho = 0.05;
    let (lo, hi) = (p.lambda_under(rho).unwrap(), p.lambda_bar(rho).unwrap());
    let omegas: Vec<f64> = [0.3, 0.6]
        .iter()
        .map(|u| match omega_ell(&p, lo + u * (hi - lo), rho, None).unwrap() {
            Crossing::Root { omega, .. } => omega,
            other => panic!("{other:?}"),
        })
        .collect();
    assert!(omegas[0] < omegas[1], "{omegas:?}");
}
