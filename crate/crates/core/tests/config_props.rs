use std::collections::BTreeMap;

use proptest::prelude::*;

use coop_spectra::coefficients::{FourierTerm, TimeMode};
use coop_spectra::config::{parse_config, serialize_config, EntrySpec, ProblemConfig};
use coop_spectra::output::csv_string;

fn term() -> impl Strategy<Value = FourierTerm> {
    let mode = prop_oneof![Just(TimeMode::Constant), (1u32..4).prop_map(TimeMode::Cos), (1u32..4).prop_map(TimeMode::Sin)];
    (-10.0f64..10.0, 0u32..4, mode).prop_map(|(c, k, m)| FourierTerm::new(c, k, m))
}

fn list() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-3f64..1e3, 0..5)
}

fn config() -> impl Strategy<Value = ProblemConfig> {
    (1usize..4).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        (
            prop::collection::vec(0.01f64..10.0, n),
            prop::collection::vec(prop::collection::vec(term(), 1..4), pairs.len()),
            (0.5f64..4.0, 3usize..400, 4usize..2048),
            (prop::option::of(1e-12f64..1e-4), prop::option::of(1usize..100_000)),
            (prop::option::of(1e-3f64..1e3), prop::option::of(1e-3f64..1e3), prop::option::of(1e-2f64..1e2)),
            (list(), list(), list(), prop::collection::vec(-3.0f64..0.0, 0..4)),
        )
            .prop_map(move |(diffusion, terms, (length, nodes, steps), (tol, max_cycles), (omega, rho, theta), lists)| {
                let entries: BTreeMap<_, _> =
                    pairs.iter().copied().zip(terms).map(|(k, terms)| (k, EntrySpec { terms, csv: None })).collect();
                ProblemConfig {
                    n,
                    length,
                    diffusion,
                    nodes,
                    steps,
                    entries,
                    tol,
                    max_cycles,
                    omega,
                    rho,
                    theta,
                    sweep_omega: lists.0,
                    sweep_rho: lists.1,
                    sweep_theta: lists.2,
                    levels: lists.3,
                    ..ProblemConfig::default()
                }
            })
    })
}

proptest! {
    #[test]
    fn serialized_configs_parse_back(cfg in config()) {
        let text = serialize_config(&cfg);
        let again = parse_config(&text, None).unwrap();
        prop_assert_eq!(&cfg, &again, "{}", text);
        prop_assert_eq!(serialize_config(&again), text);
    }

    #[test]
    fn csv_cells_reparse_to_twelve_digits(values in prop::collection::vec(prop::num::f64::NORMAL, 1..20)) {
        let row: Vec<_> = values.iter().map(|v| (*v).into()).collect();
        let header: Vec<String> = (0..values.len()).map(|k| format!("c{k}")).collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let text = csv_string(&header, &[row]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        prop_assert_eq!(lines.len(), 2);
        prop_assert!(text.ends_with('\n'));
        for (cell, v) in lines[1].split(',').zip(&values) {
            let back: f64 = cell.parse().unwrap();
            prop_assert!((back - v).abs() <= 5e-12 * v.abs(), "{cell} vs {v}");
        }
    }
}

#[test]
fn defaults_and_implied_symmetry() {
    let cfg = parse_config("[problem]\nn = 2\ndiffusion = 1, 1\n[entry.1.2]\nterm = 0.5, 0, const\n", None).unwrap();
    assert_eq!((cfg.nodes, cfg.steps), (201, 512));
    let field = cfg.field().unwrap();
    assert_eq!(field.eval(0.3, 0.1)[1], field.eval(0.3, 0.1)[2]);
}

#[test]
fn zero_diffusion_is_rejected() {
    let err = parse_config("[problem]\nn = 2\ndiffusion = 1, 0\n", None).unwrap_err();
    assert!(err.to_string().contains("diffusion must be positive"), "{err}");
}
