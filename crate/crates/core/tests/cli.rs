use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

use coop_spectra::config::{load_config, serialize_config};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.cfg"))
}

fn run(args: &[&str], env: Option<(&str, &Path)>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_coop-spectra"));
    cmd.args(args).env_remove(coop_spectra::cli::OUT_ENV);
    if let Some((k, v)) = env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect()
}

fn sweep_config(dir: &Path) -> PathBuf {
    let text = std::fs::read_to_string(fixture("separable")).unwrap()
        + "\n[sweep]\nomega = logspace(-2, 2, 8)\nrho = logspace(-2, 2, 8)\n";
    let path = dir.join("sweep.cfg");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn constants_of_the_constant_field() {
    let out = tempfile::tempdir().unwrap();
    let cfg = fixture("constant");
    let o = run(&["constants", "--config", cfg.to_str().unwrap(), "--out", out.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = rows(&out.path().join("constants.csv"));
    assert_eq!(table.len(), 1);
    assert!(table[0].iter().all(|v| (v + 1.0).abs() < 1e-12), "{table:?}");

    let record: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("run.json")).unwrap()).unwrap();
    let serialized = serialize_config(&load_config(&cfg).unwrap());
    let hash = format!("{:x}", Sha256::digest(serialized.as_bytes()));
    assert_eq!(record["config_hash"], serde_json::Value::String(hash));
    assert_eq!(record["operations"][0]["status"], "ok");
}

#[test]
fn sweep_is_monotone_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sweep_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, threads) in [(&a, "1"), (&b, "2")] {
        let o = run(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", threads], None);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read(a.join("sweep.csv")).unwrap();
    assert_eq!(text, std::fs::read(b.join("sweep.csv")).unwrap());
    let table = rows(&a.join("sweep.csv"));
    assert_eq!(table.len(), 64);
    // rows run over rho fastest
    for j in 0..8 {
        let column: Vec<f64> = (0..8).map(|i| table[i * 8 + j][2]).collect();
        assert!(column.windows(2).all(|w| w[1] >= w[0] - 1e-8), "rho = {}: {column:?}", table[j][1]);
    }
    let svg = std::fs::read_to_string(a.join("sweep.svg")).unwrap();
    assert!(svg.starts_with("<svg") && !svg.contains("href"));
}

#[test]
fn environment_sets_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("constant");
    let o = run(&["eigen", "--config", cfg.to_str().unwrap(), "--omega", "1", "--rho", "0.5"], Some((coop_spectra::cli::OUT_ENV, dir.path())));
    assert_eq!(o.status.code(), Some(0));
    let table = std::fs::read_to_string(dir.path().join("eigen.csv")).unwrap();
    assert!(table.lines().nth(1).unwrap().contains("-1.00000000000e0"), "{table}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "[problem]\nn = 2\ndiffusion = 1, 0\n").unwrap();
    assert_eq!(run(&["constants", "--config", bad.to_str().unwrap(), "--out", out], None).status.code(), Some(2));
    assert_eq!(run(&["constants", "--config", "/no/such.cfg", "--out", out], None).status.code(), Some(2));
    assert_eq!(run(&["bogus", "--config", bad.to_str().unwrap()], None).status.code(), Some(2));
    let invalid = fixture("mutation_invalid");
    assert_eq!(run(&["persistence", "--config", invalid.to_str().unwrap(), "--out", out], None).status.code(), Some(2));
    // omega far outside the solver's range
    let cfg = fixture("constant");
    let o = run(&["eigen", "--config", cfg.to_str().unwrap(), "--out", out, "--omega", "-1", "--rho", "1"], None);
    assert_ne!(o.status.code(), Some(0));
    let record = std::fs::read_to_string(dir.path().join("run.json")).unwrap();
    assert!(record.contains("\"error\""), "{record}");
}

#[test]
fn persistence_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    for (name, verdict) in [("mutation_empty", "Empty"), ("mutation_full", "Full")] {
        let out = dir.path().join(name);
        let o = run(&["persistence", "--config", fixture(name).to_str().unwrap(), "--out", out.to_str().unwrap()], None);
        assert_eq!(o.status.code(), Some(0));
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("persistence.json")).unwrap()).unwrap();
        assert_eq!(report["verdict"], verdict);
    }
}
