use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(config: &str, dir: &Path, extra: &[&str]) -> Output {
    let path = dir.join("config.json");
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_parabolic"))
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join("out").join(name)).unwrap()
}

fn sample(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs", name]
        .iter()
        .collect();
    fs::read_to_string(path).unwrap()
}

const VERIFY: &str = r#"{
  "command": "verify",
  "problem": {"domain": [0, 3.14159265358979], "T": 0.5, "n_cells": 32, "n_steps": 80},
  "coefficients": {"b": {"offset": 1, "modes": [{"amp": 0.5, "k": 1}]}, "f": 0.5, "lambda": 1,
                   "delta": 0.5, "sup_bound": 3},
  "source": {"F": {"modes": [{"amp": 1, "k": 3, "rate": 1}]}},
  "sources": [{"F0": {"modes": [{"amp": 2, "k": 1}]}}]
}"#;

#[test]
fn sharpness_run_passes_and_writes_table() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"command": "sharpness", "problem": {"T": 0.5, "n_cells": 64, "n_steps": 256},
                  "sharpness": {"m_list": [1, 2]}}"#;
    let out = run(cfg, dir.path(), &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = read(dir.path(), "sharpness.csv");
    assert!(table.starts_with("m,K,T,gamma,ratio_numeric,ratio_closed,discrepancy\n"));
    assert_eq!(table.lines().count(), 3);
    let report = read(dir.path(), "report.txt");
    assert!(
        report.starts_with("THEOREM: sharpness\nVERDICT: PASS\n"),
        "{report}"
    );
}

#[test]
fn verify_run_passes_and_writes_estimate_table() {
    let dir = TempDir::new().unwrap();
    let out = run(VERIFY, dir.path(), &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = read(dir.path(), "estimate_report.csv");
    let mut lines = table.lines();
    assert_eq!(
        lines.next(),
        Some("t,K,M,epsilon,lhs,rhs_F,rhs_F0,ratio,pass")
    );
    // two sources, 81 time nodes each, one header
    assert_eq!(lines.count(), 2 * 81);
    assert!(read(dir.path(), "report.txt").contains("VERDICT: PASS"));
    assert!(read(dir.path(), "k_search.csv").starts_with("K,pass\n"));
}

#[test]
fn missing_horizon_is_invalid_input() {
    let dir = TempDir::new().unwrap();
    let cfg =
        r#"{"command": "solve", "problem": {"n_cells": 8, "n_steps": 4}, "source": {"F": 1}}"#;
    let out = run(cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`T`"));
}

#[test]
fn unknown_variant_is_invalid_input() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"command": "probe", "problem": {"T": 1, "n_cells": 8, "n_steps": 4},
                  "nonlocal": {"variant": "sideways", "beta": {"form": "sine", "amplitude": 1}}}"#;
    let out = run(cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nonlocal.variant"));
}

#[test]
fn too_small_shift_fails_the_inequality() {
    let dir = TempDir::new().unwrap();
    let cfg = VERIFY.replacen(
        "\"command\": \"verify\",",
        "\"command\": \"verify\", \"estimate\": {\"K\": 0},",
        1,
    );
    let out = run(&cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(read(dir.path(), "report.txt").contains("VERDICT: FAIL"));
}

#[test]
fn exhausted_iterations_hit_the_resource_limit() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"command": "picard", "problem": {"domain": [0, 3], "T": 1, "n_cells": 16, "n_steps": 20},
                  "source": {"F0": 1}, "picard": {"max_iters": 2},
                  "nonlocal": {"variant": "local", "beta": {"form": "sine", "amplitude": 0.5}}}"#;
    let out = run(cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(
        read(dir.path(), "report.txt").contains("THEOREM: contraction-existence\nVERDICT: FAIL")
    );
}

#[test]
fn picard_run_writes_trace() {
    let dir = TempDir::new().unwrap();
    let out = run(&sample("picard.json"), dir.path(), &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let trace = read(dir.path(), "picard_trace.csv");
    assert!(trace.starts_with("iter,residual,quotient,K\n"));
    assert!(trace.lines().count() > 2);
}

#[test]
fn repeated_runs_are_byte_identical() {
    for cfg in [VERIFY.to_string(), sample("probe.json")] {
        let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
        assert_eq!(run(&cfg, a.path(), &["--seed", "7"]).status.code(), Some(0));
        assert_eq!(run(&cfg, b.path(), &["--seed", "7"]).status.code(), Some(0));
        let mut names: Vec<_> = fs::read_dir(a.path().join("out"))
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        names.sort();
        assert!(!names.is_empty());
        for name in names {
            let name = name.to_str().unwrap();
            assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
        }
    }
}

#[test]
fn probe_seed_flag_changes_the_sample() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let cfg = sample("probe.json");
    assert_eq!(run(&cfg, a.path(), &["--seed", "1"]).status.code(), Some(0));
    assert_eq!(run(&cfg, b.path(), &["--seed", "2"]).status.code(), Some(0));
    assert_ne!(
        read(a.path(), "lipschitz_probe.csv"),
        read(b.path(), "lipschitz_probe.csv")
    );
    assert!(read(a.path(), "report.txt").contains("seed: 1"));
}

#[test]
fn coefficient_table_is_read_relative_to_config() {
    let dir = TempDir::new().unwrap();
    let mut csv = String::from("x,t,b,f,lambda\n");
    for x in [0.0, 0.5, 1.0] {
        for t in [0.0, 1.0] {
            csv.push_str(&format!("{x},{t},{},0,0\n", 1.0 + x));
        }
    }
    fs::write(dir.path().join("coeffs.csv"), csv).unwrap();
    let cfg = r#"{"command": "solve", "problem": {"domain": [0, 1], "T": 1, "n_cells": 10, "n_steps": 5},
                  "coefficients": {"table": "coeffs.csv", "delta": 1, "sup_bound": 3},
                  "source": {"F0": 1}}"#;
    let out = run(cfg, dir.path(), &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(read(dir.path(), "solution.csv").lines().count(), 1 + 6 * 11);
}
