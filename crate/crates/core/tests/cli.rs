use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gdvt::io::{manifest_path, read_points, sha256_hex};

fn gdvt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gdvt")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().into()
}

const PERIMETER: &str = "[model]\nkind = \"perimeter\"\nalpha = 0.12\ntheta = -2.0\nz = 200\n";

#[test]
fn zero_iterations_print_the_starting_lattice() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "m.toml", PERIMETER);
    let out = gdvt(&["simulate", "--config", &config, "--iters", "0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let points = gdvt::io::parse_points(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert!(points.len() >= 150, "{}", points.len());
}

#[test]
fn same_seed_same_bytes_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "m.toml", PERIMETER);
    let run = |name: &str, seed: &str| {
        let path = dir.path().join(name);
        let p = path.to_str().unwrap();
        let out = gdvt(&["simulate", "--config", &config, "--iters", "3000", "--seed", seed, "--out-points", p]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        fs::read(&path).unwrap()
    };
    let (a, b, c) = (run("a.csv", "5"), run("b.csv", "5"), run("c.csv", "6"));
    assert_eq!(a, b);
    assert_ne!(a, c);
    let manifest = fs::read_to_string(manifest_path(&dir.path().join("a.csv"))).unwrap();
    assert!(manifest.contains(&format!("output_sha256={}", sha256_hex(&a))));
    assert!(manifest.contains("seed=5"));
}

#[test]
fn replications_get_numbered_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "m.toml", PERIMETER);
    let out_points = dir.path().join("rep.csv");
    let out = gdvt(&[
        "simulate",
        "--config",
        &config,
        "--iters",
        "500",
        "--replications",
        "3",
        "--seed-base",
        "10",
        "--out-points",
        out_points.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for i in 0..3 {
        assert!(read_points(&dir.path().join(format!("rep_{i:03}.csv"))).is_ok());
    }
}

#[test]
fn simulate_estimate_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let config = write(dir.path(), "m.toml", PERIMETER);
    let sim = gdvt(&["simulate", "--config", &config, "--iters", "20000", "--seed", "3", "--out-points", &d("p.csv")]);
    assert!(sim.status.success());
    let fit = gdvt(&["estimate", "--points", &d("p.csv"), "--model", &config, "--z-known", "200", "--out", &d("fit.txt")]);
    assert!(fit.status.success(), "{}", String::from_utf8_lossy(&fit.stderr));
    let text = fs::read_to_string(d("fit.txt")).unwrap();
    assert!(text.lines().any(|l| l.starts_with("theta=")), "{text}");
    let res = gdvt(&[
        "residuals",
        "--points",
        &d("p.csv"),
        "--fit",
        &d("fit.txt"),
        "--grid-side",
        "0.25",
        "--mc-per-square",
        "50",
        "--out-grid",
        &d("grid.csv"),
        "--out-svg",
        &d("grid.svg"),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let grid = fs::read_to_string(d("grid.csv")).unwrap();
    let stdout = String::from_utf8(res.stdout).unwrap();
    let squares: usize = stdout
        .split_whitespace()
        .find_map(|w| w.strip_prefix("squares="))
        .and_then(|n| n.parse().ok())
        .unwrap_or_else(|| panic!("{stdout}"));
    assert!(squares >= 4);
    assert_eq!(grid.lines().count(), 1 + squares);
    assert!(fs::read_to_string(d("grid.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "[model]\nkind = \"perimeter\"\neps = 0.2\nalpha = 0.1\n");
    assert_eq!(gdvt(&["simulate", "--config", &bad]).status.code(), Some(2));

    let config = write(dir.path(), "m.toml", PERIMETER);
    let three = write(dir.path(), "three.csv", "x,y\n0.1,0.1\n0.5,0.5\n0.9,0.2\n");
    assert_eq!(gdvt(&["estimate", "--points", &three, "--model", &config]).status.code(), Some(4));

    let garbled = write(dir.path(), "garbled.csv", "x,y\n0.1,0.1\nabc,0.2\n");
    assert_eq!(gdvt(&["estimate", "--points", &garbled, "--model", &config]).status.code(), Some(2));
}
