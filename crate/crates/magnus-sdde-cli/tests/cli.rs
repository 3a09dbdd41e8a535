//! End-to-end checks of the command line: exit codes, file outputs, and the
//! `2^-k` numeric forms.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magnus-sdde"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {path:?}: {e}"))
}

#[test]
fn converge_writes_report_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "converge",
        "--preset",
        "gbm",
        "--schemes",
        "em,mem",
        "--steps",
        "2^-2..2^-4",
        "--href",
        "2^-6",
        "--trials",
        "8",
        "--seed",
        "9",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let csv = read(&dir.path().join("report.csv"));
    assert!(csv.starts_with("scheme,h,mse,slope\n"));
    assert_eq!(csv.lines().count(), 1 + 2 * 3, "{csv}");
    let svg = read(&dir.path().join("report.svg"));
    assert_eq!(svg.matches("<polyline").count(), 2 + 2);
}

#[test]
fn converge_rejects_unknown_preset() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "converge",
        "--preset",
        "nope",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
}

#[test]
fn converge_rejects_misaligned_steps() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "converge",
        "--preset",
        "gbm",
        "--steps",
        "0.3",
        "--href",
        "2^-6",
        "--trials",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_writes_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.csv");
    let out = run(&[
        "simulate",
        "--preset",
        "example1",
        "--scheme",
        "mem",
        "--step",
        "2^-4",
        "--seed",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let csv = read(&path);
    assert!(csv.starts_with("t,y1,y2\n"));
    // history segment [-1, 0] plus forward steps on [0, 6] at h = 1/16
    assert_eq!(csv.lines().count(), 1 + 17 + 96);
    let first = csv.lines().nth(1).unwrap();
    assert!(first.starts_with("-1"), "{first}");
}

#[test]
fn spdde_stable_run_emits_field_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("field.csv");
    let svg_path = dir.path().join("field.svg");
    let out = run(&[
        "spdde",
        "--d",
        "10",
        "--D",
        "0.04",
        "--c",
        "0.15",
        "--tau",
        "1",
        "--ra",
        "1",
        "--rb",
        "10",
        "--noise",
        "correlated",
        "--scheme",
        "mem",
        "--step",
        "2^-4",
        "--T",
        "2",
        "--out",
        csv_path.to_str().unwrap(),
        "--svg",
        svg_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let csv = read(&csv_path);
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert_eq!(header.split(',').count(), 1 + 11); // t plus x_0..x_10
    assert_eq!(csv.lines().count(), 1 + 33); // t = 0..2 at h = 1/16
    // boundary columns pinned to zero
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[1].parse::<f64>().unwrap(), 0.0);
        assert_eq!(fields[11].parse::<f64>().unwrap(), 0.0);
    }
    assert!(read(&svg_path).contains("<rect"));
}

#[test]
fn spdde_divergence_exits_3_with_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("field.csv");
    let out = run(&[
        "spdde",
        "--d",
        "50",
        "--c",
        "0",
        "--tau",
        "0",
        "--ra",
        "0",
        "--rb",
        "0",
        "--scheme",
        "em",
        "--step",
        "2^-7",
        "--T",
        "6",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{out:?}");
    let csv = read(&csv_path);
    assert!(csv.lines().count() > 1, "partial rows present");
    assert!(csv.lines().count() < 770, "diverged well before the horizon");
}

#[test]
fn qwiener_field_shape_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let path_a = dir.path().join("a.csv");
    let path_b = dir.path().join("b.csv");
    for path in [&path_a, &path_b] {
        let out = run(&[
            "qwiener",
            "--kind",
            "correlated",
            "--modes",
            "8",
            "--href",
            "2^-6",
            "--T",
            "1",
            "--seed",
            "9",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{out:?}");
    }
    let a = read(&path_a);
    assert_eq!(a, read(&path_b), "same seed, same field");
    assert_eq!(a.lines().count(), 1 + 65);
    assert_eq!(a.lines().next().unwrap().split(',').count(), 1 + 9);
    // W^c(0, x) = 0
    let first_row: Vec<&str> = a.lines().nth(1).unwrap().split(',').collect();
    for v in &first_row[1..] {
        assert_eq!(v.parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn qwiener_uncorrelated_routes_modes_to_grid_points() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.csv");
    let out = run(&[
        "qwiener",
        "--kind",
        "uncorrelated",
        "--modes",
        "4",
        "--href",
        "0.25",
        "--T",
        "1",
        "--seed",
        "3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = read(&path);
    // column for x = 0 stays zero; others move
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert!(rows.iter().all(|r| r[1] == 0.0));
    assert!(rows.last().unwrap()[2] != 0.0);
}

#[test]
fn misaligned_qwiener_horizon_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "qwiener",
        "--href",
        "0.3",
        "--T",
        "1",
        "--out",
        dir.path().join("x.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
