//! End-to-end tests of the `chargeshape` binary: output formats, exit
//! codes and the documented JSON/CSV schemas.

use std::path::Path;
use std::process::{Command, Output};

const PI2: f64 = core::f64::consts::PI * core::f64::consts::PI;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chargeshape"))
}

fn write(dir: &Path, name: &str, contents: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn solve_ball_at_zero_charge_prints_result_json() {
    let dir = tempfile::tempdir().unwrap();
    let shape = write(dir.path(), "ball.json", r#"{"type":"ball","radius":1.0}"#);
    let out = bin()
        .args(["solve", shape.to_str().unwrap(), "--q", "0", "--grid-n", "1025"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    for key in ["q", "domain", "E", "lambda", "dirichlet", "coulomb", "iters", "residual"] {
        assert!(doc.get(key).is_some(), "missing key {key}");
    }
    assert_eq!(doc["domain"], "ball");
    let e = doc["E"].as_f64().unwrap();
    assert!(((e - PI2) / PI2).abs() < 1e-3, "E = {e}");
}

#[test]
fn solve_ball_at_half_charge_lands_in_the_perturbation_window() {
    let dir = tempfile::tempdir().unwrap();
    let shape = write(dir.path(), "ball.json", r#"{"type":"ball","radius":1.0}"#);
    let out = bin()
        .args(["solve", shape.to_str().unwrap(), "--q", "0.5", "--grid-n", "1025"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let e = doc["E"].as_f64().unwrap();
    // pi^2 < E <= pi^2 + (q/2) D_w with D_w ~ 1.786
    assert!(e > PI2 && e < PI2 + 0.25 * 1.787, "E = {e}");
}

#[test]
fn solve_missing_file_exits_one_and_names_the_path() {
    let out = bin()
        .args(["solve", "/nonexistent/shape.json", "--q", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("/nonexistent/shape.json"));
}

#[test]
fn solve_malformed_shape_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let shape = write(dir.path(), "bad.json", r#"{"type":"ball"}"#);
    let out = bin()
        .args(["solve", shape.to_str().unwrap(), "--q", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("malformed"));
}

#[test]
fn sweep_emits_ordered_rows_with_nondecreasing_energy() {
    let dir = tempfile::tempdir().unwrap();
    let shape = write(dir.path(), "ball.json", r#"{"type":"ball","radius":1.0}"#);
    let out = bin()
        .args([
            "sweep",
            shape.to_str().unwrap(),
            "--q-list",
            "0,0.1,0.2",
            "--grid-n",
            "1025",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "q,E,lambda,dirichlet,coulomb,status");
    let mut prev_e = f64::NEG_INFINITY;
    for (row, q) in lines.zip(["0", "0.1", "0.2"]) {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 6, "row {row}");
        assert_eq!(cols[0], q);
        assert_eq!(cols[5], "ok");
        let e: f64 = cols[1].parse().unwrap();
        assert!(e >= prev_e, "E not nondecreasing: {row}");
        prev_e = e;
    }
}

#[test]
fn sweep_rejects_an_empty_q_list() {
    let dir = tempfile::tempdir().unwrap();
    let shape = write(dir.path(), "ball.json", r#"{"type":"ball","radius":1.0}"#);
    let out = bin()
        .args(["sweep", shape.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn optimize_writes_shape_and_trace_files() {
    let dir = tempfile::tempdir().unwrap();
    let shape = write(
        dir.path(),
        "start.json",
        r#"{"type":"nearly_spherical","base_radius":1.0,"coeffs":[[2,0,0.05]]}"#,
    );
    let out_path = dir.path().join("final.json");
    let trace_path = dir.path().join("trace.csv");
    let out = bin()
        .args([
            "optimize",
            shape.to_str().unwrap(),
            "--q",
            "0.05",
            "--l-max",
            "2",
            "--max-iter",
            "1",
            "--grid-n",
            "16",
            "--tol",
            "1e-4",
            "--out",
            out_path.to_str().unwrap(),
            "--trace",
            trace_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let final_doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(final_doc["type"], "nearly_spherical");
    assert!(final_doc["coeffs"].is_array());
    let trace = std::fs::read_to_string(&trace_path).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next().unwrap(), "iteration,E,volume,asymmetry,step");
    assert!(lines.next().is_some(), "trace has no data rows");
}

#[test]
fn optimize_rejects_non_star_shaped_starts() {
    let dir = tempfile::tempdir().unwrap();
    let shape = write(dir.path(), "ball.json", r#"{"type":"ball","radius":1.0}"#);
    let out = bin()
        .args(["optimize", shape.to_str().unwrap(), "--q", "0.05"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("nearly_spherical"));
}

#[test]
fn asymptotics_table_flags_the_crossing_once_and_persistently() {
    let out = bin()
        .args(["asymptotics", "--q-min", "10", "--q-max", "10000", "--points", "40"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "q,N_star,U,q_over_4,crossing");
    let flags: Vec<u32> = lines
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    // the flag switches from 0 to 1 exactly once and never back
    let switches = flags.windows(2).filter(|w| w[0] != w[1]).count();
    assert_eq!(switches, 1, "flags {flags:?}");
    assert_eq!(*flags.first().unwrap(), 0);
    assert_eq!(*flags.last().unwrap(), 1);
}

#[test]
fn nondim_reproduces_the_reference_island() {
    let dir = tempfile::tempdir().unwrap();
    // m* = 2 m_e, N = 2, eps = 10, V = (4 pi/3)(10 nm)^3
    let params = write(
        dir.path(),
        "params.json",
        r#"{"m_star_kg":1.8218767403e-30,"n_pairs":2,"epsilon_r":10.0,"volume_m3":4.1887902047863905e-24}"#,
    );
    let out = bin().args(["nondim", params.to_str().unwrap()]).output().unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let q = doc["q"].as_f64().unwrap();
    assert!(((q - 302.35618030887946) / 302.35618030887946).abs() < 1e-8, "q = {q}");
    assert!(doc["energy_prefactor_joules"].as_f64().unwrap() > 0.0);
}

#[test]
fn nondim_single_pair_gives_zero_charge() {
    let dir = tempfile::tempdir().unwrap();
    let params = write(
        dir.path(),
        "params.json",
        r#"{"m_star_kg":9.1093837015e-31,"n_pairs":1,"epsilon_r":5.0,"volume_m3":1e-24}"#,
    );
    let out = bin().args(["nondim", params.to_str().unwrap()]).output().unwrap();
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["q"].as_f64().unwrap(), 0.0);
}

#[test]
fn nondim_rejects_invalid_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let params = write(
        dir.path(),
        "params.json",
        r#"{"m_star_kg":1e-30,"n_pairs":2,"epsilon_r":1.0,"volume_m3":-1.0}"#,
    );
    let out = bin().args(["nondim", params.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    let missing = write(dir.path(), "missing.json", r#"{"n_pairs":2}"#);
    let out = bin().args(["nondim", missing.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("m_star_kg") || stderr(&out).contains("missing field"));
}
