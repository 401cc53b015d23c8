use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn evgrid() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_evgrid"));
    c.env_remove("EVGRID_DATA_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    evgrid().args(args).output().unwrap()
}

fn scratch(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("evgrid-cli-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn model_summary() {
    let o = run(&["model"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["eigenvalues"].as_array().unwrap().len(), 12);
    assert_eq!(v["controllability_rank"], 2);
    assert_eq!(v["attack_node"], "B4");
}

#[test]
fn missing_grid_file_is_a_parse_error() {
    let o = run(&["--grid", "/definitely/not/here.json", "model"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("[parse]") && err.contains("/definitely/not/here.json"), "{err}");
}

#[test]
fn unknown_node_is_a_model_error() {
    let o = run(&["--node", "B9", "model"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[model]"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["attack", "--xi", "0.1"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn default_station_cannot_afford_the_attack() {
    let o = run(&["attack"]);
    assert_eq!(o.status.code(), Some(2));
    let v = stdout_json(&o);
    assert_eq!(v["feasible"], false);
    assert!(v["violation"].as_f64().unwrap() > 0.0);
}

#[test]
fn scaled_attack_writes_a_verified_bundle() {
    let dir = scratch("attack");
    let o = run(&["attack", "--peak-mw", "355", "--simulate", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = read_json(&dir.join("manifest.json"));
    let files = m["files"].as_array().unwrap();
    let names: Vec<&str> = files.iter().map(|f| f["file"].as_str().unwrap()).collect();
    assert_eq!(names, ["plan.json", "trace.csv", "trips.json"]);
    for f in files {
        let body = std::fs::read(dir.join(f["file"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), evgrid::export::sha256_hex(&body));
        assert_eq!(f["bytes"].as_u64().unwrap(), body.len() as u64);
    }
    let plan = read_json(&dir.join("plan.json"));
    assert_eq!(plan["feasible"], true);
    assert_eq!(plan["k_a"].as_array().unwrap().len(), 12);
    let trips = read_json(&dir.join("trips.json"));
    assert!(!trips.as_array().unwrap().is_empty());
    let trace = std::fs::read_to_string(dir.join("trace.csv")).unwrap();
    assert!(trace.lines().next().unwrap().starts_with("t,delta_B7,"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn chance_margin_is_reported() {
    let o = run(&["attack", "--peak-mw", "355", "--eta", "0.005", "--stdev-from-profile"]);
    assert_eq!(o.status.code(), Some(2));
    let v = stdout_json(&o);
    let alpha = v["alpha"].as_f64().unwrap();
    // 2.576 sigma of roughly 124.8 MW
    assert!((alpha - 321.6).abs() < 0.5, "{alpha}");
}

#[test]
fn per_unit_output() {
    let mw = stdout_json(&run(&["attack", "--peak-mw", "355"]));
    let pu = stdout_json(&run(&["--pu", "attack", "--peak-mw", "355"]));
    assert_eq!(pu["units"], "pu");
    let ratio = mw["delta_p"].as_f64().unwrap() / pu["delta_p"].as_f64().unwrap();
    assert!((ratio - 100.0).abs() < 1e-9);
}

#[test]
fn sweep_is_reproducible() {
    let a = scratch("sweep-a");
    let b = scratch("sweep-b");
    let region = ["--xi-min", "-0.03", "--xi-max", "0.03", "--xi-step", "0.03", "--wn-min", "5", "--wn-max", "12", "--wn-step", "1"];
    for d in [&a, &b] {
        let mut args = vec!["sweep", "--out", d.to_str().unwrap()];
        args.extend(region);
        assert_eq!(run(&args).status.code(), Some(0));
    }
    for f in ["sweep_matrix.csv", "sweep_cells.csv", "manifest.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let m = std::fs::read_to_string(a.join("sweep_matrix.csv")).unwrap();
    assert_eq!(m.lines().next().unwrap(), "omega_n,-0.03,0,0.03");
    assert_eq!(m.lines().count(), 1 + 8);
    std::fs::remove_dir_all(&a).unwrap();
    std::fs::remove_dir_all(&b).unwrap();
}

#[test]
fn default_sweep_rows() {
    let d = scratch("sweep-full");
    assert_eq!(run(&["sweep", "--out", d.to_str().unwrap()]).status.code(), Some(0));
    let m = std::fs::read_to_string(d.join("sweep_matrix.csv")).unwrap();
    let rows: Vec<&str> = m.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(rows.len(), 102);
    for w in ["5.7", "10.7", "11.3", "11.9", "12.6"] {
        assert!(rows.contains(&w), "{w}");
    }
    assert_eq!(m.lines().next().unwrap().split(',').count(), 1 + 41);
    std::fs::remove_dir_all(&d).unwrap();
}

#[test]
fn sensitivity_lists() {
    let d = scratch("sens");
    let o = run(&["sensitivity", "--errors", "--out", d.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(d.join("sensitivity.csv")).unwrap();
    assert_eq!(csv, "error_pct,delta_p_mw,xi,omega_n,epsilon,feasible\n");

    let o = run(&["sensitivity", "--errors=-50,0,100", "--out", d.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(d.join("sensitivity.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("-50,"));
    assert!(lines[3].starts_with("100,NA,"));
    std::fs::remove_dir_all(&d).unwrap();
}

#[test]
fn data_dir_from_environment() {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/data");
    let o = evgrid().env("EVGRID_DATA_DIR", data).arg("model").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let o = evgrid().env("EVGRID_DATA_DIR", "/definitely/not/here").arg("model").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("manhattan.json"));
}
