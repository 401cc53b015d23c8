//! Machine-readable reports. Numbers in CSV output are rounded to nine
//! significant digits so that repeated runs compare byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::attack_synthesis::AttackPlan;
use crate::dynamics::{SimulationTrace, TripEvent};
use crate::error::Result;
use crate::vulnerability::{SensitivityRow, SweepResult};

/// Nine significant digits, shortest representation, `-0` folded to `0`.
pub fn fmt9(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "NaN".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r: f64 = format!("{v:.8e}").parse().unwrap();
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn opt9(v: Option<f64>) -> String {
    v.map(fmt9).unwrap_or_else(|| "NA".into())
}

fn complex_json(z: &[Complex64]) -> Value {
    Value::Array(z.iter().map(|c| json!({ "re": c.re, "im": c.im })).collect())
}

pub fn plan_json(plan: &AttackPlan, base_mva: f64, attack_node: &str) -> Value {
    json!({
        "attack_node": attack_node,
        "k_a": plan.k.as_slice(),
        "delta_p_pu": plan.delta_p_pu,
        "delta_p_mw": plan.delta_p_pu * base_mva,
        "cap_pu": plan.cap_pu,
        "cap_mw": plan.cap_pu * base_mva,
        "alpha_pu": plan.alpha_pu,
        "targets": complex_json(&plan.targets),
        "achieved": complex_json(&plan.achieved),
        "epsilon": plan.epsilon,
        "feasible": plan.feasible,
        "violation_pu": plan.violation_pu,
        "corrected": plan.corrected,
        "controllability_rank": plan.rank_mc,
    })
}

pub fn trips_json(events: &[TripEvent]) -> Value {
    serde_json::to_value(events).unwrap_or(Value::Null)
}

/// One row per sample: time, every state, generator frequencies in Hz, input.
pub fn trace_csv(trace: &SimulationTrace) -> String {
    let mut s = String::from("t");
    for n in &trace.state_names {
        s.push(',');
        s.push_str(n);
    }
    for g in &trace.gen_ids {
        let _ = write!(s, ",f_{g}_hz");
    }
    s.push_str(",u\n");
    for k in 0..trace.times.len() {
        s.push_str(&fmt9(trace.times[k]));
        for v in trace.states[k].iter().chain(&trace.frequencies[k]) {
            s.push(',');
            s.push_str(&fmt9(*v));
        }
        s.push(',');
        s.push_str(&fmt9(trace.input[k]));
        s.push('\n');
    }
    s
}

/// Demand in MW per cell, omega_n down the rows and xi across; `NA` where
/// synthesis failed or the placement error exceeds the availability limit.
pub fn sweep_matrix_csv(r: &SweepResult) -> String {
    let mut s = String::from("omega_n");
    for xi in &r.xis {
        let _ = write!(s, ",{}", fmt9(*xi));
    }
    s.push('\n');
    for (wi, w) in r.omegas.iter().enumerate() {
        s.push_str(&fmt9(*w));
        for xi in 0..r.xis.len() {
            let c = r.cell(xi, wi);
            s.push(',');
            if c.available() {
                s.push_str(&fmt9(c.delta_p_pu.unwrap() * r.base_mva));
            } else {
                s.push_str("NA");
            }
        }
        s.push('\n');
    }
    s
}

pub fn sweep_long_csv(r: &SweepResult) -> String {
    let mut s = String::from("xi,omega_n,delta_p_mw,epsilon,feasible\n");
    for c in &r.cells {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt9(c.xi),
            fmt9(c.omega_n),
            opt9(c.delta_p_pu.map(|v| v * r.base_mva)),
            opt9(c.epsilon),
            c.feasible
        );
    }
    s
}

pub fn sensitivity_csv(rows: &[SensitivityRow], base_mva: f64) -> String {
    let mut s = String::from("error_pct,delta_p_mw,xi,omega_n,epsilon,feasible\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            fmt9(r.error_pct),
            opt9(r.delta_p_pu.map(|v| v * base_mva)),
            opt9(r.achieved_xi),
            opt9(r.achieved_omega_n),
            opt9(r.epsilon),
            r.feasible
        );
    }
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes each `(name, contents)` under `dir` and a `manifest.json` listing
/// their digests next to `params`.
pub fn write_bundle(dir: &Path, files: &[(&str, String)], params: Value) -> Result<Value> {
    std::fs::create_dir_all(dir)?;
    let mut listed = Vec::new();
    for (name, body) in files {
        std::fs::write(dir.join(name), body)?;
        listed.push(json!({ "file": name, "sha256": sha256_hex(body.as_bytes()), "bytes": body.len() }));
    }
    let manifest = json!({
        "tool": concat!("evgrid ", env!("CARGO_PKG_VERSION")),
        "params": params,
        "files": listed,
    });
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}
