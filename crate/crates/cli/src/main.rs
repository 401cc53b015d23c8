//! `evgrid` command-line front end.
//!
//! Exit status: 0 success, 2 attack infeasible under the demand bound, 1 error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use evgrid::attack_synthesis::{controllability, PlacementContext, UncertaintySpec};
use evgrid::dynamics::{
    detect_overfrequency_trip, max_real_part, operating_state, simulate, spectrum, CaptureConfig, InputSchedule,
    OperatingState, Plant, TripScenario, DEFAULT_DT, TRIP_DWELL_S, TRIP_THRESHOLD_HZ,
};
use evgrid::export::{self, fmt9};
use evgrid::grid_model::{assemble_descriptor, bundled_grid, load_grid_spec, GridSpec, StateSpaceModel};
use evgrid::vulnerability::{
    participation_factors, sensitivity, sweep, targets_from, RegionSpec, SensitivityCase, DEFAULT_ERROR_PCTS,
};
use evgrid::{Complex64, DVector, Error, Result, Stage};

const DATASET_FILE: &str = "manhattan.json";

#[derive(Parser, Debug)]
#[command(name = "evgrid", version, about = "Demand-side attack analysis on linearized grid models")]
struct Cli {
    /// Grid description (JSON). Defaults to $EVGRID_DATA_DIR/manhattan.json, then the bundled dataset.
    #[arg(long, global = true)]
    grid: Option<PathBuf>,
    #[arg(long, env = "EVGRID_DATA_DIR", global = true, hide_env_values = true)]
    data_dir: Option<PathBuf>,
    /// Attacked load node.
    #[arg(long, global = true, default_value = "B4")]
    node: String,
    /// Directory for reports; nothing is written without it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print per-unit quantities instead of MW.
    #[arg(long, global = true)]
    pu: bool,
    /// Recorded in the manifest; every computation is deterministic.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Pre-attack spectrum and controllability from the attacked node.
    Model,
    /// Synthesize a gain for one target pair.
    Attack(AttackArgs),
    /// Open-loop generator-trip transient.
    Simulate(SimArgs),
    /// Minimum demand over a (xi, omega_n) lattice.
    Sweep(SweepArgs),
    /// Demand needed under uniform parameter errors.
    Sensitivity(SensArgs),
}

#[derive(Args, Debug, Clone)]
struct DemandArgs {
    /// Multiply the node's EVCS statistics by this factor.
    #[arg(long, conflicts_with = "peak_mw")]
    scale: Option<f64>,
    /// Scale the EVCS profile so that its maximum equals this many MW.
    #[arg(long)]
    peak_mw: Option<f64>,
    /// Explicit demand bound in MW, ignoring the profile.
    #[arg(long)]
    cap_mw: Option<f64>,
    /// Hour of week (0..167) for the demand statistics; defaults to the profile peak.
    #[arg(long)]
    hour: Option<usize>,
    /// Tail probability of the chance constraint; omit for a deterministic bound.
    #[arg(long)]
    eta: Option<f64>,
    /// Demand-estimate standard deviation in MW.
    #[arg(long, conflicts_with = "stdev_from_profile")]
    stdev: Option<f64>,
    /// Take the standard deviation from the (scaled) profile at --hour.
    #[arg(long)]
    stdev_from_profile: bool,
}

#[derive(Args, Debug, Clone)]
struct TripArgs {
    /// Generator whose output is lost; defaults to the largest scheduled unit.
    #[arg(long)]
    trip: Option<String>,
    /// Frequency deviation (Hz) at which the operating state is captured.
    #[arg(long, default_value_t = 2.0)]
    boundary_hz: f64,
}

#[derive(Args, Debug)]
struct AttackArgs {
    /// Damping ratio of the target pair (negative is unstable).
    #[arg(long, allow_hyphen_values = true, requires = "wn", conflicts_with_all = ["re", "im"])]
    xi: Option<f64>,
    /// Natural frequency of the target pair, rad/s.
    #[arg(long)]
    wn: Option<f64>,
    /// Real part of the target pair.
    #[arg(long, allow_hyphen_values = true, requires = "im")]
    re: Option<f64>,
    /// Imaginary part of the target pair (its conjugate is added).
    #[arg(long, allow_hyphen_values = true)]
    im: Option<f64>,
    #[command(flatten)]
    demand: DemandArgs,
    #[command(flatten)]
    trip: TripArgs,
    /// Run the closed loop from the captured state and look for trips.
    #[arg(long)]
    simulate: bool,
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
    #[arg(long, default_value_t = DEFAULT_DT)]
    dt: f64,
}

#[derive(Args, Debug)]
struct SimArgs {
    #[command(flatten)]
    trip: TripArgs,
    #[arg(long, default_value_t = 20.0)]
    horizon: f64,
    #[arg(long, default_value_t = DEFAULT_DT)]
    dt: f64,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, allow_hyphen_values = true, default_value_t = -0.09)]
    xi_min: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.03)]
    xi_max: f64,
    #[arg(long, default_value_t = 0.003)]
    xi_step: f64,
    #[arg(long, default_value_t = 2.5)]
    wn_min: f64,
    #[arg(long, default_value_t = 12.6)]
    wn_max: f64,
    #[arg(long, default_value_t = 0.1)]
    wn_step: f64,
    #[command(flatten)]
    demand: DemandArgs,
    #[command(flatten)]
    trip: TripArgs,
}

#[derive(Args, Debug)]
struct SensArgs {
    /// Signed parameter errors in percent; write `--errors=-50,10` when the
    /// list starts with a negative value.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, num_args = 0..)]
    errors: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.03)]
    xi: f64,
    #[arg(long, default_value_t = 12.566)]
    wn: f64,
    #[command(flatten)]
    demand: DemandArgs,
    #[command(flatten)]
    trip: TripArgs,
}

enum Outcome {
    Done,
    Infeasible,
}

fn cli_err(stage: Stage, msg: impl Into<String>) -> Error {
    Error::invalid(stage, msg)
}

fn load_spec(cli: &Cli) -> Result<(GridSpec, String)> {
    if let Some(p) = &cli.grid {
        return Ok((load_grid_spec(p)?, p.display().to_string()));
    }
    if let Some(dir) = &cli.data_dir {
        let p = dir.join(DATASET_FILE);
        return Ok((load_grid_spec(&p)?, p.display().to_string()));
    }
    Ok((bundled_grid(), "bundled".into()))
}

struct Demand {
    cap_pu: f64,
    scale: f64,
    hour: Option<usize>,
    uncertainty: Option<UncertaintySpec>,
}

fn resolve_demand(spec: &GridSpec, node: &str, d: &DemandArgs) -> Result<Demand> {
    let base = spec.base_mva;
    let profile = spec.load(node).and_then(|l| l.evcs.as_ref());
    let scale = match (d.scale, d.peak_mw) {
        (Some(s), _) => s,
        (None, Some(p)) => {
            let prof = profile.ok_or_else(|| cli_err(Stage::Validate, format!("node {node} has no EVCS profile")))?;
            p * 1000.0 / prof.max_kw
        }
        (None, None) => 1.0,
    };
    if !(scale.is_finite() && scale > 0.0) {
        return Err(cli_err(Stage::Validate, "scale must be positive"));
    }
    let cap_pu = match (d.cap_mw, profile) {
        (Some(c), _) => c / base,
        (None, Some(p)) => p.max_kw * scale / 1000.0 / base,
        (None, None) => {
            return Err(cli_err(Stage::Validate, format!("node {node} has no EVCS profile; pass --cap-mw")))
        }
    };
    if !(cap_pu.is_finite() && cap_pu >= 0.0) {
        return Err(cli_err(Stage::Validate, "demand cap must be finite and non-negative"));
    }
    let hour = match (d.hour, profile) {
        (Some(h), _) if h >= 168 => return Err(cli_err(Stage::Validate, format!("hour {h} is outside 0..167"))),
        (Some(h), _) => Some(h),
        (None, Some(p)) => Some(p.peak_hour()),
        (None, None) => None,
    };
    let uncertainty = match d.eta {
        None => None,
        Some(eta) => {
            let stdev_mw = match d.stdev {
                Some(s) => s,
                None => {
                    let p = profile.ok_or_else(|| {
                        cli_err(Stage::Validate, format!("node {node} has no EVCS profile; pass --stdev"))
                    })?;
                    p.stdev_kw_at(hour.unwrap()).unwrap() * scale / 1000.0
                }
            };
            Some(UncertaintySpec { eta, stdev_pu: stdev_mw / base })
        }
    };
    Ok(Demand { cap_pu, scale, hour, uncertainty })
}

fn trip_generator(spec: &GridSpec, t: &TripArgs) -> Result<String> {
    match &t.trip {
        Some(g) => Ok(g.clone()),
        None => spec
            .generators
            .iter()
            .max_by(|a, b| a.output_mw.total_cmp(&b.output_mw))
            .map(|g| g.node.clone())
            .ok_or_else(|| cli_err(Stage::Validate, "grid has no generators")),
    }
}

fn capture(spec: &GridSpec, model: &StateSpaceModel, t: &TripArgs) -> Result<(TripScenario, OperatingState)> {
    let gen = trip_generator(spec, t)?;
    let scenario = TripScenario::from_spec(spec, &gen)?;
    let cfg = CaptureConfig { boundary_hz: t.boundary_hz, ..CaptureConfig::default() };
    let op = operating_state(model, &scenario, &cfg)?;
    Ok((scenario, op))
}

fn complex_list(z: &[Complex64]) -> Value {
    Value::Array(z.iter().map(|c| json!([fmt9(c.re).parse::<f64>().unwrap(), fmt9(c.im).parse::<f64>().unwrap()])).collect())
}

fn power(cli: &Cli, pu: f64, base: f64) -> f64 {
    if cli.pu {
        pu
    } else {
        pu * base
    }
}

fn unit(cli: &Cli) -> &'static str {
    if cli.pu {
        "pu"
    } else {
        "mw"
    }
}

fn emit(cli: &Cli, files: Vec<(&str, String)>, params: Value) -> Result<()> {
    if let Some(dir) = &cli.out {
        export::write_bundle(dir, &files, params)?;
    }
    Ok(())
}

fn print(v: &Value) {
    use std::io::Write;
    // a closed pipe (e.g. `| head`) is not an error worth a panic
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(v).unwrap());
}

fn base_params(cli: &Cli, source: &str, spec: &GridSpec) -> Result<Value> {
    Ok(json!({
        "grid": source,
        "grid_sha256": export::sha256_hex(spec.to_json_string()?.as_bytes()),
        "node": cli.node,
        "seed": cli.seed,
        "units": unit(cli),
    }))
}

fn cmd_model(cli: &Cli) -> Result<Outcome> {
    let (spec, source) = load_spec(cli)?;
    let model = assemble_descriptor(&spec, &cli.node)?;
    let ev = spectrum(&model.a)?;
    let ct = controllability(&model.a, &model.b);
    let s0 = ct.singular_values[0];
    let rel: Vec<f64> = ct.singular_values.iter().map(|s| s / s0).collect();
    let (_, pf) = participation_factors(&model.a)?;
    let names = model.state_names();
    let dominant: Vec<Value> = (0..pf.ncols())
        .map(|i| {
            let k = (0..pf.nrows()).max_by(|&a, &b| pf[(a, i)].total_cmp(&pf[(b, i)])).unwrap();
            json!({ "mode": i, "state": names[k], "participation": fmt9(pf[(k, i)]).parse::<f64>().unwrap() })
        })
        .collect();
    let report = json!({
        "n": model.n(),
        "states": names,
        "attack_node": model.attack_node,
        "eigenvalues": complex_list(&ev),
        "stable": max_real_part(&ev) < 0.0,
        "controllability_rank": ct.rank,
        "controllability_singular_values_rel": rel.iter().map(|v| fmt9(*v).parse::<f64>().unwrap()).collect::<Vec<_>>(),
        "dominant_state_per_mode": dominant,
    });
    let mut ev_csv = String::from("re,im\n");
    for z in &ev {
        ev_csv.push_str(&format!("{},{}\n", fmt9(z.re), fmt9(z.im)));
    }
    emit(
        cli,
        vec![("model.json", serde_json::to_string_pretty(&report)? + "\n"), ("eigenvalues.csv", ev_csv)],
        base_params(cli, &source, &spec)?,
    )?;
    print(&report);
    Ok(Outcome::Done)
}

fn demand_params(cli: &Cli, d: &Demand, base: f64) -> Value {
    json!({
        "cap": power(cli, d.cap_pu, base),
        "scale": d.scale,
        "hour": d.hour,
        "eta": d.uncertainty.map(|u| u.eta),
        "stdev": d.uncertainty.map(|u| power(cli, u.stdev_pu, base)),
    })
}

fn cmd_attack(cli: &Cli, a: &AttackArgs) -> Result<Outcome> {
    let (spec, source) = load_spec(cli)?;
    let model = assemble_descriptor(&spec, &cli.node)?;
    let targets: Vec<Complex64> = match (a.xi, a.wn, a.re, a.im) {
        (Some(xi), Some(wn), _, _) => targets_from(xi, wn)?.to_vec(),
        (_, _, Some(re), Some(im)) => vec![Complex64::new(re, im.abs()), Complex64::new(re, -im.abs())],
        _ => vec![Complex64::new(0.5, 5.0), Complex64::new(0.5, -5.0)],
    };
    let demand = resolve_demand(&spec, &cli.node, &a.demand)?;
    let (scenario, op) = capture(&spec, &model, &a.trip)?;
    let ctx = PlacementContext::new(&model.a, &model.b)?;
    let plan = ctx.plan(&targets, &op.x, demand.cap_pu, demand.uncertainty.as_ref())?;
    let base = spec.base_mva;

    let mut files = vec![(
        "plan.json",
        serde_json::to_string_pretty(&export::plan_json(&plan, base, &cli.node))? + "\n",
    )];
    let mut trips = Value::Null;
    if a.simulate {
        // the lost injection keeps acting during the attack; a mirrored state flips it too
        let mut d = scenario.disturbance(&model)?;
        if op.mirrored {
            d = -d;
        }
        let plant = Plant::open_loop(&model).with_feedback(&plan.k).with_disturbance(d);
        let trace = simulate(&plant, &op.x, &InputSchedule::Zero, a.horizon, a.dt)?;
        let ev = detect_overfrequency_trip(&trace, TRIP_THRESHOLD_HZ, TRIP_DWELL_S)?;
        trips = export::trips_json(&ev);
        files.push(("trace.csv", export::trace_csv(&trace)));
        files.push(("trips.json", serde_json::to_string_pretty(&trips)? + "\n"));
    }

    let report = json!({
        "feasible": plan.feasible,
        "targets": complex_list(&plan.targets),
        "delta_p": power(cli, plan.delta_p_pu, base),
        "cap": power(cli, plan.cap_pu, base),
        "alpha": power(cli, plan.alpha_pu, base),
        "violation": power(cli, plan.violation_pu, base),
        "epsilon": plan.epsilon,
        "units": unit(cli),
        "trip_generator": scenario.generator,
        "capture_time_s": op.capture_time,
        "trips": trips,
    });
    let mut params = base_params(cli, &source, &spec)?;
    params["demand"] = demand_params(cli, &demand, base);
    params["targets"] = complex_list(&targets);
    emit(cli, files, params)?;
    print(&report);
    Ok(if plan.feasible { Outcome::Done } else { Outcome::Infeasible })
}

fn cmd_simulate(cli: &Cli, s: &SimArgs) -> Result<Outcome> {
    let (spec, source) = load_spec(cli)?;
    let model = assemble_descriptor(&spec, &cli.node)?;
    let gen = trip_generator(&spec, &s.trip)?;
    let scenario = TripScenario::from_spec(&spec, &gen)?;
    let d = scenario.disturbance(&model)?;
    let plant = Plant::open_loop(&model).with_disturbance(d);
    let trace = simulate(&plant, &DVector::zeros(model.n()), &InputSchedule::Zero, s.horizon, s.dt)?;
    let ev = detect_overfrequency_trip(&trace, TRIP_THRESHOLD_HZ, TRIP_DWELL_S)?;
    let nadir = trace.frequencies.iter().flatten().fold(f64::INFINITY, |m, &f| m.min(f));
    let peak = trace.frequencies.iter().flatten().fold(f64::NEG_INFINITY, |m, &f| m.max(f));
    let report = json!({
        "trip_generator": gen,
        "lost": power(cli, scenario.lost_pu, spec.base_mva),
        "units": unit(cli),
        "min_frequency_hz": fmt9(nadir).parse::<f64>().unwrap(),
        "max_frequency_hz": fmt9(peak).parse::<f64>().unwrap(),
        "trips": export::trips_json(&ev),
    });
    let mut params = base_params(cli, &source, &spec)?;
    params["horizon"] = json!(s.horizon);
    params["dt"] = json!(s.dt);
    emit(cli, vec![("trace.csv", export::trace_csv(&trace))], params)?;
    print(&report);
    Ok(Outcome::Done)
}

fn cmd_sweep(cli: &Cli, s: &SweepArgs) -> Result<Outcome> {
    let (spec, source) = load_spec(cli)?;
    let model = assemble_descriptor(&spec, &cli.node)?;
    let demand = resolve_demand(&spec, &cli.node, &s.demand)?;
    let (_, op) = capture(&spec, &model, &s.trip)?;
    let region = RegionSpec {
        xi_min: s.xi_min,
        xi_max: s.xi_max,
        xi_step: s.xi_step,
        omega_min: s.wn_min,
        omega_max: s.wn_max,
        omega_step: s.wn_step,
    };
    let ctx = PlacementContext::new(&model.a, &model.b)?;
    let r = sweep(&ctx, &op.x, demand.cap_pu, demand.uncertainty.as_ref(), &region, &cli.node, spec.base_mva)?;
    let available = r.cells.iter().filter(|c| c.available()).count();
    let feasible = r.cells.iter().filter(|c| c.feasible).count();
    let cheapest = r
        .cells
        .iter()
        .filter(|c| c.available())
        .min_by(|a, b| a.delta_p_pu.unwrap().total_cmp(&b.delta_p_pu.unwrap()));
    let report = json!({
        "cells": r.cells.len(),
        "available": available,
        "feasible": feasible,
        "units": unit(cli),
        "cheapest": cheapest.map(|c| json!({
            "xi": c.xi, "omega_n": c.omega_n, "delta_p": power(cli, c.delta_p_pu.unwrap(), spec.base_mva)
        })),
        "model_hash": r.model_hash,
    });
    let mut params = base_params(cli, &source, &spec)?;
    params["demand"] = demand_params(cli, &demand, spec.base_mva);
    params["region"] = json!([s.xi_min, s.xi_max, s.xi_step, s.wn_min, s.wn_max, s.wn_step]);
    emit(
        cli,
        vec![("sweep_matrix.csv", export::sweep_matrix_csv(&r)), ("sweep_cells.csv", export::sweep_long_csv(&r))],
        params,
    )?;
    print(&report);
    Ok(Outcome::Done)
}

fn cmd_sensitivity(cli: &Cli, s: &SensArgs) -> Result<Outcome> {
    let (spec, source) = load_spec(cli)?;
    // fail fast on a bad node before spawning the per-row work
    assemble_descriptor(&spec, &cli.node)?;
    let demand = resolve_demand(&spec, &cli.node, &s.demand)?;
    let gen = trip_generator(&spec, &s.trip)?;
    let errors = s.errors.clone().unwrap_or_else(|| DEFAULT_ERROR_PCTS.to_vec());
    let case = SensitivityCase {
        spec: &spec,
        attack_node: &cli.node,
        scenario_generator: &gen,
        capture: CaptureConfig { boundary_hz: s.trip.boundary_hz, ..CaptureConfig::default() },
        xi: s.xi,
        omega_n: s.wn,
        cap_pu: demand.cap_pu,
        uncertainty: demand.uncertainty,
    };
    let rows = sensitivity(&case, &errors)?;
    let base = spec.base_mva;
    let report = json!({
        "units": unit(cli),
        "rows": rows.iter().map(|r| json!({
            "error_pct": r.error_pct,
            "delta_p": r.delta_p_pu.map(|v| power(cli, v, base)),
            "feasible": r.feasible,
            "note": r.note,
        })).collect::<Vec<_>>(),
    });
    let mut params = base_params(cli, &source, &spec)?;
    params["demand"] = demand_params(cli, &demand, base);
    params["cell"] = json!([s.xi, s.wn]);
    emit(cli, vec![("sensitivity.csv", export::sensitivity_csv(&rows, base))], params)?;
    print(&report);
    Ok(Outcome::Done)
}

fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.cmd {
        Cmd::Model => cmd_model(cli),
        Cmd::Attack(a) => cmd_attack(cli, a),
        Cmd::Simulate(s) => cmd_simulate(cli, s),
        Cmd::Sweep(s) => cmd_sweep(cli, s),
        Cmd::Sensitivity(s) => cmd_sensitivity(cli, s),
    }
}

fn main() -> ExitCode {
    // usage errors exit 1 so that 2 keeps meaning "infeasible"
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Infeasible) => {
            eprintln!("infeasible: the required demand exceeds the bound");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
