//! Spectra, exact LTI stepping, over-frequency trip detection and the
//! generator-trip operating state.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result, Stage};
use crate::grid_model::{GridSpec, StateSpaceModel};

pub const DEFAULT_DT: f64 = 1e-3;
pub const TRIP_THRESHOLD_HZ: f64 = 62.0;
pub const TRIP_DWELL_S: f64 = 0.16;

/// Eigenvalues sorted by real part, then imaginary part.
pub fn spectrum(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if !a.is_square() {
        return Err(Error::invalid(Stage::Spectrum, "matrix is not square"));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(Stage::Spectrum, "matrix has non-finite entries"));
    }
    if a.nrows() == 0 {
        return Ok(vec![]);
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::invalid(Stage::Spectrum, "Schur iteration did not converge"))?;
    let mut ev: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    sort_canonical(&mut ev);
    Ok(ev)
}

pub fn sort_canonical(ev: &mut [Complex64]) {
    ev.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
}

pub fn max_real_part(ev: &[Complex64]) -> f64 {
    ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Zero-order-hold pair for `x' = A x + G w`: returns `(e^{A dt}, int_0^dt e^{A s} ds G)`.
pub fn discretize(a: &DMatrix<f64>, g: &DMatrix<f64>, dt: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let p = g.ncols();
    let mut aug = DMatrix::zeros(n + p, n + p);
    aug.view_mut((0, 0), (n, n)).copy_from(&(a * dt));
    aug.view_mut((0, n), (n, p)).copy_from(&(g * dt));
    let e = aug.exp();
    (e.view((0, 0), (n, n)).into_owned(), e.view((0, n), (n, p)).into_owned())
}

/// Piecewise-constant external input, sampled at the start of each step.
#[derive(Debug, Clone)]
pub enum InputSchedule {
    Zero,
    Constant(f64),
    /// `(start_time, value)` breakpoints in increasing time; zero before the first.
    Steps(Vec<(f64, f64)>),
}

impl InputSchedule {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            InputSchedule::Zero => 0.0,
            InputSchedule::Constant(v) => *v,
            InputSchedule::Steps(s) => s
                .iter()
                .take_while(|(t0, _)| *t0 <= t + 1e-12)
                .last()
                .map(|(_, v)| *v)
                .unwrap_or(0.0),
        }
    }
}

/// LTI plant plus the bookkeeping needed to report frequencies.
#[derive(Debug, Clone)]
pub struct Plant {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    /// When set, the plant runs with `u = -k.x + schedule` and `a` already
    /// holds `A - b k^T`.
    pub feedback: Option<DVector<f64>>,
    pub disturbance: Option<DVector<f64>>,
    pub omega_rows: Vec<usize>,
    pub gen_ids: Vec<String>,
    pub state_names: Vec<String>,
    pub f_s_hz: f64,
}

impl Plant {
    pub fn open_loop(model: &StateSpaceModel) -> Self {
        Plant {
            a: model.a.clone(),
            b: model.b.clone(),
            feedback: None,
            disturbance: None,
            omega_rows: model.omega_indices(),
            gen_ids: model.gen_ids.clone(),
            state_names: model.state_names(),
            f_s_hz: model.f_s_hz,
        }
    }

    pub fn with_feedback(mut self, k: &DVector<f64>) -> Self {
        self.a -= &self.b * k.transpose();
        self.feedback = Some(k.clone());
        self
    }

    pub fn with_disturbance(mut self, d: DVector<f64>) -> Self {
        self.disturbance = Some(d);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationTrace {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Hz, one entry per generator per step.
    pub frequencies: Vec<Vec<f64>>,
    pub input: Vec<f64>,
    pub state_names: Vec<String>,
    pub gen_ids: Vec<String>,
}

fn frequencies(plant: &Plant, x: &DVector<f64>) -> Vec<f64> {
    plant.omega_rows.iter().map(|&r| plant.f_s_hz + x[r] / (2.0 * PI)).collect()
}

/// Exact stepping of the plant from `x0` over `[0, horizon]`.
pub fn simulate(
    plant: &Plant,
    x0: &DVector<f64>,
    u: &InputSchedule,
    horizon: f64,
    dt: f64,
) -> Result<SimulationTrace> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid(Stage::Simulate, "dt must be positive"));
    }
    if !(horizon >= dt) {
        return Err(Error::invalid(Stage::Simulate, "horizon must be at least dt"));
    }
    let n = plant.a.nrows();
    if x0.len() != n {
        return Err(Error::invalid(Stage::Simulate, "x0 has the wrong length"));
    }
    let mut g = DMatrix::zeros(n, 2);
    g.set_column(0, &plant.b);
    if let Some(d) = &plant.disturbance {
        g.set_column(1, d);
    }
    let (ad, gd) = discretize(&plant.a, &g, dt);
    let bd = gd.column(0).into_owned();
    let dd = gd.column(1).into_owned();

    let steps = (horizon / dt).round() as usize;
    let mut trace = SimulationTrace {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        frequencies: Vec::with_capacity(steps + 1),
        input: Vec::with_capacity(steps + 1),
        state_names: plant.state_names.clone(),
        gen_ids: plant.gen_ids.clone(),
    };
    let mut x = x0.clone();
    for k in 0..=steps {
        let t = k as f64 * dt;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(t));
        }
        let ext = u.at(t);
        let fb = plant.feedback.as_ref().map(|kv| -kv.dot(&x)).unwrap_or(0.0);
        trace.times.push(t);
        trace.frequencies.push(frequencies(plant, &x));
        trace.states.push(x.iter().copied().collect());
        trace.input.push(ext + fb);
        if k < steps {
            x = &ad * &x + &bd * ext + &dd;
        }
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TripEvent {
    pub node: String,
    pub start_time: f64,
    pub threshold_hz: f64,
    pub dwell_s: f64,
}

/// First excursion per generator that stays above `threshold_hz` for at
/// least `dwell_s`; crossing instants are interpolated linearly.
pub fn detect_overfrequency_trip(
    trace: &SimulationTrace,
    threshold_hz: f64,
    dwell_s: f64,
) -> Result<Vec<TripEvent>> {
    let t = &trace.times;
    if t.is_empty() {
        return Err(Error::invalid(Stage::Simulate, "empty trace"));
    }
    if t.len() >= 2 {
        let dt = t[1] - t[0];
        if dwell_s < dt - 1e-12 {
            return Err(Error::invalid(
                Stage::Simulate,
                format!("dwell {dwell_s} s is shorter than the sample step {dt} s"),
            ));
        }
    }
    let mut events = Vec::new();
    for (g, node) in trace.gen_ids.iter().enumerate() {
        let f = |k: usize| trace.frequencies[k][g];
        let mut start: Option<f64> = if f(0) > threshold_hz { Some(t[0]) } else { None };
        let mut found = None;
        for k in 1..t.len() {
            let (f0, f1) = (f(k - 1), f(k));
            let cross = || t[k - 1] + (threshold_hz - f0) / (f1 - f0) * (t[k] - t[k - 1]);
            match start {
                None if f1 > threshold_hz => start = Some(cross()),
                Some(s) if f1 <= threshold_hz => {
                    if cross() - s >= dwell_s - 1e-12 {
                        found = Some(s);
                        break;
                    }
                    start = None;
                }
                _ => {}
            }
        }
        if found.is_none() {
            if let Some(s) = start {
                if t[t.len() - 1] - s >= dwell_s - 1e-12 {
                    found = Some(s);
                }
            }
        }
        if let Some(s) = found {
            events.push(TripEvent { node: node.clone(), start_time: s, threshold_hz, dwell_s });
        }
    }
    Ok(events)
}

/// Loss of a generator's scheduled injection, in per-unit.
#[derive(Debug, Clone)]
pub struct TripScenario {
    pub generator: String,
    pub lost_pu: f64,
}

impl TripScenario {
    /// Trip of `generator` with the output recorded in the spec.
    pub fn from_spec(spec: &GridSpec, generator: &str) -> Result<Self> {
        let g = spec.generator(generator).ok_or_else(|| {
            Error::invalid(Stage::Simulate, format!("trip scenario names {generator}, which is not a generator node"))
        })?;
        Ok(TripScenario { generator: generator.to_string(), lost_pu: g.output_pu(spec.base_mva) })
    }

    /// Constant forcing `d` in `x' = A x + d` produced by the lost injection.
    pub fn disturbance(&self, model: &StateSpaceModel) -> Result<DVector<f64>> {
        let gi = model.gen_ids.iter().position(|g| *g == self.generator).ok_or_else(|| {
            Error::invalid(Stage::Simulate, format!("{} is not a generator node", self.generator))
        })?;
        // E holds -M on the omega block, so A's swing row already carries 1/M
        let wi = model.omega_index(gi);
        let mut d = DVector::zeros(model.n());
        d[wi] = self.lost_pu / model.e[(wi, wi)];
        Ok(d)
    }
}

#[derive(Debug, Clone)]
pub struct CaptureConfig {
    /// Frequency deviation (Hz) at which the state is captured.
    pub boundary_hz: f64,
    pub dt: f64,
    pub horizon: f64,
}

impl Default for CaptureConfig {
    fn default() -> Self {
        CaptureConfig { boundary_hz: TRIP_THRESHOLD_HZ - 60.0, dt: DEFAULT_DT, horizon: 30.0 }
    }
}

#[derive(Debug, Clone)]
pub struct OperatingState {
    pub x: DVector<f64>,
    pub capture_time: f64,
    /// Largest generator frequency at capture, Hz.
    pub max_freq_hz: f64,
    /// True when the raw excursion was an under-frequency one and the state
    /// was negated to present it as over-frequency.
    pub mirrored: bool,
}

/// State at the instant the largest generator frequency deviation first
/// reaches `cfg.boundary_hz` after the scenario's injection is lost.
pub fn operating_state(
    model: &StateSpaceModel,
    scenario: &TripScenario,
    cfg: &CaptureConfig,
) -> Result<OperatingState> {
    let d = scenario.disturbance(model)?;
    let n = model.n();
    if scenario.lost_pu == 0.0 {
        return Ok(OperatingState {
            x: DVector::zeros(n),
            capture_time: 0.0,
            max_freq_hz: model.f_s_hz,
            mirrored: false,
        });
    }
    let (ad, dd) = discretize(&model.a, &DMatrix::from_column_slice(n, 1, d.as_slice()), cfg.dt);
    let dd = dd.column(0).into_owned();
    let w_rows = model.omega_indices();
    let bound = cfg.boundary_hz * 2.0 * PI;

    let steps = (cfg.horizon / cfg.dt).round() as usize;
    let mut x = DVector::zeros(n);
    let mut peak: f64 = 0.0;
    for k in 1..=steps {
        let xn = &ad * &x + &dd;
        if xn.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(k as f64 * cfg.dt));
        }
        // earliest crossing among generators within this step
        let mut hit: Option<(f64, usize)> = None;
        for &r in &w_rows {
            let (w0, w1) = (x[r].abs(), xn[r].abs());
            if w1 >= bound {
                let lam = if w0 >= bound { 0.0 } else { (bound - w0) / (w1 - w0) };
                if hit.is_none_or(|(l, _)| lam < l) {
                    hit = Some((lam, r));
                }
            }
        }
        if let Some((lam, r)) = hit {
            let mut xc = &x + (&xn - &x) * lam;
            let mirrored = xc[r] < 0.0;
            if mirrored {
                xc = -xc;
            }
            let max_w = w_rows.iter().map(|&i| xc[i]).fold(f64::NEG_INFINITY, f64::max);
            return Ok(OperatingState {
                x: xc,
                capture_time: (k as f64 - 1.0 + lam) * cfg.dt,
                max_freq_hz: model.f_s_hz + max_w / (2.0 * PI),
                mirrored,
            });
        }
        peak = w_rows.iter().map(|&r| xn[r].abs()).fold(peak, f64::max);
        x = xn;
    }
    Err(Error::BoundaryNotReached {
        boundary_hz: cfg.boundary_hz,
        horizon: cfg.horizon,
        peak_hz: peak / (2.0 * PI),
    })
}
