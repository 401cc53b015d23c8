//! Region-of-vulnerability sweeps, relocation error, participation factors
//! and parameter-error sensitivity.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::attack_synthesis::{PlacementContext, UncertaintySpec};
use crate::dynamics::{operating_state, spectrum, CaptureConfig, TripScenario};
use crate::error::{Error, Result, Stage};
use crate::grid_model::{assemble_descriptor, GridSpec};

/// Cells whose achieved pair lies farther than this from the targets are
/// reported as not available.
pub const NA_EPSILON: f64 = 0.1;

fn sweep_err(msg: impl Into<String>) -> Error {
    Error::invalid(Stage::Sweep, msg)
}

/// Conjugate pair `-xi*wn ± j wn sqrt(1 - xi^2)`, positive imaginary part first.
pub fn targets_from(xi: f64, omega_n: f64) -> Result<[Complex64; 2]> {
    if !(xi.abs() < 1.0) {
        return Err(sweep_err(format!("damping ratio must satisfy |xi| < 1, got {xi}")));
    }
    if !(omega_n > 0.0 && omega_n.is_finite()) {
        return Err(sweep_err(format!("natural frequency must be positive, got {omega_n}")));
    }
    let a = -xi * omega_n;
    let b = omega_n * (1.0 - xi * xi).sqrt();
    Ok([Complex64::new(a, b), Complex64::new(a, -b)])
}

/// `(xi, omega_n)` of an eigenvalue; the inverse of `targets_from`.
pub fn damping_of(z: Complex64) -> (f64, f64) {
    let wn = z.norm();
    if wn == 0.0 {
        return (0.0, 0.0);
    }
    (-z.re / wn, wn)
}

/// Entries of `achieved` matched one-to-one to `targets` so that the summed
/// squared distance is smallest. Exact over all assignments.
pub fn nearest_assignment(achieved: &[Complex64], targets: &[Complex64]) -> Vec<usize> {
    let n = achieved.len();
    let m = targets.len();
    if m == 0 || n < m {
        return Vec::new();
    }
    if n > 20 {
        // greedy fallback keeps memory bounded on very large spectra
        let mut used = vec![false; n];
        return targets
            .iter()
            .map(|t| {
                let j = (0..n)
                    .filter(|&j| !used[j])
                    .min_by(|&a, &b| (achieved[a] - t).norm_sqr().total_cmp(&(achieved[b] - t).norm_sqr()))
                    .unwrap();
                used[j] = true;
                j
            })
            .collect();
    }
    // dp over subsets of achieved entries, targets taken in order
    let full = 1usize << n;
    let mut cost = vec![f64::INFINITY; full];
    let mut from = vec![usize::MAX; full];
    cost[0] = 0.0;
    for mask in 0..full {
        let t = mask.count_ones() as usize;
        if t >= m || !cost[mask].is_finite() {
            continue;
        }
        for (j, a) in achieved.iter().enumerate() {
            if mask & (1 << j) != 0 {
                continue;
            }
            let next = mask | (1 << j);
            let c = cost[mask] + (a - targets[t]).norm_sqr();
            if c < cost[next] {
                cost[next] = c;
                from[next] = j;
            }
        }
    }
    let best = (0..full)
        .filter(|&mk| mk.count_ones() as usize == m)
        .min_by(|&a, &b| cost[a].total_cmp(&cost[b]))
        .unwrap();
    let mut picks = vec![0; m];
    let mut mask = best;
    for t in (0..m).rev() {
        let j = from[mask];
        picks[t] = j;
        mask &= !(1 << j);
    }
    picks
}

/// Euclidean distance between the targets and the achieved eigenvalues
/// nearest to them under the optimal pairing.
pub fn relocation_error(achieved: &[Complex64], targets: &[Complex64]) -> f64 {
    let picks = nearest_assignment(achieved, targets);
    if picks.len() != targets.len() {
        return f64::INFINITY;
    }
    picks
        .iter()
        .zip(targets)
        .map(|(&j, t)| (achieved[j] - t).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Lattice of `(xi, omega_n)` targets.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSpec {
    pub xi_min: f64,
    pub xi_max: f64,
    pub xi_step: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub omega_step: f64,
}

impl Default for RegionSpec {
    fn default() -> Self {
        RegionSpec { xi_min: -0.09, xi_max: 0.03, xi_step: 0.003, omega_min: 2.5, omega_max: 12.6, omega_step: 0.1 }
    }
}

fn axis(lo: f64, hi: f64, step: f64, name: &str) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) {
        return Err(sweep_err(format!("{name} bounds must be finite")));
    }
    if hi < lo {
        return Err(sweep_err(format!("{name} range is empty ({lo} > {hi})")));
    }
    if hi == lo {
        return Ok(vec![lo]);
    }
    if !(step > 0.0) {
        return Err(sweep_err(format!("{name} step must be positive")));
    }
    let count = ((hi - lo) / step + 1.0 - 1e-9).ceil() as usize;
    // rounding to 1e-9 keeps labels like 12.6 free of representation noise
    Ok((0..count).map(|i| ((lo + i as f64 * step).min(hi) * 1e9).round() / 1e9).collect())
}

impl RegionSpec {
    /// Single-cell region.
    pub fn cell(xi: f64, omega_n: f64) -> Self {
        RegionSpec { xi_min: xi, xi_max: xi, xi_step: 0.0, omega_min: omega_n, omega_max: omega_n, omega_step: 0.0 }
    }

    pub fn xis(&self) -> Result<Vec<f64>> {
        axis(self.xi_min, self.xi_max, self.xi_step, "xi")
    }

    pub fn omegas(&self) -> Result<Vec<f64>> {
        axis(self.omega_min, self.omega_max, self.omega_step, "omega_n")
    }

    pub fn validate(&self) -> Result<()> {
        let xs = self.xis()?;
        self.omegas()?;
        if xs.iter().any(|x| x.abs() >= 1.0) {
            return Err(sweep_err("damping ratios must satisfy |xi| < 1"));
        }
        if !(self.omega_min > 0.0) {
            return Err(sweep_err("omega_min must be positive"));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> Result<usize> {
        Ok(self.xis()?.len() * self.omegas()?.len())
    }
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub xi: f64,
    pub omega_n: f64,
    pub targets: [Complex64; 2],
    /// `None` when synthesis failed for this cell.
    pub delta_p_pu: Option<f64>,
    pub epsilon: Option<f64>,
    pub achieved: Vec<Complex64>,
    /// Within the cap and placed to within `NA_EPSILON`.
    pub feasible: bool,
    pub note: Option<String>,
}

impl SweepCell {
    /// Placement accurate enough for the demand figure to be reported.
    pub fn available(&self) -> bool {
        matches!(self.epsilon, Some(e) if e <= NA_EPSILON) && self.delta_p_pu.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub region: RegionSpec,
    pub xis: Vec<f64>,
    pub omegas: Vec<f64>,
    /// Row-major: omega outer, xi inner.
    pub cells: Vec<SweepCell>,
    pub attack_node: String,
    pub base_mva: f64,
    pub cap_pu: f64,
    pub alpha_pu: f64,
    /// Digest of `A`, `B` and `x`; ties the result to its inputs.
    pub model_hash: String,
}

impl SweepResult {
    pub fn cell(&self, xi_idx: usize, omega_idx: usize) -> &SweepCell {
        &self.cells[omega_idx * self.xis.len() + xi_idx]
    }
}

/// SHA-256 over the little-endian bytes of every argument in order.
pub fn digest_arrays(parts: &[&[f64]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        for v in *p {
            h.update(v.to_le_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Sweeps the lattice; per-cell failures are recorded, never dropped.
/// Cells run in parallel and are merged in lattice order.
pub fn sweep(
    ctx: &PlacementContext,
    x: &DVector<f64>,
    cap_pu: f64,
    uncertainty: Option<&UncertaintySpec>,
    region: &RegionSpec,
    attack_node: &str,
    base_mva: f64,
) -> Result<SweepResult> {
    region.validate()?;
    let xis = region.xis()?;
    let omegas = region.omegas()?;
    let alpha = match uncertainty {
        Some(u) => crate::attack_synthesis::chance_margin(u)?,
        None => 0.0,
    };
    let lattice: Vec<(f64, f64)> = omegas.iter().flat_map(|&w| xis.iter().map(move |&xi| (xi, w))).collect();
    let cells: Vec<SweepCell> = lattice
        .par_iter()
        .map(|&(xi, w)| {
            let targets = targets_from(xi, w).expect("region validated");
            match ctx.plan(&targets, x, cap_pu, uncertainty) {
                Ok(p) => SweepCell {
                    xi,
                    omega_n: w,
                    targets,
                    delta_p_pu: Some(p.delta_p_pu),
                    epsilon: Some(p.epsilon),
                    feasible: p.feasible && p.epsilon <= NA_EPSILON,
                    achieved: p.achieved,
                    note: None,
                },
                Err(e) => SweepCell {
                    xi,
                    omega_n: w,
                    targets,
                    delta_p_pu: None,
                    epsilon: None,
                    achieved: Vec::new(),
                    feasible: false,
                    note: Some(e.to_string()),
                },
            }
        })
        .collect();
    let model_hash = digest_arrays(&[ctx.a.as_slice(), ctx.b.as_slice(), x.as_slice()]);
    Ok(SweepResult {
        region: region.clone(),
        xis,
        omegas,
        cells,
        attack_node: attack_node.to_string(),
        base_mva,
        cap_pu,
        alpha_pu: alpha,
        model_hash,
    })
}

/// `P[k][i] = |v_ki w_ik|` normalized so every mode column sums to one,
/// with `v` the right and `w` the left eigenvectors (`W = V^-1`).
pub fn participation_factors(a: &DMatrix<f64>) -> Result<(Vec<Complex64>, DMatrix<f64>)> {
    let n = a.nrows();
    let ev = spectrum(a)?;
    let scale = a.norm().max(1.0);
    let ac = a.map(|v| Complex64::new(v, 0.0));
    let mut v = DMatrix::<Complex64>::zeros(n, n);
    let mut i = 0;
    while i < n {
        // cluster of numerically repeated eigenvalues
        let mut j = i + 1;
        while j < n && (ev[j] - ev[i]).norm() <= 1e-8 * scale {
            j += 1;
        }
        let lam = ev[i..j].iter().sum::<Complex64>() / (j - i) as f64;
        let shifted = &ac - DMatrix::<Complex64>::identity(n, n) * lam;
        let svd = shifted.svd(false, true);
        let vt = svd.v_t.unwrap();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&p, &q| svd.singular_values[p].total_cmp(&svd.singular_values[q]));
        if svd.singular_values[order[j - i - 1]] > 1e-6 * scale {
            return Err(Error::invalid(
                Stage::Spectrum,
                format!("matrix is defective near eigenvalue {lam}; participation factors undefined"),
            ));
        }
        for (c, &o) in order.iter().take(j - i).enumerate() {
            v.set_column(i + c, &vt.row(o).adjoint());
        }
        i = j;
    }
    let w = v.clone().try_inverse().ok_or_else(|| {
        Error::invalid(Stage::Spectrum, "eigenvector matrix is singular; matrix is defective")
    })?;
    let sv = v.singular_values();
    let cond = sv.max() / sv.min();
    if !(cond < 1e12) {
        return Err(Error::invalid(
            Stage::Spectrum,
            format!("eigenvector matrix condition {cond:.3e}; matrix is numerically defective"),
        ));
    }
    let mut p = DMatrix::from_fn(n, n, |k, i| (v[(k, i)] * w[(i, k)]).norm());
    for i in 0..n {
        let s: f64 = p.column(i).sum();
        if s > 0.0 {
            p.column_mut(i).scale_mut(1.0 / s);
        }
    }
    Ok((ev, p))
}

#[derive(Debug, Clone)]
pub struct SensitivityRow {
    pub error_pct: f64,
    pub delta_p_pu: Option<f64>,
    pub epsilon: Option<f64>,
    /// `(xi, omega_n)` of the achieved eigenvalue matched to the upper target.
    pub achieved_xi: Option<f64>,
    pub achieved_omega_n: Option<f64>,
    pub feasible: bool,
    pub note: Option<String>,
}

/// Inputs shared by every sensitivity row.
#[derive(Debug, Clone)]
pub struct SensitivityCase<'a> {
    pub spec: &'a GridSpec,
    pub attack_node: &'a str,
    pub scenario_generator: &'a str,
    pub capture: CaptureConfig,
    pub xi: f64,
    pub omega_n: f64,
    pub cap_pu: f64,
    pub uncertainty: Option<UncertaintySpec>,
}

fn sensitivity_row(case: &SensitivityCase<'_>, pct: f64) -> Result<SensitivityRow> {
    let spec = case.spec.perturbed(pct / 100.0)?;
    let model = assemble_descriptor(&spec, case.attack_node)?;
    // the captured state follows the perturbed dynamics; the lost output does not
    let scenario = TripScenario::from_spec(&spec, case.scenario_generator)?;
    let op = operating_state(&model, &scenario, &case.capture)?;
    let ctx = PlacementContext::new(&model.a, &model.b)?;
    let targets = targets_from(case.xi, case.omega_n)?;
    let plan = ctx.plan(&targets, &op.x, case.cap_pu, case.uncertainty.as_ref())?;
    let picks = nearest_assignment(&plan.achieved, &targets);
    let (axi, aw) = damping_of(plan.achieved[picks[0]]);
    Ok(SensitivityRow {
        error_pct: pct,
        delta_p_pu: Some(plan.delta_p_pu),
        epsilon: Some(plan.epsilon),
        achieved_xi: Some(axi),
        achieved_omega_n: Some(aw),
        feasible: plan.feasible && plan.epsilon <= NA_EPSILON,
        note: None,
    })
}

/// Re-runs capture and synthesis with every grid parameter scaled by
/// `1 + pct/100`. Rows that cannot be built are reported infeasible.
pub fn sensitivity(case: &SensitivityCase<'_>, error_pcts: &[f64]) -> Result<Vec<SensitivityRow>> {
    if let Some(p) = error_pcts.iter().find(|p| !p.is_finite() || **p <= -100.0) {
        return Err(sweep_err(format!("error percentage {p} must be finite and above -100")));
    }
    targets_from(case.xi, case.omega_n)?;
    Ok(error_pcts
        .par_iter()
        .map(|&pct| {
            sensitivity_row(case, pct).unwrap_or_else(|e| SensitivityRow {
                error_pct: pct,
                delta_p_pu: None,
                epsilon: None,
                achieved_xi: None,
                achieved_omega_n: None,
                feasible: false,
                note: Some(e.to_string()),
            })
        })
        .collect())
}

/// Row set of the published parameter-error table.
pub const DEFAULT_ERROR_PCTS: [f64; 11] = [-50.0, -10.0, -7.5, -5.0, -2.5, 2.5, 5.0, 7.5, 10.0, 50.0, 100.0];
