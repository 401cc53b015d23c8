//! Grid data files and the descriptor / regularized state-space model.
//!
//! State layout is `x = [delta(G), omega(G), theta(L)]` with generators and
//! loads taken in the order they appear in the grid file.

use std::collections::{HashMap, HashSet, VecDeque};
use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Stage};

/// Load damping used when a load record leaves `d_l_pu` out: 1.5 % of the
/// nodal load per rad/s.
pub const DEFAULT_LOAD_DAMPING_FRACTION: f64 = 0.015;

pub const DAYS: usize = 7;
pub const HOURS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Generator,
    Load,
    Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: String,
    pub kind: NodeKind,
    pub base_kv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub node: String,
    /// Nameplate rating.
    pub rating_mw: f64,
    /// Scheduled injection; this is what a trip of the unit removes.
    pub output_mw: f64,
    /// Inertia, per-unit power * s^2 / rad.
    pub m_pu: f64,
    /// Damping, per-unit power / (rad/s).
    pub d_g_pu: f64,
    pub k_p_pu: f64,
    pub k_i_pu: f64,
}

/// Hourly EVCS statistics, indexed `[day][hour]` (day 0 is Monday).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvcsProfile {
    pub mean_kw: Vec<Vec<f64>>,
    pub stdev_kw: Vec<Vec<f64>>,
    /// Largest demand an attacker can hope to command at this node.
    pub max_kw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadParams {
    pub node: String,
    pub p_bar_mw: f64,
    /// Load damping, per-unit / (rad/s). Defaults to 1.5 % of `p_bar`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_l_pu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evcs: Option<EvcsProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from: String,
    pub to: String,
    pub susceptance_pu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub base_mva: f64,
    pub f_s_hz: f64,
    pub nodes: Vec<NodeRecord>,
    pub branches: Vec<Branch>,
    pub generators: Vec<GeneratorParams>,
    pub loads: Vec<LoadParams>,
}

impl EvcsProfile {
    fn at(table: &[Vec<f64>], hour_of_week: usize) -> Option<f64> {
        table.get(hour_of_week / HOURS)?.get(hour_of_week % HOURS).copied()
    }

    pub fn mean_kw_at(&self, hour_of_week: usize) -> Option<f64> {
        Self::at(&self.mean_kw, hour_of_week)
    }

    pub fn stdev_kw_at(&self, hour_of_week: usize) -> Option<f64> {
        Self::at(&self.stdev_kw, hour_of_week)
    }

    /// Hour of week with the largest mean demand (first one on ties).
    pub fn peak_hour(&self) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for h in 0..DAYS * HOURS {
            let v = self.mean_kw_at(h).unwrap_or(f64::NEG_INFINITY);
            if v > best.1 {
                best = (h, v);
            }
        }
        best.0
    }

    fn scaled(&self, factor: f64) -> Self {
        let s = |t: &Vec<Vec<f64>>| t.iter().map(|r| r.iter().map(|v| v * factor).collect()).collect();
        EvcsProfile {
            mean_kw: s(&self.mean_kw),
            stdev_kw: s(&self.stdev_kw),
            max_kw: self.max_kw * factor,
        }
    }
}

impl LoadParams {
    pub fn d_l(&self, base_mva: f64) -> f64 {
        self.d_l_pu
            .unwrap_or(DEFAULT_LOAD_DAMPING_FRACTION * self.p_bar_mw / base_mva)
    }
}

impl GeneratorParams {
    pub fn rating_pu(&self, base_mva: f64) -> f64 {
        self.rating_mw / base_mva
    }

    pub fn output_pu(&self, base_mva: f64) -> f64 {
        self.output_mw / base_mva
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::invalid(Stage::Validate, msg)
}

impl GridSpec {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: GridSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn reference(&self) -> &NodeRecord {
        self.nodes
            .iter()
            .find(|n| n.kind == NodeKind::Reference)
            .expect("validated spec has a reference node")
    }

    pub fn generator(&self, node: &str) -> Option<&GeneratorParams> {
        self.generators.iter().find(|g| g.node == node)
    }

    pub fn load(&self, node: &str) -> Option<&LoadParams> {
        self.loads.iter().find(|l| l.node == node)
    }

    /// Checks every structural invariant. Field names appear in messages.
    pub fn validate(&self) -> Result<()> {
        if !(self.base_mva.is_finite() && self.base_mva > 0.0) {
            return Err(invalid("base_mva must be positive"));
        }
        if !(self.f_s_hz.is_finite() && self.f_s_hz > 0.0) {
            return Err(invalid("f_s_hz must be positive"));
        }

        let mut kinds: HashMap<&str, NodeKind> = HashMap::new();
        for n in &self.nodes {
            if kinds.insert(n.id.as_str(), n.kind).is_some() {
                return Err(invalid(format!("nodes: duplicate node id {}", n.id)));
            }
        }
        let refs = self.nodes.iter().filter(|n| n.kind == NodeKind::Reference).count();
        if refs != 1 {
            return Err(invalid(format!("nodes: expected exactly one reference node, found {refs}")));
        }

        let mut seen = HashSet::new();
        for g in &self.generators {
            match kinds.get(g.node.as_str()) {
                Some(NodeKind::Generator) | Some(NodeKind::Reference) => {}
                Some(NodeKind::Load) => {
                    return Err(invalid(format!("generators: node {} is a load node", g.node)))
                }
                None => return Err(invalid(format!("generators: unknown node {}", g.node))),
            }
            if !seen.insert(g.node.as_str()) {
                return Err(invalid(format!("generators: node {} listed twice", g.node)));
            }
            let finite = [g.rating_mw, g.output_mw, g.m_pu, g.d_g_pu, g.k_p_pu, g.k_i_pu]
                .iter()
                .all(|v| v.is_finite());
            if !finite {
                return Err(invalid(format!("generators: non-finite value at {}", g.node)));
            }
            if g.m_pu <= 0.0 {
                return Err(invalid(format!("generators: m_pu must be > 0 at {}", g.node)));
            }
            if g.d_g_pu < 0.0 || g.k_p_pu < 0.0 || g.k_i_pu < 0.0 {
                return Err(invalid(format!(
                    "generators: d_g_pu, k_p_pu, k_i_pu must be >= 0 at {}",
                    g.node
                )));
            }
        }
        for l in &self.loads {
            match kinds.get(l.node.as_str()) {
                Some(NodeKind::Load) => {}
                Some(_) => return Err(invalid(format!("loads: node {} is not a load node", l.node))),
                None => return Err(invalid(format!("loads: unknown node {}", l.node))),
            }
            if !seen.insert(l.node.as_str()) {
                return Err(invalid(format!("loads: node {} listed twice", l.node)));
            }
            if !l.p_bar_mw.is_finite() || !l.d_l_pu.unwrap_or(0.0).is_finite() {
                return Err(invalid(format!("loads: non-finite value at {}", l.node)));
            }
            if let Some(e) = &l.evcs {
                let shape_ok = |t: &Vec<Vec<f64>>| t.len() == DAYS && t.iter().all(|r| r.len() == HOURS);
                if !shape_ok(&e.mean_kw) || !shape_ok(&e.stdev_kw) {
                    return Err(invalid(format!("loads: evcs tables at {} must be 7 x 24", l.node)));
                }
                if e.stdev_kw.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(invalid(format!("loads: evcs stdev_kw must be >= 0 at {}", l.node)));
                }
                if !(e.max_kw.is_finite() && e.max_kw >= 0.0) {
                    return Err(invalid(format!("loads: evcs max_kw must be >= 0 at {}", l.node)));
                }
            }
        }
        if seen.len() != self.nodes.len() {
            let missing: Vec<_> = self
                .nodes
                .iter()
                .filter(|n| !seen.contains(n.id.as_str()))
                .map(|n| n.id.as_str())
                .collect();
            return Err(invalid(format!("nodes without generator/load record: {}", missing.join(", "))));
        }

        let mut adj: HashMap<&str, Vec<&str>> = HashMap::new();
        for b in &self.branches {
            for end in [&b.from, &b.to] {
                if !kinds.contains_key(end.as_str()) {
                    return Err(invalid(format!("branches: unknown node {end}")));
                }
            }
            if b.from == b.to {
                return Err(invalid(format!("branches: self loop at {}", b.from)));
            }
            if !b.susceptance_pu.is_finite() || b.susceptance_pu == 0.0 {
                return Err(invalid(format!(
                    "branches: susceptance_pu must be finite and nonzero on {}-{}",
                    b.from, b.to
                )));
            }
            adj.entry(&b.from).or_default().push(&b.to);
            adj.entry(&b.to).or_default().push(&b.from);
        }
        let start = self.reference().id.as_str();
        let mut reached = HashSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in adj.get(v).map(|x| x.as_slice()).unwrap_or(&[]) {
                if reached.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        if reached.len() != self.nodes.len() {
            return Err(invalid("branches: network is not connected"));
        }
        Ok(())
    }

    /// Copy with the EVCS statistics at `node` multiplied by `factor`.
    pub fn scale_evcs_demand(&self, node: &str, factor: f64) -> Result<GridSpec> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(invalid("scale factor must be positive"));
        }
        let mut out = self.clone();
        let load = out
            .loads
            .iter_mut()
            .find(|l| l.node == node)
            .ok_or_else(|| invalid(format!("unknown load node {node}")))?;
        if let Some(e) = &load.evcs {
            load.evcs = Some(e.scaled(factor));
        }
        Ok(out)
    }

    /// Copy with M, D_G, D_L and every susceptance multiplied by `1 + err`.
    /// AGC gains are controller settings rather than estimated quantities and stay put.
    pub fn perturbed(&self, err: f64) -> Result<GridSpec> {
        let s = 1.0 + err;
        if !(s.is_finite() && s > 0.0) {
            return Err(invalid(format!("parameter error {err} leaves no positive scale")));
        }
        let mut out = self.clone();
        for g in &mut out.generators {
            g.m_pu *= s;
            g.d_g_pu *= s;
        }
        let base = out.base_mva;
        for l in &mut out.loads {
            l.d_l_pu = Some(l.d_l(base) * s);
        }
        for b in &mut out.branches {
            b.susceptance_pu *= s;
        }
        Ok(out)
    }

    /// Node ids in model order: generators, then loads.
    pub fn ordered_ids(&self) -> Vec<String> {
        self.generators
            .iter()
            .map(|g| g.node.clone())
            .chain(self.loads.iter().map(|l| l.node.clone()))
            .collect()
    }
}

/// The bundled eight-node Manhattan reduction, as shipped in `data/manhattan.json`.
pub const BUNDLED_GRID_JSON: &str = include_str!("../data/manhattan.json");

pub fn bundled_grid() -> GridSpec {
    GridSpec::from_json_str(BUNDLED_GRID_JSON).expect("bundled dataset is valid")
}

pub fn load_grid_spec(path: &Path) -> Result<GridSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::invalid(Stage::Parse, format!("{}: {e}", path.display())))?;
    GridSpec::from_json_str(&text)
}

/// Branch table with header `from,to,susceptance_pu`.
pub fn read_branches_csv<R: Read>(r: R) -> Result<Vec<Branch>> {
    #[derive(Deserialize)]
    struct Row {
        from: String,
        to: String,
        susceptance_pu: f64,
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let row: Row = row?;
        out.push(Branch { from: row.from, to: row.to, susceptance_pu: row.susceptance_pu, note: None });
    }
    Ok(out)
}

/// Load table with header `node,p_bar_mw,d_l_pu`; `d_l_pu` may be empty.
/// EVCS profiles are not part of the table.
pub fn read_loads_csv<R: Read>(r: R) -> Result<Vec<LoadParams>> {
    #[derive(Deserialize)]
    struct Row {
        node: String,
        p_bar_mw: f64,
        d_l_pu: Option<f64>,
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let row: Row = row?;
        out.push(LoadParams { node: row.node, p_bar_mw: row.p_bar_mw, d_l_pu: row.d_l_pu, evcs: None });
    }
    Ok(out)
}

impl GridSpec {
    /// Replace the branch list; the result is re-validated.
    pub fn with_branches(&self, branches: Vec<Branch>) -> Result<GridSpec> {
        let mut out = self.clone();
        out.branches = branches;
        out.validate()?;
        Ok(out)
    }

    /// Replace static load data. EVCS profiles already present for a node
    /// are kept.
    pub fn with_loads(&self, loads: Vec<LoadParams>) -> Result<GridSpec> {
        let mut out = self.clone();
        out.loads = loads
            .into_iter()
            .map(|mut l| {
                if l.evcs.is_none() {
                    l.evcs = self.load(&l.node).and_then(|old| old.evcs.clone());
                }
                l
            })
            .collect();
        out.validate()?;
        Ok(out)
    }
}

/// Node-indexed susceptance (Laplacian) matrix in `ordered_ids` order.
pub fn build_admittance(spec: &GridSpec) -> DMatrix<f64> {
    let ids = spec.ordered_ids();
    let idx: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let n = ids.len();
    let mut y = DMatrix::zeros(n, n);
    for b in &spec.branches {
        let (i, k) = (idx[b.from.as_str()], idx[b.to.as_str()]);
        y[(i, k)] -= b.susceptance_pu;
        y[(k, i)] -= b.susceptance_pu;
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&k| k != i).map(|k| y[(i, k)]).sum();
        y[(i, i)] = -off;
    }
    y
}

#[derive(Debug, Clone)]
pub struct StateSpaceModel {
    pub e: DMatrix<f64>,
    pub a_hat: DMatrix<f64>,
    pub b_hat: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub gen_ids: Vec<String>,
    pub load_ids: Vec<String>,
    pub attack_node: String,
    pub f_s_hz: f64,
    pub base_mva: f64,
}

impl StateSpaceModel {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_gen(&self) -> usize {
        self.gen_ids.len()
    }

    pub fn delta_index(&self, g: usize) -> usize {
        g
    }

    pub fn omega_index(&self, g: usize) -> usize {
        self.gen_ids.len() + g
    }

    pub fn theta_index(&self, l: usize) -> usize {
        2 * self.gen_ids.len() + l
    }

    pub fn omega_indices(&self) -> Vec<usize> {
        (0..self.n_gen()).map(|g| self.omega_index(g)).collect()
    }

    pub fn state_names(&self) -> Vec<String> {
        let d = self.gen_ids.iter().map(|g| format!("delta_{g}"));
        let w = self.gen_ids.iter().map(|g| format!("omega_{g}"));
        let t = self.load_ids.iter().map(|l| format!("theta_{l}"));
        d.chain(w).chain(t).collect()
    }

    /// Row of the attacked load's algebraic (theta) equation.
    pub fn input_row(&self) -> usize {
        let j = self.load_ids.iter().position(|l| *l == self.attack_node).unwrap();
        self.theta_index(j)
    }
}

/// Assemble `E x' = A_hat x + B_hat u` and its regularization `A = E^-1 A_hat`,
/// `B = E^-1 B_hat`, with `u` the extra consumption at `attack_node`.
pub fn assemble_descriptor(spec: &GridSpec, attack_node: &str) -> Result<StateSpaceModel> {
    let lpos = spec
        .loads
        .iter()
        .position(|l| l.node == attack_node)
        .ok_or_else(|| Error::invalid(Stage::Model, format!("attack node {attack_node} is not a load node")))?;
    let g = spec.generators.len();
    let l = spec.loads.len();
    let n = 2 * g + l;
    let y = build_admittance(spec);

    let d_l: Vec<f64> = spec.loads.iter().map(|ld| ld.d_l(spec.base_mva)).collect();
    for (ld, &d) in spec.loads.iter().zip(&d_l) {
        if !(d > 0.0) {
            return Err(Error::SingularE(ld.node.clone()));
        }
    }

    let mut e = DMatrix::zeros(n, n);
    let mut a_hat = DMatrix::zeros(n, n);
    for (i, gen) in spec.generators.iter().enumerate() {
        e[(i, i)] = 1.0;
        e[(g + i, g + i)] = -gen.m_pu;
        a_hat[(i, g + i)] = 1.0;
        for k in 0..g {
            a_hat[(g + i, k)] = y[(i, k)];
        }
        a_hat[(g + i, i)] += gen.k_i_pu;
        a_hat[(g + i, g + i)] = gen.k_p_pu + gen.d_g_pu;
        for k in 0..l {
            a_hat[(g + i, 2 * g + k)] = y[(i, g + k)];
        }
    }
    for j in 0..l {
        e[(2 * g + j, 2 * g + j)] = d_l[j];
        for k in 0..g {
            a_hat[(2 * g + j, k)] = -y[(g + j, k)];
        }
        for k in 0..l {
            a_hat[(2 * g + j, 2 * g + k)] = -y[(g + j, g + k)];
        }
    }
    let mut b_hat = DVector::zeros(n);
    b_hat[2 * g + lpos] = -1.0;

    // E is diagonal, so the regularization is an exact row scaling.
    let mut a = a_hat.clone();
    let mut b = b_hat.clone();
    for r in 0..n {
        let inv = 1.0 / e[(r, r)];
        a.row_mut(r).scale_mut(inv);
        b[r] *= inv;
    }

    Ok(StateSpaceModel {
        e,
        a_hat,
        b_hat,
        a,
        b,
        gen_ids: spec.generators.iter().map(|g| g.node.clone()).collect(),
        load_ids: spec.loads.iter().map(|l| l.node.clone()).collect(),
        attack_node: attack_node.to_string(),
        f_s_hz: spec.f_s_hz,
        base_mva: spec.base_mva,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> GridSpec {
        GridSpec {
            name: None,
            base_mva: 100.0,
            f_s_hz: 60.0,
            nodes: vec![
                NodeRecord { id: "G".into(), kind: NodeKind::Reference, base_kv: 138.0 },
                NodeRecord { id: "L".into(), kind: NodeKind::Load, base_kv: 138.0 },
            ],
            branches: vec![Branch { from: "G".into(), to: "L".into(), susceptance_pu: 4.0, note: None }],
            generators: vec![GeneratorParams {
                node: "G".into(),
                rating_mw: 716.0,
                output_mw: 100.0,
                m_pu: 2.0,
                d_g_pu: 0.5,
                k_p_pu: 1.0,
                k_i_pu: 3.0,
            }],
            loads: vec![LoadParams { node: "L".into(), p_bar_mw: 200.0, d_l_pu: Some(0.5), evcs: None }],
        }
    }

    #[test]
    fn single_branch_admittance() {
        let y = build_admittance(&toy());
        assert_eq!(y, DMatrix::from_row_slice(2, 2, &[4.0, -4.0, -4.0, 4.0]));
    }

    #[test]
    fn parallel_branches_add() {
        let mut s = toy();
        s.branches.push(Branch { from: "L".into(), to: "G".into(), susceptance_pu: 1.5, note: None });
        let y = build_admittance(&s);
        assert_eq!(y[(0, 1)], -5.5);
        assert_eq!(y[(0, 0)] + y[(0, 1)], 0.0);
    }

    #[test]
    fn rating_in_per_unit() {
        assert!((toy().generators[0].rating_pu(100.0) - 7.16).abs() < 1e-12);
    }

    #[test]
    fn toy_matrix_entries() {
        // M w' = -(K_I + Y) d - (K_P + D_G) w - Y_GL t ; D_L t' = -Y_LG d - Y_LL t - u
        let m = assemble_descriptor(&toy(), "L").unwrap();
        let want = DMatrix::from_row_slice(
            3,
            3,
            &[0.0, 1.0, 0.0, -(3.0 + 4.0) / 2.0, -1.5 / 2.0, 4.0 / 2.0, 4.0 / 0.5, 0.0, -4.0 / 0.5],
        );
        assert!((m.a.clone() - want).abs().max() < 1e-15, "{}", m.a);
        assert_eq!(m.b.as_slice(), &[0.0, 0.0, -2.0]);
        assert_eq!(m.input_row(), 2);
    }

    #[test]
    fn zero_load_damping_is_singular() {
        let mut s = toy();
        s.loads[0].d_l_pu = Some(0.0);
        assert!(matches!(assemble_descriptor(&s, "L"), Err(Error::SingularE(_))));
    }

    #[test]
    fn attack_on_generator_rejected() {
        assert!(assemble_descriptor(&toy(), "G").is_err());
    }

    #[test]
    fn duplicate_node_rejected() {
        let mut s = toy();
        s.nodes.push(NodeRecord { id: "L".into(), kind: NodeKind::Load, base_kv: 138.0 });
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("duplicate"), "{err}");
    }

    #[test]
    fn disconnected_rejected() {
        let mut s = toy();
        s.branches.clear();
        assert!(s.validate().is_err());
    }

    #[test]
    fn default_load_damping() {
        let mut s = toy();
        s.loads[0].d_l_pu = None;
        assert!((s.loads[0].d_l(100.0) - 0.03).abs() < 1e-15);
    }

    #[test]
    fn perturbation_leaves_agc_alone() {
        let p = toy().perturbed(0.1).unwrap();
        assert!((p.generators[0].m_pu - 2.2).abs() < 1e-12);
        assert_eq!(p.generators[0].k_i_pu, 3.0);
        assert!((p.branches[0].susceptance_pu - 4.4).abs() < 1e-12);
        assert!(toy().perturbed(-1.0).is_err());
    }

    #[test]
    fn csv_tables() {
        let b = read_branches_csv("from,to,susceptance_pu\nA, B ,2.5\n".as_bytes()).unwrap();
        assert_eq!(b[0].to, "B");
        assert_eq!(b[0].susceptance_pu, 2.5);
        let l = read_loads_csv("node,p_bar_mw,d_l_pu\nX,120,\nY,80,0.2\n".as_bytes()).unwrap();
        assert_eq!(l[0].d_l_pu, None);
        assert_eq!(l[1].d_l_pu, Some(0.2));
    }

    #[test]
    fn json_round_trip_is_bitwise() {
        let mut s = toy();
        s.branches[0].susceptance_pu = 0.1 + 0.2;
        let again = GridSpec::from_json_str(&s.to_json_string().unwrap()).unwrap();
        let a1 = assemble_descriptor(&s, "L").unwrap().a;
        let a2 = assemble_descriptor(&again, "L").unwrap().a;
        assert!(a1.iter().zip(a2.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
