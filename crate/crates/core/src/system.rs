//! Graph-directed IFS configuration, structural validation and the transfer matrix.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::{Similitude, DEFAULT_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SystemError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("field {field}: {message}")]
    Field { field: String, message: String },
    #[error("{0}")]
    Invariant(String),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ScaleSpec {
    Literal(f64),
    Root { poly: Vec<f64>, bracket: [f64; 2] },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EdgeConfig {
    pub id: usize,
    pub from: String,
    pub to: String,
    pub a: u32,
    pub ortho: Vec<Vec<f64>>,
    pub translate: Vec<f64>,
}

/// On-disk system description.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub dimension: usize,
    pub s: ScaleSpec,
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeConfig>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    /// 1-based label used in addresses.
    pub id: usize,
    /// Source vertex `e⁻`; the map sends `A_{to}` into `A_{from}`.
    pub from: usize,
    pub to: usize,
    pub a: u32,
    pub map: Similitude,
}

/// A tiling IFS: similitudes indexed by the edges of a directed graph.
#[derive(Clone, Debug)]
pub struct GraphIfs {
    dim: usize,
    s: f64,
    vertices: Vec<String>,
    edges: Vec<Edge>,
    a_max: u32,
    hash: String,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
}

impl GraphIfs {
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn s(&self) -> f64 {
        self.s
    }
    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }
    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
    pub fn a_max(&self) -> u32 {
        self.a_max
    }
    /// Hex sha256 of the canonical serialization.
    pub fn hash(&self) -> &str {
        &self.hash
    }
    /// Edges `e` with `e⁻ = v`.
    pub fn out_edges(&self, v: usize) -> &[usize] {
        &self.out_edges[v]
    }
    /// Edges `e` with `e⁺ = v`.
    pub fn in_edges(&self, v: usize) -> &[usize] {
        &self.in_edges[v]
    }
    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == name)
    }
    pub fn vertex_name(&self, v: usize) -> &str {
        &self.vertices[v]
    }
    /// `s^k`
    pub fn s_pow(&self, k: i64) -> f64 {
        self.s.powi(k as i32)
    }
    pub fn scaling(&self, k: i64) -> Similitude {
        Similitude::scale_power(self.dim, self.s, k as i32)
    }
    /// `f_e^{-1}`
    pub fn inverse_map(&self, e: usize) -> Similitude {
        self.edges[e].map.inverse()
    }
    /// Edge labels are printed as contiguous digits only when every label is one digit.
    pub fn compact_labels(&self) -> bool {
        self.edges.len() <= 9
    }

    /// Parse and build without checking graph invariants (see [`validate`]).
    pub fn parse_unchecked(text: &str) -> Result<Self, SystemError> {
        let cfg: SystemConfig = serde_json::from_str(text).map_err(|e| SystemError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_config(&cfg)
    }

    pub fn from_config(cfg: &SystemConfig) -> Result<Self, SystemError> {
        let field = |f: &str, m: String| SystemError::Field { field: f.to_string(), message: m };
        let dim = cfg.dimension;
        if dim == 0 {
            return Err(field("dimension", "must be positive".into()));
        }
        let s = resolve_scale(&cfg.s)?;
        if cfg.vertices.is_empty() {
            return Err(field("vertices", "no vertices".into()));
        }
        for (i, v) in cfg.vertices.iter().enumerate() {
            if cfg.vertices[..i].contains(v) {
                return Err(field("vertices", format!("duplicate vertex {v:?}")));
            }
        }
        let mut ids: Vec<usize> = cfg.edges.iter().map(|e| e.id).collect();
        ids.sort_unstable();
        if ids != (1..=cfg.edges.len()).collect::<Vec<_>>() {
            return Err(field("edges", "edge ids must be 1..N without gaps".into()));
        }
        let mut edges: Vec<Option<Edge>> = vec![None; cfg.edges.len()];
        for ec in &cfg.edges {
            let label = format!("edges[id={}]", ec.id);
            let from = cfg
                .vertices
                .iter()
                .position(|v| *v == ec.from)
                .ok_or_else(|| field(&label, format!("unknown vertex {:?}", ec.from)))?;
            let to = cfg
                .vertices
                .iter()
                .position(|v| *v == ec.to)
                .ok_or_else(|| field(&label, format!("unknown vertex {:?}", ec.to)))?;
            if ec.a == 0 {
                return Err(field(&label, "exponent a must be ≥ 1".into()));
            }
            if ec.translate.len() != dim || ec.ortho.len() != dim || ec.ortho.iter().any(|r| r.len() != dim) {
                return Err(field(&label, format!("expected {dim}-dimensional ortho and translate")));
            }
            let lambda = s.powi(ec.a as i32);
            let linear: Vec<f64> = ec.ortho.iter().flatten().map(|v| v * lambda).collect();
            let map = match Similitude::from_matrix(&linear, &ec.translate) {
                Ok(m) if (m.ratio() - lambda).abs() <= 1e-9 * lambda => m.with_scale_exponent(Some(ec.a as i32)),
                _ => return Err(SystemError::Invariant(format!("ratio mismatch on edge {}", ec.id))),
            };
            edges[ec.id - 1] = Some(Edge { id: ec.id, from, to, a: ec.a, map });
        }
        let edges: Vec<Edge> = edges.into_iter().map(|e| e.expect("ids checked contiguous")).collect();
        let v = cfg.vertices.len();
        let mut out_edges = vec![Vec::new(); v];
        let mut in_edges = vec![Vec::new(); v];
        for (i, e) in edges.iter().enumerate() {
            out_edges[e.from].push(i);
            in_edges[e.to].push(i);
        }
        let a_max = edges.iter().map(|e| e.a).max().unwrap_or(0);
        let canonical = serde_json::to_string(&canonical_config(cfg, s)).expect("config serializes");
        let hash = hex::encode(Sha256::digest(canonical.as_bytes()));
        Ok(GraphIfs { dim, s, vertices: cfg.vertices.clone(), edges, a_max, hash, out_edges, in_edges })
    }

    /// Edge-count adjacency matrix, `A[u][w]` = number of edges `u → w`.
    pub fn adjacency(&self) -> Vec<Vec<u64>> {
        let v = self.vertex_count();
        let mut m = vec![vec![0u64; v]; v];
        for e in &self.edges {
            m[e.from][e.to] += 1;
        }
        m
    }
}

fn canonical_config(cfg: &SystemConfig, s: f64) -> SystemConfig {
    let mut c = cfg.clone();
    c.s = ScaleSpec::Literal(s);
    c.edges.sort_by_key(|e| e.id);
    c
}

/// Load a system and reject it unless every structural invariant holds.
pub fn load_system(text: &str) -> Result<GraphIfs, SystemError> {
    let sys = GraphIfs::parse_unchecked(text)?;
    let report = validate(&sys, None);
    if let Some(c) = report.checks.iter().find(|c| c.status == CheckStatus::Fail) {
        return Err(SystemError::Invariant(c.detail.clone()));
    }
    Ok(sys)
}

pub fn load_system_file(path: &std::path::Path) -> Result<GraphIfs, SystemError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SystemError::Field { field: path.display().to_string(), message: e.to_string() })?;
    load_system(&text)
}

fn resolve_scale(spec: &ScaleSpec) -> Result<f64, SystemError> {
    let s = match spec {
        ScaleSpec::Literal(s) => *s,
        ScaleSpec::Root { poly, bracket } => solve_root(poly, bracket[0], bracket[1]).ok_or_else(|| SystemError::Field {
            field: "s".into(),
            message: format!("polynomial does not change sign on [{}, {}]", bracket[0], bracket[1]),
        })?,
    };
    if !(s > 0.0 && s < 1.0) {
        return Err(SystemError::Field { field: "s".into(), message: format!("base must lie in (0,1), got {s}") });
    }
    Ok(s)
}

fn eval_poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

/// Bisection for a root of `c0 + c1 x + ...` on `[lo, hi]`.
pub fn solve_root(coeffs: &[f64], lo: f64, hi: f64) -> Option<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let mut flo = eval_poly(coeffs, lo);
    let fhi = eval_poly(coeffs, hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = eval_poly(coeffs, mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Skipped => "skipped",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

pub const CHECK_NAMES: [&str; 9] = [
    "contraction",
    "gcd",
    "vertex-count",
    "strongly-connected",
    "primitive",
    "ratio",
    "component-disjoint",
    "affine-span",
    "osc-heuristic",
];

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }
    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{:<20} {:<8} {}", c.name, c.status.to_string(), c.detail)?;
        }
        Ok(())
    }
}

fn check(name: &'static str, ok: bool, pass: impl Into<String>, fail: impl Into<String>) -> Check {
    if ok {
        Check { name, status: CheckStatus::Pass, detail: pass.into() }
    } else {
        Check { name, status: CheckStatus::Fail, detail: fail.into() }
    }
}

fn skipped(name: &'static str, why: &str) -> Check {
    Check { name, status: CheckStatus::Skipped, detail: why.to_string() }
}

/// Run every declared check; sample-based checks run only when a cloud is given.
pub fn validate(sys: &GraphIfs, cloud: Option<&crate::attractor::AttractorCloud>) -> ValidationReport {
    let mut checks = Vec::new();
    let bad: Vec<usize> = sys.edges.iter().filter(|e| !(e.map.ratio() < 1.0)).map(|e| e.id).collect();
    checks.push(check(
        "contraction",
        bad.is_empty(),
        format!("all ratios < 1 (s = {})", sys.s),
        format!("edges {bad:?} are not contractions"),
    ));
    let g = sys.edges.iter().fold(0u32, |acc, e| num_integer::gcd(acc, e.a));
    checks.push(check("gcd", g == 1, "gcd(a) = 1", "gcd(a)≠1"));
    let (n, v) = (sys.edge_count(), sys.vertex_count());
    checks.push(check(
        "vertex-count",
        n >= 2 && v >= 1 && v < n,
        format!("N = {n}, V = {v}"),
        format!("need N ≥ 2 and 1 ≤ V < N, got N = {n}, V = {v}"),
    ));
    let connected = strongly_connected(sys);
    checks.push(check("strongly-connected", connected, "every vertex reaches every vertex", "not strongly connected"));
    let prim = primitive_power(sys);
    checks.push(check(
        "primitive",
        prim.is_some(),
        format!("adjacency power {} is positive", prim.unwrap_or(0)),
        "adjacency matrix is not primitive",
    ));
    let worst = sys.edges.iter().map(|e| e.map.orthogonality_defect()).fold(0.0, f64::max);
    checks.push(check(
        "ratio",
        worst <= DEFAULT_TOL,
        format!("orthogonality defect {worst:.1e}"),
        format!("orthogonality defect {worst:.1e}"),
    ));
    match cloud {
        None => {
            checks.push(skipped("component-disjoint", "no attractor samples"));
            checks.push(skipped("affine-span", "no attractor samples"));
            checks.push(skipped("osc-heuristic", "no attractor samples"));
        }
        Some(c) => {
            checks.push(disjointness_check(sys, c));
            checks.push(span_check(sys, c));
            let nbrs = crate::attractor::neighbor_maps(sys, 2);
            let osc = crate::attractor::osc_heuristic(sys, c, &nbrs);
            checks.push(check(
                "osc-heuristic",
                osc.pass,
                format!("central point margin {:.3e}", osc.margin),
                format!("no point of some A_v clear of its neighbours (margin {:.3e})", osc.margin),
            ));
        }
    }
    ValidationReport { checks }
}

fn disjointness_check(sys: &GraphIfs, cloud: &crate::attractor::AttractorCloud) -> Check {
    use crate::geometry::PointIndex;
    let v = sys.vertex_count();
    if v == 1 {
        return check("component-disjoint", true, "single component", "");
    }
    let eps = cloud.resolution();
    let subs: Vec<_> = (0..v).map(|i| cloud.vertex(i).subsample(4000)).collect();
    let mut closest = f64::INFINITY;
    let mut pair = (0, 0);
    for i in 0..v {
        let idx = PointIndex::new(&subs[i]);
        for j in i + 1..v {
            let d = subs[j].points().map(|p| idx.nearest_distance(p)).fold(f64::INFINITY, f64::min);
            if d < closest {
                closest = d;
                pair = (i, j);
            }
        }
    }
    check(
        "component-disjoint",
        closest > eps,
        format!("components separated by {closest:.3e} (resolution {eps:.1e})"),
        format!(
            "components {} and {} come within {closest:.3e}",
            sys.vertex_name(pair.0),
            sys.vertex_name(pair.1)
        ),
    )
}

fn span_check(sys: &GraphIfs, cloud: &crate::attractor::AttractorCloud) -> Check {
    let m = sys.dim();
    for v in 0..sys.vertex_count() {
        let r = cloud.vertex(v).subsample(2000);
        let Some(c) = r.centroid() else {
            return check("affine-span", false, "", format!("no samples for {}", sys.vertex_name(v)));
        };
        let mut data = DMatrix::<f64>::zeros(r.len(), m);
        for (i, p) in r.points().enumerate() {
            for j in 0..m {
                data[(i, j)] = p[j] - c[j];
            }
        }
        let sv = data.singular_values();
        let top = sv.max();
        let rank = sv.iter().filter(|&&x| x > top * 1e-9).count();
        if rank < m {
            return check("affine-span", false, "", format!("A_{} spans dimension {rank} < {m}", sys.vertex_name(v)));
        }
    }
    check("affine-span", true, format!("every component spans R^{m}"), "")
}

fn reach(adj: &[Vec<usize>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(u) = stack.pop() {
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

pub fn strongly_connected(sys: &GraphIfs) -> bool {
    let v = sys.vertex_count();
    let mut fwd = vec![Vec::new(); v];
    let mut back = vec![Vec::new(); v];
    for e in &sys.edges {
        fwd[e.from].push(e.to);
        back[e.to].push(e.from);
    }
    reach(&fwd, 0).iter().all(|&b| b) && reach(&back, 0).iter().all(|&b| b)
}

/// Smallest power `p ≤ (V-1)^2 + 1` with a positive adjacency power.
pub fn primitive_power(sys: &GraphIfs) -> Option<usize> {
    let v = sys.vertex_count();
    let adj: Vec<Vec<bool>> = sys.adjacency().iter().map(|r| r.iter().map(|&c| c > 0).collect()).collect();
    let bound = (v - 1) * (v - 1) + 1;
    let mut power = adj.clone();
    for p in 1..=bound {
        if power.iter().all(|r| r.iter().all(|&b| b)) {
            return Some(p);
        }
        let mut next = vec![vec![false; v]; v];
        for i in 0..v {
            for k in 0..v {
                if power[i][k] {
                    for j in 0..v {
                        next[i][j] |= adj[k][j];
                    }
                }
            }
        }
        power = next;
    }
    None
}

/// `W(t)[w][v] = Σ_{e: e⁻=w, e⁺=v} s^{t a_e}`.
pub fn transfer_matrix(sys: &GraphIfs, t: f64) -> DMatrix<f64> {
    let v = sys.vertex_count();
    let mut m = DMatrix::zeros(v, v);
    for e in &sys.edges {
        m[(e.from, e.to)] += sys.s.powf(t * e.a as f64);
    }
    m
}
