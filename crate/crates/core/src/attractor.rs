//! Chaos-game sampling of the attractor, the address map on cells, dimension and neighbour maps.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{max_nn_spacing, nn_spacing, PointIndex, Region, Similitude, DEFAULT_TOL};
use crate::symbolic::{DaggerPath, Word};
use crate::system::{transfer_matrix, GraphIfs};

pub const DEFAULT_POINTS_PER_VERTEX: usize = 100_000;
pub const DEFAULT_BURN_IN: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttractorError {
    #[error("driver exhausted after {0} steps")]
    DriverExhausted(usize),
    #[error("probabilities into vertex {vertex} sum to {sum}, expected 1")]
    NotStochastic { vertex: String, sum: f64 },
    #[error("probability for edge {0} must be positive")]
    NonPositive(usize),
    #[error("expected {expected} probabilities, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("no samples for vertex {0}")]
    MissingVertex(String),
    #[error("dimension bracket failed: spectral radius {rho_hi} at t = {hi} exceeds 1")]
    Bracket { hi: f64, rho_hi: f64 },
    #[error("spectral radius is not decreasing near t = {0}")]
    NotMonotone(f64),
    #[error("need n > burn_in, got n = {n}, burn_in = {burn_in}")]
    BadCount { n: usize, burn_in: usize },
}

/// Edge probabilities for the reversed-graph Markov chain, seeded.
#[derive(Clone, Debug)]
pub struct MarkovSampler {
    probs: Vec<f64>,
    seed: u64,
}

impl MarkovSampler {
    /// Explicit probabilities; rows grouped by `e⁺` must sum to one.
    pub fn new(sys: &GraphIfs, probs: Vec<f64>, seed: u64) -> Result<Self, AttractorError> {
        if probs.len() != sys.edge_count() {
            return Err(AttractorError::WrongLength { expected: sys.edge_count(), got: probs.len() });
        }
        if let Some(i) = probs.iter().position(|&p| !(p > 0.0)) {
            return Err(AttractorError::NonPositive(i + 1));
        }
        for v in 0..sys.vertex_count() {
            let sum: f64 = sys.in_edges(v).iter().map(|&e| probs[e]).sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(AttractorError::NotStochastic { vertex: sys.vertex_name(v).into(), sum });
            }
        }
        Ok(MarkovSampler { probs, seed })
    }

    /// `p_e ∝ s^{D a_e}` over edges sharing `e⁺`, with `D` the attractor dimension.
    pub fn natural(sys: &GraphIfs, seed: u64) -> Self {
        let d = hausdorff_dimension(sys, 1e-12).unwrap_or(sys.dim() as f64);
        let mut probs: Vec<f64> = sys.edges().iter().map(|e| sys.s().powf(d * e.a as f64)).collect();
        for v in 0..sys.vertex_count() {
            let sum: f64 = sys.in_edges(v).iter().map(|&e| probs[e]).sum();
            for &e in sys.in_edges(v) {
                probs[e] /= sum;
            }
        }
        MarkovSampler { probs, seed }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Edge stream `θ₁θ₂…` starting at vertex `start`, with `θₖ₊₁⁺ = θₖ⁻`.
    pub fn stream<'a>(&'a self, sys: &'a GraphIfs, start: usize) -> impl Iterator<Item = usize> + 'a {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut vertex = start;
        std::iter::from_fn(move || {
            let choices = sys.in_edges(vertex);
            let mut u: f64 = rng.gen::<f64>();
            let mut pick = *choices.last().expect("strongly connected graph has in-edges");
            for &e in choices {
                if u < self.probs[e] {
                    pick = e;
                    break;
                }
                u -= self.probs[e];
            }
            vertex = sys.edge(pick).from;
            Some(pick)
        })
    }
}

/// A reproducible Markov edge stream of the given length, starting at vertex 0.
pub fn sample_markov_path(sys: &GraphIfs, probs: &[f64], length: usize, seed: u64) -> Result<Vec<usize>, AttractorError> {
    let sampler = MarkovSampler::new(sys, probs.to_vec(), seed)?;
    Ok(sampler.stream(sys, 0).take(length).collect())
}

pub enum Driver<'a> {
    Path(&'a DaggerPath),
    Markov(&'a MarkovSampler),
}

/// Per-vertex point samples of the attractor.
#[derive(Clone, Debug)]
pub struct AttractorCloud {
    dim: usize,
    per_vertex: Vec<Region>,
    seed: Option<u64>,
    driver: String,
    x0: Vec<f64>,
    resolution: Vec<f64>,
}

impl AttractorCloud {
    pub fn from_regions(per_vertex: Vec<Region>, driver: impl Into<String>) -> Self {
        let dim = per_vertex.first().map_or(1, |r| r.dim());
        let resolution = per_vertex.iter().map(|r| 2.0 * max_nn_spacing(r)).collect();
        AttractorCloud { dim, per_vertex, seed: None, driver: driver.into(), x0: vec![0.0; dim], resolution }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn vertex(&self, v: usize) -> &Region {
        &self.per_vertex[v]
    }
    pub fn regions(&self) -> &[Region] {
        &self.per_vertex
    }
    pub fn sample_count(&self) -> usize {
        self.per_vertex.iter().map(|r| r.len()).sum()
    }
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
    pub fn driver(&self) -> &str {
        &self.driver
    }
    pub fn start_point(&self) -> &[f64] {
        &self.x0
    }
    /// Twice the median nearest-neighbour spacing of the `v` samples.
    pub fn resolution_of(&self, v: usize) -> f64 {
        self.resolution[v]
    }
    /// Coarsest per-vertex resolution.
    pub fn resolution(&self) -> f64 {
        self.resolution.iter().copied().fold(0.0, f64::max)
    }
}

/// Fixed point of a contraction.
pub fn fixed_point(f: &Similitude) -> Vec<f64> {
    let d = f.dim();
    let a = DMatrix::from_row_slice(d, d, f.matrix());
    let lhs = DMatrix::<f64>::identity(d, d) - a;
    let rhs = DVector::from_column_slice(f.translate());
    let x = lhs.lu().solve(&rhs).expect("contraction has a unique fixed point");
    x.iter().copied().collect()
}

/// A point of `A_v`: the fixed point of a shortest loop at `v`.
pub fn point_in_component(sys: &GraphIfs, v: usize) -> Vec<f64> {
    let n = sys.vertex_count();
    let mut back: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut queue = std::collections::VecDeque::new();
    for &e in sys.out_edges(v) {
        let to = sys.edge(e).to;
        if to == v {
            return fixed_point(&sys.edge(e).map);
        }
        if back[to].is_none() {
            back[to] = Some((v, e));
            queue.push_back(to);
        }
    }
    while let Some(u) = queue.pop_front() {
        for &e in sys.out_edges(u) {
            let to = sys.edge(e).to;
            if to == v {
                let mut edges = vec![e];
                let mut cur = u;
                while cur != v {
                    let (prev, pe) = back[cur].unwrap();
                    edges.push(pe);
                    cur = prev;
                }
                edges.reverse();
                return fixed_point(&Word::from_edges(sys, &edges).unwrap().map(sys));
            }
            if back[to].is_none() {
                back[to] = Some((u, e));
                queue.push_back(to);
            }
        }
    }
    vec![0.0; sys.dim()]
}

/// Iterate `x_k = f_{θ_k}(x_{k-1})` along the driver and bin each point at `θ_k⁻`.
pub fn chaos_game(
    sys: &GraphIfs,
    driver: Driver<'_>,
    n: usize,
    burn_in: usize,
    x0: Option<&[f64]>,
) -> Result<AttractorCloud, AttractorError> {
    if n <= burn_in {
        return Err(AttractorError::BadCount { n, burn_in });
    }
    let dim = sys.dim();
    let (start, desc, seed): (usize, String, Option<u64>) = match &driver {
        Driver::Path(p) => (p.origin(), format!("path {}", p.label(sys)), None),
        Driver::Markov(m) => (0, format!("markov seed {}", m.seed()), Some(m.seed())),
    };
    let x0 = x0.map(|x| x.to_vec()).unwrap_or_else(|| point_in_component(sys, start));
    let mut stream: Box<dyn Iterator<Item = usize>> = match driver {
        Driver::Path(p) => {
            let p = p.clone();
            Box::new((0..).map_while(move |i| p.edge_at(i)))
        }
        Driver::Markov(m) => Box::new(m.stream(sys, start)),
    };
    let mut coords: Vec<Vec<f64>> = vec![Vec::new(); sys.vertex_count()];
    let mut x = x0.clone();
    let mut y = vec![0.0; dim];
    for step in 0..n {
        let e = stream.next().ok_or(AttractorError::DriverExhausted(step))?;
        sys.edge(e).map.apply_into(&x, &mut y);
        std::mem::swap(&mut x, &mut y);
        if step >= burn_in {
            coords[sys.edge(e).from].extend_from_slice(&x);
        }
    }
    let per_vertex: Vec<Region> = coords.into_iter().map(|c| Region::new(dim, c)).collect();
    let mut cloud = AttractorCloud::from_regions(per_vertex, desc);
    cloud.seed = seed;
    cloud.x0 = x0;
    Ok(cloud)
}

/// Markov chaos game with the natural probabilities, run until every vertex has `per_vertex` points.
pub fn sample_attractor(sys: &GraphIfs, per_vertex: usize, seed: u64) -> AttractorCloud {
    let sampler = MarkovSampler::natural(sys, seed);
    let dim = sys.dim();
    let mut coords: Vec<Vec<f64>> = vec![Vec::new(); sys.vertex_count()];
    let x0 = point_in_component(sys, 0);
    let mut x = x0.clone();
    let mut y = vec![0.0; dim];
    let cap = per_vertex.saturating_mul(64 * sys.vertex_count()).max(1);
    for (step, e) in sampler.stream(sys, 0).enumerate() {
        if step >= cap || coords.iter().all(|c| c.len() >= per_vertex * dim) {
            break;
        }
        sys.edge(e).map.apply_into(&x, &mut y);
        std::mem::swap(&mut x, &mut y);
        if step >= DEFAULT_BURN_IN {
            let c = &mut coords[sys.edge(e).from];
            if c.len() < per_vertex * dim {
                c.extend_from_slice(&x);
            }
        }
    }
    let per: Vec<Region> = coords.into_iter().map(|c| Region::new(dim, c)).collect();
    let mut cloud = AttractorCloud::from_regions(per, format!("markov seed {seed}"));
    cloud.seed = Some(seed);
    cloud.x0 = x0;
    cloud
}

/// Deterministic sample: one point `f_σ(x_{σ⁺})` per cell `σ ∈ Ω_k^v`.
///
/// Every point of `A_v` lies within `r = s^{k+1} diam` of the sample, so the stored
/// resolution `2r` is a contact tolerance: intersecting pieces have samples that close.
pub fn cell_cloud(sys: &GraphIfs, k: i64) -> AttractorCloud {
    let dim = sys.dim();
    let seeds: Vec<Vec<f64>> = (0..sys.vertex_count()).map(|v| point_in_component(sys, v)).collect();
    let mut per_vertex = Vec::new();
    for v in 0..sys.vertex_count() {
        let mut coords = Vec::new();
        for sigma in crate::symbolic::omega(sys, k, Some(v)) {
            coords.extend(sigma.map(sys).apply(&seeds[sigma.end()]));
        }
        per_vertex.push(Region::new(dim, coords));
    }
    let shrink = sys.s_pow(k + 1);
    let diam = per_vertex.iter().filter_map(|r| r.bbox()).map(|b| b.diagonal()).fold(0.0, f64::max);
    let r = shrink * diam / (1.0 - 2.0 * shrink).max(0.1);
    AttractorCloud {
        dim,
        resolution: vec![2.0 * r; per_vertex.len()],
        per_vertex,
        seed: None,
        driver: format!("cells at level {k}"),
        x0: seeds[0].clone(),
    }
}

/// [`cell_cloud`] at the first level giving every vertex at least `points` samples.
pub fn cell_cloud_with(sys: &GraphIfs, points: usize) -> AttractorCloud {
    let mut k = 0;
    while (0..sys.vertex_count()).any(|v| crate::symbolic::omega_count(sys, k, v) < points as u128) {
        k += 1;
    }
    cell_cloud(sys, k)
}

/// `π(σ) = f_σ(A_{σ⁺})` as a transformed sample.
pub fn pi_region(sys: &GraphIfs, sigma: &Word, cloud: &AttractorCloud) -> Result<Region, AttractorError> {
    let v = sigma.end();
    let r = cloud.vertex(v);
    if r.is_empty() {
        return Err(AttractorError::MissingVertex(sys.vertex_name(v).into()));
    }
    Ok(r.transformed(&sigma.map(sys)))
}

/// Spectral radius of a nonnegative matrix by power iteration with Collatz–Wielandt bounds.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut x = DVector::from_element(n, 1.0);
    let mut estimate = 0.0;
    for _ in 0..2000 {
        let y = m * &x;
        let ratios = (0..n).filter(|&i| x[i] > 0.0).map(|i| y[i] / x[i]);
        let (lo, hi) = ratios.fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
        estimate = 0.5 * (lo + hi);
        let norm = y.iter().copied().fold(0.0, f64::max);
        if norm == 0.0 {
            return 0.0;
        }
        if hi - lo <= 1e-14 * hi.max(1e-300) {
            return estimate;
        }
        // damped step keeps periodic matrices from oscillating
        x = (y / norm + &x) * 0.5;
    }
    estimate
}

/// The `t ∈ [0, M]` with spectral radius of `W(t)` equal to one.
pub fn hausdorff_dimension(sys: &GraphIfs, tol: f64) -> Result<f64, AttractorError> {
    let rho = |t: f64| spectral_radius(&transfer_matrix(sys, t));
    let (mut lo, mut hi) = (0.0, sys.dim() as f64);
    let rho_hi = rho(hi);
    if rho_hi > 1.0 + 1e-12 {
        return Err(AttractorError::Bracket { hi, rho_hi });
    }
    if (rho_hi - 1.0).abs() <= 1e-12 {
        return Ok(hi);
    }
    let mut prev = rho(lo);
    for _ in 0..200 {
        if hi - lo <= tol.min(1e-12) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let r = rho(mid);
        if r > prev + 1e-12 {
            return Err(AttractorError::NotMonotone(mid));
        }
        if r > 1.0 {
            lo = mid;
            prev = r;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Debug)]
pub struct NeighborMap {
    pub map: Similitude,
    pub theta: DaggerPath,
    pub sigma: Word,
}

impl NeighborMap {
    /// The vertex whose component is mapped.
    pub fn source(&self) -> usize {
        self.sigma.end()
    }
}

/// Maps `f_{-θ} f_σ` with `θ⁺ = σ⁻`, `θ_last ≠ σ₁`, grouped by `θ⁻`.
#[derive(Clone, Debug)]
pub struct NeighborMapSet {
    pub depth: usize,
    pub per_vertex: Vec<Vec<NeighborMap>>,
}

impl NeighborMapSet {
    pub fn len(&self) -> usize {
        self.per_vertex.iter().map(|v| v.len()).sum()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn contains(&self, v: usize, f: &Similitude, tol: f64) -> bool {
        self.per_vertex[v].iter().any(|m| m.map.approx_eq(f, tol))
    }
}

fn words_from(sys: &GraphIfs, v: usize, max_len: usize) -> Vec<Word> {
    let mut out = Vec::new();
    let mut layer = vec![Word::empty(v)];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for &e in sys.out_edges(w.end()) {
                next.push(w.push(sys, e).unwrap());
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

pub fn neighbor_maps(sys: &GraphIfs, depth: usize) -> NeighborMapSet {
    let mut per_vertex: Vec<Vec<NeighborMap>> = vec![Vec::new(); sys.vertex_count()];
    for v in 0..sys.vertex_count() {
        let words = words_from(sys, v, depth.max(1));
        for rho in &words {
            let theta_edges: Vec<usize> = rho.edges().iter().rev().copied().collect();
            let theta = DaggerPath::finite(sys, &theta_edges, None).unwrap();
            let inv = rho.map(sys).inverse();
            for sigma in &words {
                if sigma.first() == rho.first() {
                    continue;
                }
                let map = &inv * &sigma.map(sys);
                let bucket = &mut per_vertex[theta.origin()];
                if bucket.iter().any(|m| m.source() == sigma.end() && m.map.approx_eq(&map, DEFAULT_TOL)) {
                    continue;
                }
                bucket.push(NeighborMap { map, theta: theta.clone(), sigma: sigma.clone() });
            }
        }
    }
    NeighborMapSet { depth, per_vertex }
}

#[derive(Clone, Debug)]
pub struct OscResult {
    pub pass: bool,
    /// Smallest per-vertex clearance.
    pub margin: f64,
    pub per_vertex: Vec<f64>,
}

/// Look for a point of each `A_v` clear of every neighbour image.
pub fn osc_heuristic(sys: &GraphIfs, cloud: &AttractorCloud, nbrs: &NeighborMapSet) -> OscResult {
    const PROBES: usize = 1500;
    const IMAGE_POINTS: usize = 3000;
    let subs: Vec<Region> = cloud.regions().iter().map(|r| r.subsample(IMAGE_POINTS)).collect();
    let sub_res: Vec<f64> = subs.iter().map(|r| 2.0 * nn_spacing(r, 500)).collect();
    let mut per_vertex = Vec::new();
    for v in 0..sys.vertex_count() {
        let probes = cloud.vertex(v).subsample(PROBES);
        let Some(bbox) = probes.bbox().cloned() else {
            per_vertex.push(0.0);
            continue;
        };
        let reach = bbox.diagonal() + sub_res[v];
        let images: Vec<(PointIndex, f64)> = nbrs.per_vertex[v]
            .iter()
            .filter_map(|m| {
                let w = m.source();
                let img_box = subs[w].bbox()?.transformed(&m.map);
                if !img_box.intersects(&bbox.expanded(reach)) {
                    return None;
                }
                Some((PointIndex::new(&subs[w].transformed(&m.map)), m.map.ratio() * sub_res[w]))
            })
            .collect();
        let best = probes
            .points()
            .map(|x| images.iter().map(|(idx, slack)| idx.nearest_distance(x) - slack).fold(f64::INFINITY, f64::min))
            .fold(f64::NEG_INFINITY, f64::max);
        per_vertex.push(best.min(bbox.diagonal()));
    }
    let margin = per_vertex.iter().copied().fold(f64::INFINITY, f64::min);
    let pass = (0..sys.vertex_count()).all(|v| per_vertex[v] > 2.0 * cloud.resolution_of(v));
    OscResult { pass, margin, per_vertex }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryMode {
    Critical,
    Dynamical,
    Inner(i64),
}

/// Per-vertex critical samples: points of `f_d(A_{d⁺})` near `f_e(A_{e⁺})`, `d ≠ e`, `d⁻ = e⁻`.
pub fn critical_samples(sys: &GraphIfs, cloud: &AttractorCloud) -> Vec<Region> {
    let dim = sys.dim();
    let cells: Vec<Region> = (0..sys.edge_count())
        .map(|e| cloud.vertex(sys.edge(e).to).subsample(20_000).transformed(&sys.edge(e).map))
        .collect();
    let mut out = Vec::new();
    for v in 0..sys.vertex_count() {
        let mut coords = Vec::new();
        let edges = sys.out_edges(v);
        for &d in edges {
            for &e in edges {
                if d == e {
                    continue;
                }
                let eps = cloud.resolution_of(sys.edge(e).to) * sys.edge(e).map.ratio()
                    + cloud.resolution_of(sys.edge(d).to) * sys.edge(d).map.ratio();
                let idx = PointIndex::new(&cells[e]);
                for p in cells[d].points() {
                    if idx.any_within(p, eps) {
                        coords.extend_from_slice(p);
                    }
                }
            }
        }
        out.push(Region::new(dim, coords));
    }
    out
}

/// Sampled critical set, dynamical boundary to `depth`, or inner boundary at level `k`.
pub fn boundary_samples(sys: &GraphIfs, cloud: &AttractorCloud, mode: BoundaryMode, depth: usize) -> Region {
    let dim = sys.dim();
    let crit = critical_samples(sys, cloud);
    match mode {
        BoundaryMode::Critical => Region::merged(&crit.iter().collect::<Vec<_>>()),
        BoundaryMode::Dynamical => {
            let mut coords = Vec::new();
            for v in 0..sys.vertex_count() {
                for rho in words_from(sys, v, depth) {
                    let theta_edges: Vec<usize> = rho.edges().iter().rev().copied().collect();
                    let theta = DaggerPath::finite(sys, &theta_edges, None).unwrap();
                    let target = theta.origin();
                    let idx = PointIndex::new(cloud.vertex(target));
                    let eps = cloud.resolution_of(target);
                    let img = crit[v].transformed(&theta.inverse_map(sys));
                    for p in img.points() {
                        if idx.any_within(p, eps) {
                            coords.extend_from_slice(p);
                        }
                    }
                }
            }
            Region::new(dim, coords)
        }
        BoundaryMode::Inner(k) => {
            let mut coords = Vec::new();
            for sigma in crate::symbolic::omega(sys, k.max(0), None) {
                coords.extend_from_slice(crit[sigma.end()].transformed(&sigma.map(sys)).coords());
            }
            Region::new(dim, coords)
        }
    }
}
