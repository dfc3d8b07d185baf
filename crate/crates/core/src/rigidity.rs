//! Deflation and inflation, partner copies, rigidity audits and the equivalence decision.

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{directed_hausdorff, PointIndex, Region, Similitude};
use crate::symbolic::{amalgamate, lambda_set, parse_word, DaggerPath, SymbolicError, Word};
use crate::system::GraphIfs;
use crate::tiling::{canonical_tile, canonical_tiling, meets, pi_tiling, Group, GroupFilter, Tile, TileRealizer, Tiling, TilingError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RigidityError {
    #[error("cannot deflate below T_-1")]
    Floor,
    #[error("deflation power {power} exceeds ξ(θ|{depth}) = {xi}")]
    PowerOutOfRange { power: i64, depth: usize, xi: i64 },
    #[error("system failed the rigidity audit; refusing to deflate")]
    NotRigid,
    #[error("tile {tile} lies in {copies} distinct partner copies")]
    Ambiguous { tile: String, copies: usize },
    #[error("tile {0} of the smallest class has no partner copy")]
    Unpartnered(String),
    #[error("copy for {word} is not contained in T_k")]
    CopyNotContained { word: String },
    #[error("ξ mismatch: {0} vs {1}")]
    XiMismatch(i64, i64),
    #[error("tails differ after shifting")]
    TailMismatch,
    #[error("terminal vertices differ")]
    VertexMismatch,
    #[error("expected eventually periodic paths")]
    NotPeriodic,
    #[error(transparent)]
    Tiling(#[from] TilingError),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
}

/// `E T_k^v`.
#[derive(Clone, Debug)]
pub struct CanonicalHandle {
    pub frame: Similitude,
    pub k: i64,
    pub v: usize,
}

impl CanonicalHandle {
    pub fn realize(&self, sys: &GraphIfs) -> Result<Tiling, TilingError> {
        Ok(canonical_tiling(sys, self.k, Some(self.v))?.transformed(&self.frame))
    }
}

/// `α(E T_k^v) = (s E s⁻¹) T_{k-1}^v`.
pub fn deflate_canonical(sys: &GraphIfs, h: &CanonicalHandle) -> Result<CanonicalHandle, RigidityError> {
    if h.k <= -1 {
        return Err(RigidityError::Floor);
    }
    Ok(CanonicalHandle { frame: h.frame.conjugate_by_scaling(sys.s()), k: h.k - 1, v: h.v })
}

/// `α⁻¹(E T_k^v) = (s⁻¹ E s) T_{k+1}^v`.
pub fn inflate_canonical(sys: &GraphIfs, h: &CanonicalHandle) -> CanonicalHandle {
    CanonicalHandle { frame: h.frame.conjugate_by_scaling(1.0 / sys.s()), k: h.k + 1, v: h.v }
}

/// `α^K Π(θ|depth)` as a tiling.
pub fn deflate_pi(sys: &GraphIfs, theta: &DaggerPath, power: i64, depth: usize) -> Result<Tiling, RigidityError> {
    let t = theta.truncate(depth)?;
    let xi = t.xi(sys);
    if power < 0 || power > xi {
        return Err(RigidityError::PowerOutOfRange { power, depth, xi });
    }
    let frame = &(&sys.scaling(power) * &t.inverse_map(sys)) * &sys.scaling(xi - power);
    let h = CanonicalHandle { frame: frame.isometric_part(), k: xi - power, v: t.terminal(sys) };
    Ok(h.realize(sys)?)
}

/// `α^{a_{θ₁}} Π(θ|k) = s^{a_{θ₁}} f_{θ₁}⁻¹ Π(Sθ|k-1)` on tile sets.
pub fn deflation_identity(sys: &GraphIfs, theta: &DaggerPath, k: usize) -> Result<bool, RigidityError> {
    let first = theta.edge_at(0).ok_or(RigidityError::PowerOutOfRange { power: 0, depth: k, xi: 0 })?;
    let a = sys.edge(first).a as i64;
    let lhs = deflate_pi(sys, theta, a, k)?;
    let g = &sys.scaling(a) * &sys.inverse_map(first);
    let rhs = pi_tiling(sys, &theta.shift(sys, 1).truncate(k - 1)?)?.map_by(sys, &g)?;
    Ok(lhs.set_eq(&rhs))
}

/// `α^{-a_n} Π(θ|k) = s^{-a_n} f_n Π(nθ|k+1)` for an edge `n` with `n⁻ = θ⁻`.
pub fn inflation_identity(sys: &GraphIfs, theta: &DaggerPath, n: usize, k: usize) -> Result<bool, RigidityError> {
    let t = theta.truncate(k)?;
    let a = sys.edge(n).a as i64;
    let xi = t.xi(sys);
    let frame = crate::tiling::e_theta(sys, &t);
    let lhs_handle = CanonicalHandle { frame, k: xi, v: t.terminal(sys) };
    let mut h = lhs_handle;
    for _ in 0..a {
        h = inflate_canonical(sys, &h);
    }
    let lhs = h.realize(sys)?;
    let mut extended = vec![n];
    extended.extend(t.prefix());
    let nt = DaggerPath::finite(sys, &extended, None)?;
    let g = &sys.scaling(-a) * &sys.edge(n).map;
    let rhs = pi_tiling(sys, &nt)?.map_by(sys, &g)?;
    Ok(lhs.set_eq(&rhs))
}

fn tile_word(sys: &GraphIfs, t: &Tile) -> Result<Word, RigidityError> {
    Ok(parse_word(sys, &t.address, t.vertex)?)
}

/// Deflate `E T_k` through the tile addresses: each word is replaced by its amalgamation.
pub fn deflate_addressed(sys: &GraphIfs, t: &Tiling, k: i64) -> Result<Tiling, RigidityError> {
    if k <= 0 {
        return Err(RigidityError::Floor);
    }
    let e = t.frame.clone().unwrap_or_else(|| Similitude::identity(sys.dim())).conjugate_by_scaling(sys.s());
    let mut out = Tiling::new();
    for tile in t.iter() {
        let w = amalgamate(sys, &tile_word(sys, tile)?, k)?;
        out.insert(canonical_tile(sys, &w, k - 1).transformed(&e));
    }
    out.k = Some(k - 1);
    out.frame = Some(e);
    Ok(out)
}

/// Inverse of [`deflate_addressed`]: words at level `ξ = k + 1` split into their extensions.
pub fn inflate_addressed(sys: &GraphIfs, t: &Tiling, k: i64) -> Result<Tiling, RigidityError> {
    let e = t.frame.clone().unwrap_or_else(|| Similitude::identity(sys.dim())).conjugate_by_scaling(1.0 / sys.s());
    let mut out = Tiling::new();
    for tile in t.iter() {
        let w = tile_word(sys, tile)?;
        if w.xi() == k + 1 {
            for &d in sys.out_edges(w.end()) {
                out.insert(canonical_tile(sys, &w.push(sys, d)?, k + 1).transformed(&e));
            }
        } else {
            out.insert(canonical_tile(sys, &w, k + 1).transformed(&e));
        }
    }
    out.k = Some(k + 1);
    out.frame = Some(e);
    Ok(out)
}

#[derive(Clone, Debug)]
pub enum Partners {
    None,
    /// The copy `E T_0^v` and the indices of its tiles in the tiling.
    Unique { e: Similitude, v: usize, tiles: Vec<usize> },
    Ambiguous(Vec<(Similitude, usize)>),
}

/// Copies `E T_0^v ⊂ T` containing `tile`.
pub fn find_partners(sys: &GraphIfs, tile: &Tile, t: &Tiling, filter: &GroupFilter) -> Result<Partners, RigidityError> {
    let mut copies: Vec<(Similitude, usize, Vec<usize>)> = Vec::new();
    for v in 0..sys.vertex_count() {
        let base = canonical_tiling(sys, 0, Some(v))?;
        for b in base.iter() {
            if b.vertex != tile.vertex || b.class != tile.class {
                continue;
            }
            let e = (&tile.frame * &b.frame.inverse()).with_scale_exponent(Some(0));
            if !filter.admits(&e) || copies.iter().any(|(f, w, _)| *w == v && f.approx_eq(&e, 1e-7)) {
                continue;
            }
            let idx: Option<Vec<usize>> = base.iter().map(|p| t.find(&p.transformed(&e), crate::DEFAULT_TOL)).collect();
            if let Some(idx) = idx {
                copies.push((e, v, idx));
            }
        }
    }
    Ok(match copies.len() {
        0 => Partners::None,
        1 => {
            let (e, v, tiles) = copies.pop().unwrap();
            Partners::Unique { e, v, tiles }
        }
        _ => Partners::Ambiguous(copies.into_iter().map(|(e, v, _)| (e, v)).collect()),
    })
}

/// Whether [`deflate_tiling`] may run.
pub enum DeflationGuard<'a> {
    Audited(&'a RigidityReport),
    /// Proceed without an audit; ambiguity is still refused.
    Override,
}

/// Tiles isometric to some `sA_v`.
pub fn large_tiles(t: &Tiling) -> Vec<&Tile> {
    t.iter().filter(|t| t.class == 0).collect()
}

/// Geometric deflation: partner copies `E T_0^v` collapse to `sEA_v`, other tiles shrink.
pub fn deflate_tiling(sys: &GraphIfs, t: &Tiling, filter: &GroupFilter, guard: DeflationGuard<'_>) -> Result<Tiling, RigidityError> {
    if let DeflationGuard::Audited(r) = guard {
        if !r.passed() {
            return Err(RigidityError::NotRigid);
        }
    }
    let s = sys.s();
    let mut out = Tiling::new();
    for tile in t.iter() {
        match find_partners(sys, tile, t, filter)? {
            Partners::Unique { e, v, .. } => {
                out.insert(Tile { class: 0, frame: e.conjugate_by_scaling(s), vertex: v, address: String::new() });
            }
            Partners::Ambiguous(c) => {
                return Err(RigidityError::Ambiguous { tile: tile.describe(sys), copies: c.len() });
            }
            Partners::None => {
                if tile.class + 1 >= sys.a_max() as i32 {
                    return Err(RigidityError::Unpartnered(tile.describe(sys)));
                }
                out.insert(Tile {
                    class: tile.class + 1,
                    frame: tile.frame.conjugate_by_scaling(s),
                    vertex: tile.vertex,
                    address: tile.address.clone(),
                });
            }
        }
    }
    out.k = t.k.map(|k| k - 1);
    Ok(out)
}

/// Geometric inflation: large tiles `sEA_v` expand to `E T_0^v`, other tiles grow by `s⁻¹`.
pub fn inflate_tiling(sys: &GraphIfs, t: &Tiling) -> Result<Tiling, RigidityError> {
    let inv = 1.0 / sys.s();
    let mut out = Tiling::new();
    for tile in t.iter() {
        let frame = tile.frame.conjugate_by_scaling(inv);
        if tile.class == 0 {
            out.extend(&canonical_tiling(sys, 0, Some(tile.vertex))?.transformed(&frame));
        } else {
            out.insert(Tile { class: tile.class - 1, frame, vertex: tile.vertex, address: tile.address.clone() });
        }
    }
    out.k = t.k.map(|k| k + 1);
    Ok(out)
}

/// Concrete counterexample to a rigidity condition.
#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    #[serde(serialize_with = "crate::io::serialize_frame")]
    pub e: Similitude,
    pub k: i64,
    pub v: usize,
    pub w: usize,
    /// Canonical level `l` of the second tiling (0 for the base conditions).
    pub level: i64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Verdict {
    PassAtDepth,
    Violated { witness: Witness },
    Unknown { reason: String },
}

impl Verdict {
    pub fn is_violated(&self) -> bool {
        matches!(self, Verdict::Violated { .. })
    }
    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Verdict::Violated { witness } => Some(witness),
            _ => None,
        }
    }
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::PassAtDepth => "pass-at-depth",
            Verdict::Violated { .. } => "violated",
            Verdict::Unknown { .. } => "unknown",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RigidityReport {
    pub a1: Verdict,
    pub a2: Verdict,
    pub a3: Verdict,
    pub depth: usize,
    pub group: Group,
    /// Candidate isometries examined.
    pub candidates: usize,
}

impl RigidityReport {
    pub fn passed(&self) -> bool {
        [&self.a1, &self.a2, &self.a3].iter().all(|v| matches!(v, Verdict::PassAtDepth))
    }
    pub fn verdict(&self) -> &'static str {
        if self.passed() {
            "pass-at-depth"
        } else if [&self.a1, &self.a2, &self.a3].iter().any(|v| v.is_violated()) {
            "violated"
        } else {
            "unknown"
        }
    }
}

fn scaled_base(sys: &GraphIfs, k: i64, v: usize) -> Result<Tiling, TilingError> {
    canonical_tiling(sys, 0, Some(v))?.map_by(sys, &sys.scaling(k))
}

/// Isometries taking some tile of `from` onto a tile of `onto`.
fn alignments(from: &Tiling, onto: &Tiling, filter: &GroupFilter) -> Vec<Similitude> {
    let mut out: Vec<Similitude> = Vec::new();
    for q in from.iter() {
        for p in onto.iter() {
            if p.vertex != q.vertex || p.class != q.class {
                continue;
            }
            let e = (&p.frame * &q.frame.inverse()).with_scale_exponent(Some(0));
            if filter.admits(&e) && !out.iter().any(|f| f.approx_eq(&e, 1e-7)) {
                out.push(e);
            }
        }
    }
    out
}

fn is_identity(e: &Similitude) -> bool {
    e.approx_eq(&Similitude::identity(e.dim()), 1e-7)
}

/// Audit conditions A(i)–A(iii) by tile-anchored search; `depth` extends A(i) to `T_l`, `l ≤ depth`.
pub fn check_rigidity(sys: &GraphIfs, group: Group, depth: usize, geo: &TileRealizer) -> Result<RigidityReport, RigidityError> {
    let filter = GroupFilter::new(sys, group);
    let mut candidates = 0;
    let a1 = audit_meets(sys, &filter, depth, geo, &mut candidates)?;
    let a2 = audit_registration(sys, &filter, geo, false);
    let a3 = audit_registration(sys, &filter, geo, true);
    Ok(RigidityReport { a1, a2, a3, depth, group, candidates })
}

fn audit_meets(
    sys: &GraphIfs,
    filter: &GroupFilter,
    depth: usize,
    geo: &TileRealizer,
    candidates: &mut usize,
) -> Result<Verdict, RigidityError> {
    let nv = sys.vertex_count();
    for v in 0..nv {
        let base = canonical_tiling(sys, 0, Some(v))?;
        for w in 0..nv {
            for k in 0..sys.a_max() as i64 {
                let other = scaled_base(sys, k, w)?;
                for e in alignments(&other, &base, filter) {
                    if k == 0 && v == w && is_identity(&e) {
                        continue;
                    }
                    *candidates += 1;
                    if meets(sys, &base, &other.transformed(&e), geo) {
                        return Ok(Verdict::Violated { witness: Witness { e, k, v, w, level: 0 } });
                    }
                }
            }
        }
    }
    for l in 1..=depth as i64 {
        for v in 0..nv {
            for k in 0..sys.a_max() as i64 {
                let small = scaled_base(sys, k, v)?;
                for w in 0..nv {
                    let big = canonical_tiling(sys, l, Some(w))?;
                    for e in alignments(&big, &small, filter) {
                        *candidates += 1;
                        let placed = big.transformed(&e);
                        if meets(sys, &small, &placed, geo) && !(k == 0 && small.is_subset_of(&placed)) {
                            return Ok(Verdict::Violated { witness: Witness { e, k, v, w, level: l } });
                        }
                    }
                }
            }
        }
    }
    Ok(Verdict::PassAtDepth)
}

/// Orthogonal matrices tried when registering one component onto another.
fn orthogonal_candidates(sys: &GraphIfs, filter: &GroupFilter, a: &Region, b: &Region) -> Vec<Vec<f64>> {
    let d = sys.dim();
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut push = |m: Vec<f64>| {
        if !out.iter().any(|o| o.iter().zip(&m).all(|(x, y)| (x - y).abs() < 1e-7)) {
            out.push(m);
        }
    };
    for m in signed_permutations(d) {
        push(m);
    }
    if let Some(c) = filter.closure() {
        for m in c {
            push(m.clone());
        }
    }
    if let (Some(fa), Some(fb)) = (principal_axes(a), principal_axes(b)) {
        for signs in 0..(1usize << d) {
            let mut m = vec![0.0; d * d];
            for i in 0..d {
                for j in 0..d {
                    m[i * d + j] = (0..d)
                        .map(|c| {
                            let sign = if signs >> c & 1 == 1 { -1.0 } else { 1.0 };
                            sign * fb[i * d + c] * fa[j * d + c]
                        })
                        .sum();
                }
            }
            push(m);
        }
    }
    out
}

fn signed_permutations(d: usize) -> Vec<Vec<f64>> {
    fn perms(d: usize) -> Vec<Vec<usize>> {
        if d == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in perms(d - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, d - 1);
                out.push(q);
            }
        }
        out
    }
    let mut out = Vec::new();
    for p in perms(d) {
        for signs in 0..(1usize << d) {
            let mut m = vec![0.0; d * d];
            for (i, &j) in p.iter().enumerate() {
                m[i * d + j] = if signs >> i & 1 == 1 { -1.0 } else { 1.0 };
            }
            out.push(m);
        }
    }
    out
}

/// Eigenvectors of the sample covariance as matrix columns.
fn principal_axes(r: &Region) -> Option<Vec<f64>> {
    let d = r.dim();
    let c = r.centroid()?;
    let mut cov = nalgebra::DMatrix::<f64>::zeros(d, d);
    for p in r.points() {
        for i in 0..d {
            for j in 0..d {
                cov[(i, j)] += (p[i] - c[i]) * (p[j] - c[j]);
            }
        }
    }
    let eig = nalgebra::SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].partial_cmp(&eig.eigenvalues[x]).unwrap());
    let mut m = vec![0.0; d * d];
    for (col, &src) in order.iter().enumerate() {
        for i in 0..d {
            m[i * d + col] = eig.eigenvectors[(i, src)];
        }
    }
    Some(m)
}

/// Search `A_w = E s^k A_v` by cloud registration (`k = 0` only unless `any_scale`).
fn audit_registration(sys: &GraphIfs, filter: &GroupFilter, geo: &TileRealizer, any_scale: bool) -> Verdict {
    let d = sys.dim();
    let nv = sys.vertex_count();
    let samples: Vec<Region> = (0..nv)
        .map(|v| geo.region(sys, &Tile { class: -1, frame: Similitude::identity(d), vertex: v, address: String::new() }))
        .collect();
    let eps: Vec<f64> = (0..nv)
        .map(|v| geo.eps(sys, &Tile { class: -1, frame: Similitude::identity(d), vertex: v, address: String::new() }))
        .collect();
    let diam: Vec<f64> = samples.iter().map(|r| r.bbox().map_or(0.0, |b| b.diagonal())).collect();
    for v in 0..nv {
        for w in 0..nv {
            let ratio = diam[w] / diam[v];
            let k = (ratio.ln() / sys.s().ln()).round() as i64;
            if k < 0 || (!any_scale && k != 0) || (ratio - sys.s_pow(k)).abs() > 0.05 * sys.s_pow(k) {
                continue;
            }
            let target = PointIndex::new(&samples[w]);
            // Each sample lies within half a resolution of its set and covers it to the same
            // radius, so equal sets register within one resolution.
            let tol = eps[w].max(eps[v] * sys.s_pow(k));
            for o in orthogonal_candidates(sys, filter, &samples[v], &samples[w]) {
                let lin = Similitude::from_parts(&o, sys.s_pow(k), &vec![0.0; d], None).expect("candidate is orthogonal");
                let moved = samples[v].transformed(&lin);
                let (Some(mb), Some(tb)) = (moved.bbox(), samples[w].bbox()) else { continue };
                let shift: Vec<f64> = tb.lo.iter().zip(&mb.lo).map(|(a, b)| a - b).collect();
                let e = Similitude::from_parts(&o, 1.0, &shift, Some(0)).expect("candidate is orthogonal");
                if (k == 0 && v == w && is_identity(&e)) || !filter.admits(&e) {
                    continue;
                }
                let placed = samples[v].transformed(&(&Similitude::translation(&shift) * &lin));
                if directed_hausdorff(&placed, &target) <= tol
                    && directed_hausdorff(&samples[w], &PointIndex::new(&placed)) <= tol
                {
                    return Verdict::Violated { witness: Witness { e, k, v, w, level: 0 } };
                }
            }
        }
    }
    Verdict::PassAtDepth
}

/// Re-run the test that produced an A(i) witness.
pub fn recheck_meets_witness(sys: &GraphIfs, wit: &Witness, geo: &TileRealizer) -> Result<bool, RigidityError> {
    if wit.level == 0 {
        let base = canonical_tiling(sys, 0, Some(wit.v))?;
        let other = scaled_base(sys, wit.k, wit.w)?.transformed(&wit.e);
        Ok(meets(sys, &base, &other, geo))
    } else {
        let small = scaled_base(sys, wit.k, wit.v)?;
        let placed = canonical_tiling(sys, wit.level, Some(wit.w))?.transformed(&wit.e);
        Ok(meets(sys, &small, &placed, geo) && !(wit.k == 0 && small.is_subset_of(&placed)))
    }
}

/// `H(σ) = s^{-k} f_σ` for `σ ∈ Λ_k^{v,w}`, each verified to place `T_0^w` inside `T_k^v`.
pub fn copies_of_t0(sys: &GraphIfs, k: i64, v: usize, w: usize) -> Result<Vec<(Word, Similitude)>, RigidityError> {
    let tk = canonical_tiling(sys, k, Some(v))?;
    let t0 = canonical_tiling(sys, 0, Some(w))?;
    let mut out = Vec::new();
    for sigma in lambda_set(sys, k, v, w) {
        let h = (&sys.scaling(-k) * &sigma.map(sys)).isometric_part();
        if !t0.transformed(&h).is_subset_of(&tk) {
            return Err(RigidityError::CopyNotContained { word: sigma.label(sys) });
        }
        out.push((sigma, h));
    }
    Ok(out)
}

/// Exhaustive count of admitted copies `E T_0^w ⊂ T_k^v`.
pub fn count_copies_geometric(sys: &GraphIfs, k: i64, v: usize, w: usize, filter: &GroupFilter) -> Result<usize, RigidityError> {
    let tk = canonical_tiling(sys, k, Some(v))?;
    let t0 = canonical_tiling(sys, 0, Some(w))?;
    Ok(crate::tiling::find_patch_copies(sys, &tk, &t0, filter, None).len())
}

/// `E = f_{-(θ|p)} (f_{-(ψ|q)})⁻¹` after checking the certificate conditions.
pub fn isometry_from_addresses(
    sys: &GraphIfs,
    theta: &DaggerPath,
    p: usize,
    psi: &DaggerPath,
    q: usize,
) -> Result<Similitude, RigidityError> {
    let (tp, sq) = (theta.truncate(p)?, psi.truncate(q)?);
    let (xa, xb) = (tp.xi(sys), sq.xi(sys));
    if xa != xb {
        return Err(RigidityError::XiMismatch(xa, xb));
    }
    if tp.terminal(sys) != sq.terminal(sys) {
        return Err(RigidityError::VertexMismatch);
    }
    if !theta.shift(sys, p).same_path(&psi.shift(sys, q)) {
        return Err(RigidityError::TailMismatch);
    }
    Ok((&tp.inverse_map(sys) * &sq.inverse_map(sys).inverse()).isometric_part())
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceCertificate {
    pub p: usize,
    pub q: usize,
    #[serde(serialize_with = "crate::io::serialize_frame")]
    pub e: Similitude,
    pub checked_depth: usize,
}

/// Smallest `(p + q, p)` with `S^pθ = S^qψ`, `ξ(θ|p) = ξ(ψ|q)` and an admitted `E`.
pub fn decide_equal(
    sys: &GraphIfs,
    theta: &DaggerPath,
    psi: &DaggerPath,
    filter: &GroupFilter,
    bound: Option<usize>,
) -> Result<Option<EquivalenceCertificate>, RigidityError> {
    if theta.is_finite() || psi.is_finite() {
        return Err(RigidityError::NotPeriodic);
    }
    let bound = bound.unwrap_or(4 * (theta.prefix().len() + theta.cycle().len() + psi.prefix().len() + psi.cycle().len()));
    for total in 0..=2 * bound {
        for p in total.saturating_sub(bound)..=total.min(bound) {
            let q = total - p;
            if let Ok(e) = isometry_from_addresses(sys, theta, p, psi, q) {
                if filter.admits(&e) {
                    return Ok(Some(EquivalenceCertificate { p, q, e, checked_depth: 0 }));
                }
            }
        }
    }
    Ok(None)
}

/// Tile-set check of `Π(θ|k) = E Π(ψ|k')` with `k' = k - p + q`, for `k` from `p` to `depth`.
pub fn verify_certificate(
    sys: &GraphIfs,
    theta: &DaggerPath,
    psi: &DaggerPath,
    cert: &mut EquivalenceCertificate,
    depth: usize,
) -> Result<bool, RigidityError> {
    for k in cert.p..=depth.max(cert.p) {
        let kk = k + cert.q - cert.p;
        let lhs = pi_tiling(sys, &theta.truncate(k)?)?;
        let rhs = pi_tiling(sys, &psi.truncate(kk)?)?.transformed(&cert.e);
        if !lhs.set_eq(&rhs) {
            return Ok(false);
        }
    }
    cert.checked_depth = depth;
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::parse_dagger;
    use crate::system::load_system;

    fn fib() -> GraphIfs {
        load_system(
            r#"{"dimension":1,"s":{"poly":[-1,1,1],"bracket":[0.5,0.7]},"vertices":["A"],"edges":[
            {"id":1,"from":"A","to":"A","a":1,"ortho":[[1]],"translate":[0]},
            {"id":2,"from":"A","to":"A","a":2,"ortho":[[1]],"translate":[0.6180339887498949]}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn canonical_round_trip() {
        let sys = fib();
        let h = CanonicalHandle { frame: Similitude::translation(&[0.3]), k: 2, v: 0 };
        let d = deflate_canonical(&sys, &h).unwrap();
        assert!((d.frame.translate()[0] - 0.3 * sys.s()).abs() < 1e-15);
        let back = inflate_canonical(&sys, &d);
        assert!(back.frame.approx_eq(&h.frame, 1e-12) && back.k == 2);
        let floor = CanonicalHandle { frame: Similitude::identity(1), k: -1, v: 0 };
        assert_eq!(deflate_canonical(&sys, &floor).unwrap_err(), RigidityError::Floor);
    }

    #[test]
    fn fibonacci_certificate() {
        let sys = fib();
        let theta = parse_dagger(&sys, "12(1)", 0).unwrap();
        let psi = parse_dagger(&sys, "21(1)", 0).unwrap();
        let filter = GroupFilter::new(&sys, Group::Translations);
        let mut cert = decide_equal(&sys, &theta, &psi, &filter, None).unwrap().unwrap();
        assert_eq!((cert.p, cert.q), (2, 2));
        assert!(cert.e.approx_eq(&Similitude::translation(&[-1.0]), 1e-9));
        assert!(verify_certificate(&sys, &theta, &psi, &mut cert, 6).unwrap());
        let a = parse_dagger(&sys, "(1)", 0).unwrap();
        let b = parse_dagger(&sys, "(2)", 0).unwrap();
        assert!(decide_equal(&sys, &a, &b, &filter, None).unwrap().is_none());
    }

    #[test]
    fn xi_mismatch_rejected() {
        let sys = fib();
        let a = parse_dagger(&sys, "1(1)", 0).unwrap();
        let b = parse_dagger(&sys, "2(1)", 0).unwrap();
        assert_eq!(isometry_from_addresses(&sys, &a, 1, &b, 1).unwrap_err(), RigidityError::XiMismatch(1, 2));
    }

    #[test]
    fn fibonacci_partners_and_deflation() {
        let sys = fib();
        let filter = GroupFilter::new(&sys, Group::Translations);
        let t2 = canonical_tiling(&sys, 2, None).unwrap();
        let first = t2.sorted_tiles()[0].clone();
        match find_partners(&sys, &first, &t2, &filter).unwrap() {
            Partners::Unique { tiles, .. } => assert_eq!(tiles.len(), 2),
            p => panic!("{p:?}"),
        }
        let d = deflate_tiling(&sys, &t2, &filter, DeflationGuard::Override).unwrap();
        assert!(d.set_eq(&canonical_tiling(&sys, 1, None).unwrap()));
        assert!(inflate_tiling(&sys, &d).unwrap().set_eq(&t2));
    }
}
