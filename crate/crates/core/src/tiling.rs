//! Tiles, tile sets, canonical tilings, the tiling map on finite paths and patch search.

use std::collections::HashMap;

use thiserror::Error;

use crate::attractor::AttractorCloud;
use crate::geometry::{BBox, PointIndex, Region, Similitude, DEFAULT_TOL};
use crate::symbolic::{omega, DaggerPath, SymbolicError, Word};
use crate::system::GraphIfs;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TilingError {
    #[error("canonical tilings start at k = -1, got {0}")]
    LevelTooLow(i64),
    #[error("expected a finite path")]
    InfinitePath,
    #[error("Π(θ|{k}) does not contain tile {tile} of Π(θ|{prev})", prev = .k - 1)]
    InclusionFailure { k: usize, tile: String },
    #[error("tile count {got} differs from |Ω| = {expected}")]
    CountMismatch { expected: u128, got: usize },
    #[error("ratio {0} is not a power of s")]
    OffLattice(f64),
    #[error("need k ≥ a_max + l, got k = {k}, l = {l}")]
    DecomposePrecondition { k: i64, l: i64 },
    #[error("self-similarity needs a nonempty cycle")]
    EmptyCycle,
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
}

const KEY_GRID: f64 = 1e-6;

/// The set `E(s^{m+1} A_v)`: frame `E`, scale class `m`, vertex `v`.
///
/// Class 0 tiles are the large ones, copies of `sA_v`.
#[derive(Clone, Debug)]
pub struct Tile {
    pub class: i32,
    pub frame: Similitude,
    pub vertex: usize,
    pub address: String,
}

impl Tile {
    /// Tile from a similitude placing `A_v`; the ratio must be a power of `s`.
    pub fn from_map(sys: &GraphIfs, g: &Similitude, vertex: usize, address: String) -> Result<Tile, TilingError> {
        let class = class_of_ratio(sys, g.ratio())?;
        Ok(Tile { class, frame: g.isometric_part(), vertex, address })
    }

    /// `E ∘ s^{m+1}`
    pub fn map(&self, sys: &GraphIfs) -> Similitude {
        &self.frame * &sys.scaling(self.class as i64 + 1)
    }

    pub fn ratio(&self, sys: &GraphIfs) -> f64 {
        sys.s_pow(self.class as i64 + 1)
    }

    pub fn same_as(&self, other: &Tile, tol: f64) -> bool {
        self.vertex == other.vertex && self.class == other.class && self.frame.approx_eq(&other.frame, tol)
    }

    pub fn transformed(&self, e: &Similitude) -> Tile {
        Tile { class: self.class, frame: e * &self.frame, vertex: self.vertex, address: self.address.clone() }
    }

    pub fn describe(&self, sys: &GraphIfs) -> String {
        format!(
            "(v={}, m={}, q={:?}, address {})",
            sys.vertex_name(self.vertex),
            self.class,
            self.frame.translate(),
            self.address
        )
    }
}

/// `m` with `ratio = s^{m+1}`.
pub fn class_of_ratio(sys: &GraphIfs, ratio: f64) -> Result<i32, TilingError> {
    let e = (ratio.ln() / sys.s().ln()).round();
    let m = e as i32 - 1;
    if (ratio - sys.s_pow(e as i64)).abs() > 1e-9 * ratio {
        return Err(TilingError::OffLattice(ratio));
    }
    Ok(m)
}

/// Coordinates past the first few are left out of the bucket key; the final
/// comparison still checks them.
const KEY_DIMS: usize = 3;

type Key = (usize, i32, [i64; KEY_DIMS]);

/// A deduplicated set of tiles.
#[derive(Clone, Debug, Default)]
pub struct Tiling {
    tiles: Vec<Tile>,
    buckets: HashMap<Key, Vec<usize>>,
    /// Describes how the tiling was produced, e.g. the path label.
    pub theta: Option<String>,
    pub k: Option<i64>,
    /// Isometry taking a canonical tiling to this one, when known.
    pub frame: Option<Similitude>,
}

fn cell_of(t: &Tile) -> ([i64; KEY_DIMS], usize) {
    let mut key = [0; KEY_DIMS];
    let q = t.frame.translate();
    for (c, x) in key.iter_mut().zip(q) {
        *c = (x / KEY_GRID).floor() as i64;
    }
    (key, q.len().min(KEY_DIMS))
}

impl Tiling {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_tiles(tiles: impl IntoIterator<Item = Tile>) -> Self {
        let mut t = Tiling::new();
        for tile in tiles {
            t.insert(tile);
        }
        t
    }

    pub fn len(&self) -> usize {
        self.tiles.len()
    }
    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }
    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }
    pub fn iter(&self) -> std::slice::Iter<'_, Tile> {
        self.tiles.iter()
    }

    pub fn find(&self, tile: &Tile, tol: f64) -> Option<usize> {
        let (base, d) = cell_of(tile);
        for idx in 0..3usize.pow(d as u32) {
            let mut key = base;
            let mut rem = idx;
            for c in key.iter_mut().take(d) {
                *c += (rem % 3) as i64 - 1;
                rem /= 3;
            }
            if let Some(ids) = self.buckets.get(&(tile.vertex, tile.class, key)) {
                if let Some(&i) = ids.iter().find(|&&i| self.tiles[i].same_as(tile, tol)) {
                    return Some(i);
                }
            }
        }
        None
    }

    pub fn contains(&self, tile: &Tile) -> bool {
        self.find(tile, DEFAULT_TOL).is_some()
    }

    /// Insert unless an equal tile is present; returns whether it was new.
    pub fn insert(&mut self, tile: Tile) -> bool {
        if self.contains(&tile) {
            return false;
        }
        let key = (tile.vertex, tile.class, cell_of(&tile).0);
        self.buckets.entry(key).or_default().push(self.tiles.len());
        self.tiles.push(tile);
        true
    }

    pub fn extend(&mut self, other: &Tiling) {
        for t in other.iter() {
            self.insert(t.clone());
        }
    }

    pub fn is_subset_of(&self, other: &Tiling) -> bool {
        self.tiles.iter().all(|t| other.contains(t))
    }

    pub fn set_eq(&self, other: &Tiling) -> bool {
        self.len() == other.len() && self.is_subset_of(other) && other.is_subset_of(self)
    }

    /// First tile of `self` missing from `other`.
    pub fn first_missing(&self, other: &Tiling) -> Option<&Tile> {
        self.tiles.iter().find(|t| !other.contains(t))
    }

    pub fn intersection(&self, other: &Tiling) -> Tiling {
        Tiling::from_tiles(self.tiles.iter().filter(|t| other.contains(t)).cloned())
    }

    pub fn difference(&self, other: &Tiling) -> Tiling {
        Tiling::from_tiles(self.tiles.iter().filter(|t| !other.contains(t)).cloned())
    }

    /// Image under an isometry.
    pub fn transformed(&self, e: &Similitude) -> Tiling {
        let mut t = Tiling::from_tiles(self.tiles.iter().map(|t| t.transformed(e)));
        t.theta = self.theta.clone();
        t.k = self.k;
        t.frame = self.frame.as_ref().map(|f| e * f);
        t
    }

    /// Image under a similitude whose ratio is a power of `s`.
    pub fn map_by(&self, sys: &GraphIfs, g: &Similitude) -> Result<Tiling, TilingError> {
        let mut out = Tiling::new();
        for t in &self.tiles {
            out.insert(Tile::from_map(sys, &(g * &t.map(sys)), t.vertex, t.address.clone())?);
        }
        Ok(out)
    }

    pub fn class_counts(&self) -> Vec<(i32, usize)> {
        let mut m: std::collections::BTreeMap<i32, usize> = Default::default();
        for t in &self.tiles {
            *m.entry(t.class).or_default() += 1;
        }
        m.into_iter().collect()
    }

    /// Tiles ordered by translation then vertex, for stable output.
    pub fn sorted_tiles(&self) -> Vec<&Tile> {
        let mut v: Vec<&Tile> = self.tiles.iter().collect();
        v.sort_by(|a, b| {
            a.frame
                .translate()
                .partial_cmp(b.frame.translate())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.vertex.cmp(&b.vertex))
                .then(a.class.cmp(&b.class))
        });
        v
    }
}

/// `T_k^v = s^{-k} π(Ω_k^v)`, and `T_{-1}^v = {sA_v}`.
pub fn canonical_tiling(sys: &GraphIfs, k: i64, v: Option<usize>) -> Result<Tiling, TilingError> {
    if k < -1 {
        return Err(TilingError::LevelTooLow(k));
    }
    let mut t = Tiling::new();
    if k == -1 {
        for w in 0..sys.vertex_count() {
            if v.is_none_or(|v| v == w) {
                t.insert(Tile { class: 0, frame: Similitude::identity(sys.dim()), vertex: w, address: "∅".into() });
            }
        }
    } else {
        let blow_up = sys.scaling(-k);
        for sigma in omega(sys, k, v) {
            let g = &blow_up * &sigma.map(sys);
            t.insert(Tile {
                class: (sigma.xi() - k - 1) as i32,
                frame: g.isometric_part(),
                vertex: sigma.end(),
                address: sigma.label(sys),
            });
        }
    }
    t.k = Some(k);
    t.frame = Some(Similitude::identity(sys.dim()));
    Ok(t)
}

/// `E_θ = f_{-θ} s^{ξ(θ)}`, the isometry with `Π(θ) = E_θ T_{ξ(θ)}^{θ⁺}`.
pub fn e_theta(sys: &GraphIfs, theta: &DaggerPath) -> Similitude {
    (&theta.inverse_map(sys) * &sys.scaling(theta.xi(sys))).isometric_part()
}

/// `Π(θ) = f_{-θ} π(Ω_{ξ(θ)}^{θ⁺})` for a finite path.
pub fn pi_tiling(sys: &GraphIfs, theta: &DaggerPath) -> Result<Tiling, TilingError> {
    if !theta.is_finite() {
        return Err(TilingError::InfinitePath);
    }
    let k = theta.xi(sys);
    let inv = theta.inverse_map(sys);
    let mut t = Tiling::new();
    for sigma in omega(sys, k, Some(theta.terminal(sys))) {
        let g = &inv * &sigma.map(sys);
        t.insert(Tile {
            class: (sigma.xi() - k - 1) as i32,
            frame: g.isometric_part(),
            vertex: sigma.end(),
            address: sigma.label(sys),
        });
    }
    t.theta = Some(theta.label(sys));
    t.k = Some(k);
    t.frame = Some(e_theta(sys, theta));
    Ok(t)
}

/// `Π(θ|0) ⊂ Π(θ|1) ⊂ … ⊂ Π(θ|K)`, checked as tile-set inclusions.
pub fn prefix_chain(sys: &GraphIfs, theta: &DaggerPath, depth: usize) -> Result<Vec<Tiling>, TilingError> {
    let mut chain: Vec<Tiling> = Vec::with_capacity(depth + 1);
    for k in 0..=depth {
        let t = pi_tiling(sys, &theta.truncate(k)?)?;
        let expected = crate::symbolic::omega_count(sys, theta.xi_upto(sys, k)?, theta.truncate(k)?.terminal(sys));
        if t.len() as u128 != expected {
            return Err(TilingError::CountMismatch { expected, got: t.len() });
        }
        if let Some(prev) = chain.last() {
            if let Some(missing) = prev.first_missing(&t) {
                return Err(TilingError::InclusionFailure { k, tile: missing.describe(sys) });
            }
        }
        chain.push(t);
    }
    Ok(chain)
}

/// Samples realizing tiles as point sets.
#[derive(Clone, Debug)]
pub struct TileRealizer {
    samples: Vec<Region>,
    resolution: Vec<f64>,
    bboxes: Vec<BBox>,
}

impl TileRealizer {
    /// Keep at most `max_points` per vertex; the contact tolerance grows to match.
    pub fn new(cloud: &AttractorCloud, max_points: usize) -> Self {
        let mut samples = Vec::new();
        let mut resolution = Vec::new();
        let mut bboxes = Vec::new();
        for v in 0..cloud.regions().len() {
            let full = cloud.vertex(v);
            let sub = full.subsample(max_points);
            let thin = (full.len() as f64 / sub.len().max(1) as f64).powf(1.0 / cloud.dim() as f64);
            resolution.push(cloud.resolution_of(v) * thin.max(1.0));
            bboxes.push(full.bbox().cloned().unwrap_or_else(|| BBox::point(&vec![0.0; cloud.dim()])));
            samples.push(sub);
        }
        TileRealizer { samples, resolution, bboxes }
    }

    pub fn region(&self, sys: &GraphIfs, t: &Tile) -> Region {
        self.samples[t.vertex].transformed(&t.map(sys))
    }

    /// Contact tolerance for the tile.
    pub fn eps(&self, sys: &GraphIfs, t: &Tile) -> f64 {
        self.resolution[t.vertex] * t.ratio(sys)
    }

    pub fn bbox(&self, sys: &GraphIfs, t: &Tile) -> BBox {
        self.bboxes[t.vertex].transformed(&t.map(sys))
    }

    pub fn support(&self, sys: &GraphIfs, tiling: &Tiling) -> Region {
        let parts: Vec<Region> = tiling.iter().map(|t| self.region(sys, t)).collect();
        Region::merged(&parts.iter().collect::<Vec<_>>())
    }

    pub fn support_bbox(&self, sys: &GraphIfs, tiling: &Tiling) -> Option<BBox> {
        tiling.iter().map(|t| self.bbox(sys, t)).reduce(|a, b| a.union(&b))
    }
}

/// `P` meets `Q`: they share a tile and their supports meet only inside the shared tiles.
pub fn meets(sys: &GraphIfs, p: &Tiling, q: &Tiling, geo: &TileRealizer) -> bool {
    let shared = p.intersection(q);
    if shared.is_empty() {
        return false;
    }
    let p_only = p.difference(q);
    let q_only = q.difference(p);
    if p_only.is_empty() || q_only.is_empty() {
        return true;
    }
    let shared_pts = geo.support(sys, &shared);
    let shared_idx = PointIndex::new(&shared_pts);
    let shared_eps = shared.iter().map(|t| geo.eps(sys, t)).fold(0.0, f64::max);
    let p_boxes: Vec<BBox> = p_only.iter().map(|t| geo.bbox(sys, t)).collect();
    let q_boxes: Vec<BBox> = q_only.iter().map(|t| geo.bbox(sys, t)).collect();
    let mut q_cache: HashMap<usize, (Region, PointIndex)> = HashMap::new();
    let mut p_cache: HashMap<usize, (Region, PointIndex)> = HashMap::new();
    let realize = |t: &Tile| {
        let r = geo.region(sys, t);
        let idx = PointIndex::new(&r);
        (r, idx)
    };
    for (i, a) in p_only.iter().enumerate() {
        for (j, b) in q_only.iter().enumerate() {
            let contact = geo.eps(sys, a).max(geo.eps(sys, b));
            if !p_boxes[i].expanded(contact).intersects(&q_boxes[j]) {
                continue;
            }
            p_cache.entry(i).or_insert_with(|| realize(a));
            q_cache.entry(j).or_insert_with(|| realize(b));
            let (ra, ia) = &p_cache[&i];
            let (rb, ib) = &q_cache[&j];
            let clear = 2.0 * contact + shared_eps;
            let stray = |pts: &Region, other: &PointIndex| {
                pts.points().any(|x| other.any_within(x, contact) && !shared_idx.any_within(x, clear))
            };
            if stray(ra, ib) || stray(rb, ia) {
                return false;
            }
        }
    }
    true
}

/// Blocks `(E_{k,ω}, k - ξ(ω), ω⁺)` for `ω ∈ Ω_l^v` whose images union to `T_k^v`.
pub fn decompose(sys: &GraphIfs, k: i64, v: usize, l: i64) -> Result<Vec<(Similitude, i64, usize)>, TilingError> {
    if l < 0 || k < sys.a_max() as i64 + l {
        return Err(TilingError::DecomposePrecondition { k, l });
    }
    Ok(omega(sys, l, Some(v))
        .into_iter()
        .map(|w| {
            let e = &(&sys.scaling(-k) * &w.map(sys)) * &sys.scaling(k - w.xi());
            (e.isometric_part(), k - w.xi(), w.end())
        })
        .collect())
}

/// Union of the isometric images of canonical tilings.
pub fn assemble(sys: &GraphIfs, blocks: &[(Similitude, i64, usize)]) -> Result<Tiling, TilingError> {
    let mut out = Tiling::new();
    for (e, k, v) in blocks {
        out.extend(&canonical_tiling(sys, *k, Some(*v))?.transformed(e));
    }
    Ok(out)
}

/// Which isometries a search may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Group {
    Translations,
    OrientationPreserving,
    Euclidean,
    IfsGenerated,
}

impl std::str::FromStr for Group {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "translations" => Ok(Group::Translations),
            "orientation-preserving" | "rotations" => Ok(Group::OrientationPreserving),
            "euclidean" => Ok(Group::Euclidean),
            "ifs" | "ifs-generated" => Ok(Group::IfsGenerated),
            _ => Err(format!("unknown group {s:?}")),
        }
    }
}

impl std::fmt::Display for Group {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Group::Translations => "translations",
            Group::OrientationPreserving => "orientation-preserving",
            Group::Euclidean => "euclidean",
            Group::IfsGenerated => "ifs-generated",
        })
    }
}

const CLOSURE_CAP: usize = 256;

/// Membership test for a group, always including isometries whose linear part lies in
/// the closure of the IFS orthogonal parts.
#[derive(Clone, Debug)]
pub struct GroupFilter {
    pub group: Group,
    closure: Option<Vec<Vec<f64>>>,
}

impl GroupFilter {
    pub fn new(sys: &GraphIfs, group: Group) -> Self {
        GroupFilter { group, closure: orthogonal_closure(sys) }
    }

    /// Finite closure of the IFS orthogonal parts, or `None` when it exceeds the cap.
    pub fn closure(&self) -> Option<&[Vec<f64>]> {
        self.closure.as_deref()
    }

    pub fn admits(&self, e: &Similitude) -> bool {
        let o = e.orthogonal();
        let in_closure = match &self.closure {
            Some(c) => c.iter().any(|m| m.iter().zip(&o).all(|(a, b)| (a - b).abs() <= 1e-7)),
            None => true,
        };
        in_closure
            || match self.group {
                Group::Translations => e.is_translation(1e-7),
                Group::OrientationPreserving => e.orientation() > 0.0,
                Group::Euclidean => true,
                Group::IfsGenerated => false,
            }
    }
}

fn orthogonal_closure(sys: &GraphIfs) -> Option<Vec<Vec<f64>>> {
    let d = sys.dim();
    let id = Similitude::identity(d).matrix().to_vec();
    let gens: Vec<Vec<f64>> = sys.edges().iter().map(|e| e.map.orthogonal()).collect();
    let mut elems = vec![id];
    let mut frontier = elems.clone();
    let same = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-7);
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for a in &frontier {
            for g in &gens {
                let mut p = vec![0.0; d * d];
                for i in 0..d {
                    for j in 0..d {
                        p[i * d + j] = (0..d).map(|k| a[i * d + k] * g[k * d + j]).sum();
                    }
                }
                if !elems.iter().any(|e| same(e, &p)) {
                    elems.push(p.clone());
                    next.push(p);
                    if elems.len() > CLOSURE_CAP {
                        return None;
                    }
                }
            }
        }
        frontier = next;
    }
    Some(elems)
}

/// A ball restricting which anchor tiles a patch search may use.
pub struct Window<'a> {
    pub center: Vec<f64>,
    pub radius: f64,
    pub geo: &'a TileRealizer,
}

/// All admitted isometries `E` with `E(patch) ⊂ tiling`, anchored on the first patch tile.
pub fn find_patch_copies(
    sys: &GraphIfs,
    tiling: &Tiling,
    patch: &Tiling,
    filter: &GroupFilter,
    window: Option<&Window<'_>>,
) -> Vec<Similitude> {
    let Some(anchor) = patch.tiles().first() else {
        return Vec::new();
    };
    let anchor_inv = anchor.frame.inverse();
    let mut found: Vec<Similitude> = Vec::new();
    for t in tiling.iter() {
        if t.vertex != anchor.vertex || t.class != anchor.class {
            continue;
        }
        if let Some(w) = window {
            if w.geo.bbox(sys, t).distance_to(&w.center) > w.radius {
                continue;
            }
        }
        let e = (&t.frame * &anchor_inv).with_scale_exponent(Some(0));
        if !filter.admits(&e) || found.iter().any(|f| f.approx_eq(&e, 1e-7)) {
            continue;
        }
        if patch.iter().all(|p| tiling.contains(&p.transformed(&e))) {
            found.push(e);
        }
    }
    found
}

/// `ψ = f_{-α} f_{-β} f_{-α}⁻¹` for `θ = α(β)`.
pub fn self_similarity_map(sys: &GraphIfs, theta: &DaggerPath) -> Result<Similitude, TilingError> {
    if theta.cycle().is_empty() {
        return Err(TilingError::EmptyCycle);
    }
    let alpha = DaggerPath::finite(sys, theta.prefix(), Some(theta.origin()))?;
    let beta = DaggerPath::finite(sys, theta.cycle(), None)?;
    let fa = alpha.inverse_map(sys);
    Ok(&(&fa * &beta.inverse_map(sys)) * &fa.inverse())
}

/// Check that `ψ` maps every tile of `Π(θ|k)` onto a union of tiles of a deeper truncation.
pub fn verify_self_similarity(sys: &GraphIfs, theta: &DaggerPath, k: usize) -> Result<bool, TilingError> {
    let psi = self_similarity_map(sys, theta)?;
    let xi_beta: i64 = theta.cycle().iter().map(|&e| sys.edge(e).a as i64).sum();
    let deep = pi_tiling(sys, &theta.truncate(k + theta.prefix().len() + theta.cycle().len())?)?;
    for t in pi_tiling(sys, &theta.truncate(k)?)?.iter() {
        let g = &psi * &t.map(sys);
        let j = xi_beta - t.class as i64 - 1;
        let pieces: Vec<(Similitude, usize)> = if j < 0 {
            vec![(g, t.vertex)]
        } else {
            omega(sys, j, Some(t.vertex)).into_iter().map(|w| (&g * &w.map(sys), w.end())).collect()
        };
        for (h, v) in pieces {
            if !deep.contains(&Tile::from_map(sys, &h, v, String::new())?) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Tiles of the canonical tiling indexed by word, for callers needing provenance.
pub fn canonical_tile(sys: &GraphIfs, sigma: &Word, k: i64) -> Tile {
    let g = &sys.scaling(-k) * &sigma.map(sys);
    Tile { class: (sigma.xi() - k - 1) as i32, frame: g.isometric_part(), vertex: sigma.end(), address: sigma.label(sys) }
}
