//! Similitude algebra, bounding boxes and sampled point regions.

use std::collections::HashMap;
use std::ops::Mul;

use thiserror::Error;

/// Tolerance used for map comparisons when the caller does not pass one.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("expected {expected} entries, got {got}")]
    BadShape { expected: usize, got: usize },
    #[error("linear part is not a scaled orthogonal matrix (defect {0:.3e})")]
    NotSimilitude(f64),
    #[error("ratio must be positive, got {0}")]
    BadRatio(f64),
}

/// An affine map `x -> ratio * O x + translate` with `O` orthogonal.
///
/// `matrix` holds `ratio * O` in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct Similitude {
    dim: usize,
    matrix: Vec<f64>,
    translate: Vec<f64>,
    ratio: f64,
    scale_exponent: Option<i32>,
}

impl Similitude {
    pub fn identity(dim: usize) -> Self {
        let mut matrix = vec![0.0; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = 1.0;
        }
        Similitude { dim, matrix, translate: vec![0.0; dim], ratio: 1.0, scale_exponent: Some(0) }
    }

    /// Uniform scaling about the origin.
    pub fn scaling(dim: usize, lambda: f64) -> Self {
        let mut f = Self::identity(dim);
        for v in f.matrix.iter_mut() {
            *v *= lambda;
        }
        f.ratio = lambda;
        f.scale_exponent = None;
        f
    }

    /// `x -> s^k x`, tagged with exponent `k`.
    pub fn scale_power(dim: usize, s: f64, k: i32) -> Self {
        let mut f = Self::scaling(dim, s.powi(k));
        f.scale_exponent = Some(k);
        f
    }

    pub fn translation(t: &[f64]) -> Self {
        let mut f = Self::identity(t.len());
        f.translate = t.to_vec();
        f
    }

    /// Build from an orthogonal factor (row-major), a ratio and a translation.
    pub fn from_parts(
        ortho: &[f64],
        ratio: f64,
        translate: &[f64],
        scale_exponent: Option<i32>,
    ) -> Result<Self, GeometryError> {
        let dim = translate.len();
        if ortho.len() != dim * dim {
            return Err(GeometryError::BadShape { expected: dim * dim, got: ortho.len() });
        }
        if !(ratio > 0.0) || !ratio.is_finite() {
            return Err(GeometryError::BadRatio(ratio));
        }
        let defect = orthogonality_defect(ortho, dim);
        if defect > DEFAULT_TOL {
            return Err(GeometryError::NotSimilitude(defect));
        }
        Ok(Similitude {
            dim,
            matrix: ortho.iter().map(|v| v * ratio).collect(),
            translate: translate.to_vec(),
            ratio,
            scale_exponent,
        })
    }

    /// Build from a full linear part; the ratio is recovered from its norm.
    pub fn from_matrix(matrix: &[f64], translate: &[f64]) -> Result<Self, GeometryError> {
        let dim = translate.len();
        if matrix.len() != dim * dim {
            return Err(GeometryError::BadShape { expected: dim * dim, got: matrix.len() });
        }
        let ratio = (matrix.iter().map(|v| v * v).sum::<f64>() / dim as f64).sqrt();
        if !(ratio > 0.0) {
            return Err(GeometryError::BadRatio(ratio));
        }
        let ortho: Vec<f64> = matrix.iter().map(|v| v / ratio).collect();
        let defect = orthogonality_defect(&ortho, dim);
        if defect > DEFAULT_TOL {
            return Err(GeometryError::NotSimilitude(defect));
        }
        Ok(Similitude { dim, matrix: matrix.to_vec(), translate: translate.to_vec(), ratio, scale_exponent: None })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }
    pub fn translate(&self) -> &[f64] {
        &self.translate
    }
    pub fn ratio(&self) -> f64 {
        self.ratio
    }
    pub fn scale_exponent(&self) -> Option<i32> {
        self.scale_exponent
    }

    pub fn with_scale_exponent(mut self, a: Option<i32>) -> Self {
        self.scale_exponent = a;
        self
    }

    /// The orthogonal factor `O`, row-major.
    pub fn orthogonal(&self) -> Vec<f64> {
        self.matrix.iter().map(|v| v / self.ratio).collect()
    }

    pub fn orthogonal_rows(&self) -> Vec<Vec<f64>> {
        self.orthogonal().chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn orthogonality_defect(&self) -> f64 {
        orthogonality_defect(&self.orthogonal(), self.dim)
    }

    /// Sign of the determinant of the orthogonal factor.
    pub fn orientation(&self) -> f64 {
        determinant(&self.orthogonal(), self.dim).signum()
    }

    pub fn is_isometry(&self, tol: f64) -> bool {
        (self.ratio - 1.0).abs() <= tol
    }

    pub fn is_translation(&self, tol: f64) -> bool {
        let id = Self::identity(self.dim);
        self.matrix.iter().zip(&id.matrix).all(|(a, b)| (a - b).abs() <= tol)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.apply_into(x, &mut out);
        out
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            let row = &self.matrix[i * d..(i + 1) * d];
            let mut acc = self.translate[i];
            for j in 0..d {
                acc += row[j] * x[j];
            }
            out[i] = acc;
        }
    }

    /// `self ∘ g`.
    pub fn compose(&self, g: &Similitude) -> Result<Similitude, GeometryError> {
        if self.dim != g.dim {
            return Err(GeometryError::DimensionMismatch(self.dim, g.dim));
        }
        let d = self.dim;
        let mut matrix = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0.0;
                for k in 0..d {
                    acc += self.matrix[i * d + k] * g.matrix[k * d + j];
                }
                matrix[i * d + j] = acc;
            }
        }
        let mut translate = self.translate.clone();
        for i in 0..d {
            for k in 0..d {
                translate[i] += self.matrix[i * d + k] * g.translate[k];
            }
        }
        let scale_exponent = match (self.scale_exponent, g.scale_exponent) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        Ok(Similitude { dim: d, matrix, translate, ratio: self.ratio * g.ratio, scale_exponent })
    }

    pub fn inverse(&self) -> Similitude {
        let d = self.dim;
        let r2 = self.ratio * self.ratio;
        let mut matrix = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                matrix[i * d + j] = self.matrix[j * d + i] / r2;
            }
        }
        let mut translate = vec![0.0; d];
        for i in 0..d {
            for k in 0..d {
                translate[i] -= matrix[i * d + k] * self.translate[k];
            }
        }
        Similitude {
            dim: d,
            matrix,
            translate,
            ratio: 1.0 / self.ratio,
            scale_exponent: self.scale_exponent.map(|a| -a),
        }
    }

    /// `S ∘ self ∘ S⁻¹` for the uniform scaling `S(x) = lambda x`.
    pub fn conjugate_by_scaling(&self, lambda: f64) -> Similitude {
        let mut f = self.clone();
        for t in f.translate.iter_mut() {
            *t *= lambda;
        }
        f
    }

    /// Largest absolute entry difference in matrix and translation.
    pub fn distance(&self, g: &Similitude) -> f64 {
        if self.dim != g.dim {
            return f64::INFINITY;
        }
        self.matrix
            .iter()
            .zip(&g.matrix)
            .chain(self.translate.iter().zip(&g.translate))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, g: &Similitude, tol: f64) -> bool {
        self.distance(g) <= tol
    }

    /// Same map with the linear part replaced by its orthogonal factor.
    pub fn isometric_part(&self) -> Similitude {
        Similitude {
            dim: self.dim,
            matrix: self.orthogonal(),
            translate: self.translate.clone(),
            ratio: 1.0,
            scale_exponent: Some(0),
        }
    }
}

impl Mul for &Similitude {
    type Output = Similitude;

    /// Composition; panics on a dimension mismatch.
    fn mul(self, rhs: &Similitude) -> Similitude {
        self.compose(rhs).expect("composing similitudes of different dimension")
    }
}

fn orthogonality_defect(o: &[f64], d: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let mut acc = 0.0;
            for k in 0..d {
                acc += o[k * d + i] * o[k * d + j];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc - target).abs());
        }
    }
    worst
}

fn determinant(m: &[f64], d: usize) -> f64 {
    nalgebra::DMatrix::from_row_slice(d, d, m).determinant()
}

/// Axis-aligned box.
#[derive(Clone, Debug, PartialEq)]
pub struct BBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BBox {
    pub fn point(x: &[f64]) -> Self {
        BBox { lo: x.to_vec(), hi: x.to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn include(&mut self, x: &[f64]) {
        for i in 0..x.len() {
            self.lo[i] = self.lo[i].min(x[i]);
            self.hi[i] = self.hi[i].max(x[i]);
        }
    }

    pub fn union(&self, other: &BBox) -> BBox {
        let mut b = self.clone();
        b.include(&other.lo);
        b.include(&other.hi);
        b
    }

    pub fn expanded(&self, r: f64) -> BBox {
        BBox { lo: self.lo.iter().map(|v| v - r).collect(), hi: self.hi.iter().map(|v| v + r).collect() }
    }

    pub fn intersects(&self, other: &BBox) -> bool {
        (0..self.dim()).all(|i| self.lo[i] <= other.hi[i] && other.lo[i] <= self.hi[i])
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.dim()).all(|i| self.lo[i] <= x[i] && x[i] <= self.hi[i])
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn diagonal(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }

    /// Distance from `x` to the box (zero inside).
    pub fn distance_to(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim() {
            let d = (self.lo[i] - x[i]).max(0.0).max(x[i] - self.hi[i]);
            acc += d * d;
        }
        acc.sqrt()
    }

    /// Bounding box of the image of this box under `f`, via its corners.
    pub fn transformed(&self, f: &Similitude) -> BBox {
        let d = self.dim();
        let mut out: Option<BBox> = None;
        let mut corner = vec![0.0; d];
        for mask in 0..(1usize << d) {
            for i in 0..d {
                corner[i] = if mask >> i & 1 == 1 { self.hi[i] } else { self.lo[i] };
            }
            let y = f.apply(&corner);
            match out.as_mut() {
                Some(b) => b.include(&y),
                None => out = Some(BBox::point(&y)),
            }
        }
        out.unwrap_or_else(|| BBox { lo: vec![], hi: vec![] })
    }
}

/// A finite point sample standing in for a compact set.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    dim: usize,
    coords: Vec<f64>,
    bbox: Option<BBox>,
}

impl Region {
    pub fn new(dim: usize, coords: Vec<f64>) -> Self {
        assert!(dim > 0 && coords.len().is_multiple_of(dim), "coordinate buffer does not match dimension");
        let mut bbox: Option<BBox> = None;
        for p in coords.chunks(dim) {
            match bbox.as_mut() {
                Some(b) => b.include(p),
                None => bbox = Some(BBox::point(p)),
            }
        }
        Region { dim, coords, bbox }
    }

    pub fn empty(dim: usize) -> Self {
        Region { dim, coords: Vec::new(), bbox: None }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
    pub fn bbox(&self) -> Option<&BBox> {
        self.bbox.as_ref()
    }
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }
    pub fn points(&self) -> std::slice::Chunks<'_, f64> {
        self.coords.chunks(self.dim)
    }

    pub fn transformed(&self, f: &Similitude) -> Region {
        let mut coords = vec![0.0; self.coords.len()];
        for (src, dst) in self.coords.chunks(self.dim).zip(coords.chunks_mut(self.dim)) {
            f.apply_into(src, dst);
        }
        Region::new(self.dim, coords)
    }

    /// Every `len/max`-th point, so at most `max` points survive.
    pub fn subsample(&self, max: usize) -> Region {
        let n = self.len();
        if n <= max || max == 0 {
            return self.clone();
        }
        let mut coords = Vec::with_capacity(max * self.dim);
        for k in 0..max {
            let i = k * n / max;
            coords.extend_from_slice(self.point(i));
        }
        Region::new(self.dim, coords)
    }

    pub fn merged(parts: &[&Region]) -> Region {
        let dim = parts.first().map(|r| r.dim).unwrap_or(1);
        let mut coords = Vec::new();
        for r in parts {
            coords.extend_from_slice(&r.coords);
        }
        Region::new(dim, coords)
    }

    /// Points satisfying a predicate.
    pub fn filter(&self, mut keep: impl FnMut(&[f64]) -> bool) -> Region {
        let mut coords = Vec::new();
        for p in self.points() {
            if keep(p) {
                coords.extend_from_slice(p);
            }
        }
        Region::new(self.dim, coords)
    }

    pub fn centroid(&self) -> Option<Vec<f64>> {
        if self.is_empty() {
            return None;
        }
        let mut c = vec![0.0; self.dim];
        for p in self.points() {
            for i in 0..self.dim {
                c[i] += p[i];
            }
        }
        let n = self.len() as f64;
        Some(c.into_iter().map(|v| v / n).collect())
    }
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Uniform-grid spatial hash over a point sample.
pub struct PointIndex {
    dim: usize,
    cell: f64,
    coords: Vec<f64>,
    bbox: Option<BBox>,
    cells: HashMap<Vec<i64>, Vec<u32>>,
}

impl PointIndex {
    /// Index with a cell size chosen from the point density.
    pub fn new(region: &Region) -> Self {
        let cell = match region.bbox() {
            Some(b) if region.len() > 1 => {
                let extent = b.diagonal().max(1e-12);
                (extent / (region.len() as f64).powf(1.0 / region.dim() as f64)).max(extent * 1e-6)
            }
            _ => 1.0,
        };
        Self::with_cell(region, cell)
    }

    pub fn with_cell(region: &Region, cell: f64) -> Self {
        let mut cells: HashMap<Vec<i64>, Vec<u32>> = HashMap::new();
        for (i, p) in region.points().enumerate() {
            cells.entry(key_of(p, cell)).or_default().push(i as u32);
        }
        PointIndex { dim: region.dim(), cell, coords: region.coords().to_vec(), bbox: region.bbox().cloned(), cells }
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
    pub fn bbox(&self) -> Option<&BBox> {
        self.bbox.as_ref()
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    fn visit_ring(&self, center: &[i64], ring: i64, mut f: impl FnMut(usize)) {
        let d = self.dim;
        let side = 2 * ring + 1;
        let total = (side as usize).pow(d as u32);
        let mut key = vec![0i64; d];
        for idx in 0..total {
            let mut rem = idx;
            let mut on_shell = false;
            for j in 0..d {
                let off = (rem % side as usize) as i64 - ring;
                rem /= side as usize;
                if off.abs() == ring {
                    on_shell = true;
                }
                key[j] = center[j] + off;
            }
            if !on_shell && ring > 0 {
                continue;
            }
            if let Some(ids) = self.cells.get(&key) {
                for &i in ids {
                    f(i as usize);
                }
            }
        }
    }

    /// True when some indexed point lies within `r` of `x`.
    pub fn any_within(&self, x: &[f64], r: f64) -> bool {
        if let Some(b) = &self.bbox {
            if b.distance_to(x) > r {
                return false;
            }
        } else {
            return false;
        }
        let center = key_of(x, self.cell);
        let rings = (r / self.cell).ceil() as i64;
        if rings > 24 {
            return self.brute_nearest(x, None).map(|(_, d)| d <= r).unwrap_or(false);
        }
        let mut found = false;
        for ring in 0..=rings {
            self.visit_ring(&center, ring, |i| {
                if !found && distance(self.point(i), x) <= r {
                    found = true;
                }
            });
            if found {
                return true;
            }
        }
        false
    }

    /// Nearest indexed point and its distance.
    pub fn nearest(&self, x: &[f64]) -> Option<(usize, f64)> {
        self.nearest_impl(x, None)
    }

    /// Nearest indexed point other than `skip`.
    pub fn nearest_excluding(&self, x: &[f64], skip: usize) -> Option<(usize, f64)> {
        self.nearest_impl(x, Some(skip))
    }

    fn nearest_impl(&self, x: &[f64], skip: Option<usize>) -> Option<(usize, f64)> {
        let b = self.bbox.as_ref()?;
        let start_ring = (b.distance_to(x) / self.cell).floor() as i64;
        if start_ring > 24 {
            return self.brute_nearest(x, skip);
        }
        let center = key_of(x, self.cell);
        let mut best: Option<(usize, f64)> = None;
        let max_ring = start_ring + 32;
        for ring in 0..=max_ring {
            self.visit_ring(&center, ring, |i| {
                if Some(i) == skip {
                    return;
                }
                let d = distance(self.point(i), x);
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((i, d));
                }
            });
            if let Some((_, bd)) = best {
                // every unvisited cell is at least `ring * cell` away
                if bd <= ring as f64 * self.cell {
                    return best;
                }
            }
        }
        self.brute_nearest(x, skip)
    }

    fn brute_nearest(&self, x: &[f64], skip: Option<usize>) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.len() {
            if Some(i) == skip {
                continue;
            }
            let d = distance(self.point(i), x);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best
    }

    pub fn nearest_distance(&self, x: &[f64]) -> f64 {
        self.nearest(x).map(|(_, d)| d).unwrap_or(f64::INFINITY)
    }
}

fn key_of(x: &[f64], cell: f64) -> Vec<i64> {
    x.iter().map(|v| (v / cell).floor() as i64).collect()
}

/// Median nearest-neighbour spacing over up to `probes` points.
pub fn nn_spacing(region: &Region, probes: usize) -> f64 {
    if region.len() < 2 {
        return 0.0;
    }
    let index = PointIndex::new(region);
    let n = region.len();
    let m = probes.min(n).max(1);
    let mut d: Vec<f64> = (0..m)
        .map(|k| {
            let i = k * n / m;
            index.nearest_excluding(region.point(i), i).map(|(_, d)| d).unwrap_or(0.0)
        })
        .collect();
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    d[d.len() / 2]
}

/// Largest nearest-neighbour distance over every point.
///
/// For random samples this tracks the widest gaps, which the median misses by a
/// factor of about `ln n`.
pub fn max_nn_spacing(region: &Region) -> f64 {
    if region.len() < 2 {
        return 0.0;
    }
    let index = PointIndex::new(region);
    (0..region.len())
        .map(|i| index.nearest_excluding(region.point(i), i).map_or(0.0, |(_, d)| d))
        .fold(0.0, f64::max)
}

/// Largest distance from a point of `a` to the indexed set.
pub fn directed_hausdorff(a: &Region, b: &PointIndex) -> f64 {
    a.points().map(|p| b.nearest_distance(p)).fold(0.0, f64::max)
}
