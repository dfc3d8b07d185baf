//! SVG output. Tiles are rasterized by nearest-sample ownership and emitted as
//! row runs, so non-convex and fractal tiles keep their shape.

use std::fmt::Write;

use anyhow::{bail, Result};
use clap::ValueEnum;
use tilefab::attractor::{cell_cloud_with, neighbor_maps, AttractorCloud};
use tilefab::geometry::{BBox, PointIndex, Region};
use tilefab::tiling::{TileRealizer, Tiling};
use tilefab::GraphIfs;

const DEFAULT_PIXELS: f64 = 512.0;
const CLOUD_POINTS: usize = 6000;
const BAR_HEIGHT: usize = 40;
const MAX_DOTS: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Tiles,
    /// Estimated open-set images inside each tile.
    OpenSet,
    Overlay,
}

pub struct RenderSpec {
    lo: [f64; 2],
    hi: [f64; 2],
    /// Pixels per unit.
    scale: f64,
    mode: Mode,
}

impl RenderSpec {
    pub fn new(sys: &GraphIfs, tiling: &Tiling, window: Option<&[f64]>, mode: Mode, resolution: Option<f64>) -> Result<Self> {
        let (lo, hi) = match window {
            Some(w) => {
                if w.len() != 4 || !w.iter().all(|x| x.is_finite()) {
                    bail!("window needs four finite numbers xmin,ymin,xmax,ymax");
                }
                if w[2] <= w[0] || (sys.dim() == 2 && w[3] <= w[1]) {
                    bail!("window is empty or inverted");
                }
                ([w[0], w[1]], [w[2], w[3]])
            }
            None => {
                let geo = TileRealizer::new(&cell_cloud_with(sys, CLOUD_POINTS), usize::MAX);
                let Some(b) = geo.support_bbox(sys, tiling) else { bail!("nothing to render") };
                let b = b.expanded(0.02 * b.diagonal().max(1e-9));
                if sys.dim() == 1 {
                    ([b.lo[0], 0.0], [b.hi[0], 1.0])
                } else {
                    ([b.lo[0], b.lo[1]], [b.hi[0], b.hi[1]])
                }
            }
        };
        let span = (hi[0] - lo[0]).max(if sys.dim() == 2 { hi[1] - lo[1] } else { 0.0 });
        let scale = resolution.unwrap_or(DEFAULT_PIXELS / span);
        if !(scale.is_finite() && scale > 0.0) {
            bail!("bad resolution");
        }
        Ok(RenderSpec { lo, hi, scale, mode })
    }

    fn grid(&self, dim: usize) -> (usize, usize) {
        let nx = (((self.hi[0] - self.lo[0]) * self.scale).ceil() as usize).clamp(1, 4096);
        let ny = if dim == 1 { 1 } else { (((self.hi[1] - self.lo[1]) * self.scale).ceil() as usize).clamp(1, 4096) };
        (nx, ny)
    }

    /// Centre of pixel `(i, j)`, row 0 at the top.
    fn point(&self, dim: usize, i: usize, j: usize, ny: usize) -> Vec<f64> {
        let x = self.lo[0] + (i as f64 + 0.5) / self.scale;
        if dim == 1 {
            vec![x]
        } else {
            vec![x, self.lo[1] + ((ny - 1 - j) as f64 + 0.5) / self.scale]
        }
    }
}

fn color(v: usize, m: i32) -> String {
    let hue = (v as i64 * 97 + m as i64 * 37).rem_euclid(360);
    format!("hsl({hue},55%,{}%)", 55 + (m.rem_euclid(3) * 8))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('"', "&quot;").replace('<', "&lt;")
}

/// Per pixel, the index of the owning tile.
fn ownership(sys: &GraphIfs, tiling: &Tiling, spec: &RenderSpec, geo: &TileRealizer, (nx, ny): (usize, usize)) -> Vec<Option<usize>> {
    let dim = sys.dim();
    let pix = 1.0 / spec.scale;
    let window = BBox { lo: spec.point(dim, 0, ny - 1, ny), hi: spec.point(dim, nx - 1, 0, ny) }.expanded(pix);
    let mut coords = Vec::new();
    let mut owner = Vec::new();
    let mut reach = 0.0f64;
    for (ti, t) in tiling.iter().enumerate() {
        let eps = geo.eps(sys, t);
        if !geo.bbox(sys, t).expanded(eps).intersects(&window) {
            continue;
        }
        let r = geo.region(sys, t);
        coords.extend_from_slice(r.coords());
        owner.extend(std::iter::repeat_n(ti, r.len()));
        reach = reach.max(eps);
    }
    let mut out = vec![None; nx * ny];
    if owner.is_empty() {
        return out;
    }
    let reach = reach.max(0.75 * pix * (dim as f64).sqrt());
    let index = PointIndex::new(&Region::new(dim, coords));
    for j in 0..ny {
        for i in 0..nx {
            let y = spec.point(dim, i, j, ny);
            // empty pixels would otherwise pay for a full nearest search
            if !index.any_within(&y, reach) {
                continue;
            }
            if let Some((k, _)) = index.nearest(&y) {
                out[j * nx + i] = Some(owner[k]);
            }
        }
    }
    out
}

/// Pixels whose pull-back into the owning tile is closer to `A_v` than to the neighbour images.
fn open_set_mask(sys: &GraphIfs, tiling: &Tiling, spec: &RenderSpec, cloud: &AttractorCloud, owners: &[Option<usize>], (nx, ny): (usize, usize)) -> Vec<bool> {
    let nbrs = neighbor_maps(sys, 2);
    let own: Vec<PointIndex> = cloud.regions().iter().map(PointIndex::new).collect();
    let halo: Vec<Option<PointIndex>> = (0..sys.vertex_count())
        .map(|v| {
            let parts: Vec<Region> = nbrs.per_vertex[v].iter().map(|m| cloud.vertex(m.source()).transformed(&m.map)).collect();
            let refs: Vec<&Region> = parts.iter().collect();
            (!refs.is_empty()).then(|| PointIndex::new(&Region::merged(&refs)))
        })
        .collect();
    let inverses: Vec<_> = tiling.iter().map(|t| t.map(sys).inverse()).collect();
    let dim = sys.dim();
    let mut mask = vec![false; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let Some(ti) = owners[j * nx + i] else { continue };
            let v = tiling.tiles()[ti].vertex;
            let y = inverses[ti].apply(&spec.point(dim, i, j, ny));
            let inside = own[v].nearest_distance(&y);
            mask[j * nx + i] = match &halo[v] {
                Some(h) => inside < h.nearest_distance(&y),
                None => true,
            };
        }
    }
    mask
}

fn runs(out: &mut String, keep: impl Fn(usize, usize) -> bool, (nx, ny): (usize, usize), row_h: usize) {
    for j in 0..ny {
        let mut i = 0;
        while i < nx {
            if !keep(i, j) {
                i += 1;
                continue;
            }
            let start = i;
            while i < nx && keep(i, j) {
                i += 1;
            }
            let _ = write!(out, "<rect x=\"{start}\" y=\"{}\" width=\"{}\" height=\"{row_h}\"/>", j * row_h, i - start);
        }
    }
}

pub fn render(sys: &GraphIfs, tiling: &Tiling, spec: &RenderSpec, points: Option<&Region>) -> String {
    let dim = sys.dim();
    let cloud = cell_cloud_with(sys, CLOUD_POINTS);
    let geo = TileRealizer::new(&cloud, usize::MAX);
    let grid @ (nx, ny) = spec.grid(dim);
    let row_h = if dim == 1 { BAR_HEIGHT } else { 1 };
    let owners = ownership(sys, tiling, spec, &geo, grid);
    let mut used: Vec<usize> = owners.iter().flatten().copied().collect();
    used.sort_unstable();
    used.dedup();

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{nx}\" height=\"{h}\" viewBox=\"0 0 {nx} {h}\" shape-rendering=\"crispEdges\">",
        h = ny * row_h
    );
    let _ = writeln!(svg, "<!-- window {:?} .. {:?}, {} px/unit, {} tiles drawn -->", spec.lo, spec.hi, spec.scale, used.len());
    let draw_tiles = spec.mode != Mode::OpenSet;
    let mask = (spec.mode != Mode::Tiles).then(|| open_set_mask(sys, tiling, spec, &cloud, &owners, grid));
    for &ti in &used {
        let t = &tiling.tiles()[ti];
        let (css, opacity) = if draw_tiles { ("tile", 1.0) } else { ("open-set", 0.9) };
        let _ = write!(
            svg,
            "<g class=\"{css}\" data-vertex=\"{}\" data-class=\"{}\" data-address=\"{}\" fill=\"{}\" fill-opacity=\"{opacity}\">",
            escape(sys.vertex_name(t.vertex)),
            t.class,
            escape(&t.address),
            color(t.vertex, t.class)
        );
        match (&mask, draw_tiles) {
            (Some(m), false) => runs(&mut svg, |i, j| owners[j * nx + i] == Some(ti) && m[j * nx + i], grid, row_h),
            _ => runs(&mut svg, |i, j| owners[j * nx + i] == Some(ti), grid, row_h),
        }
        svg.push_str("</g>\n");
    }
    if let (Some(m), true) = (&mask, draw_tiles) {
        svg.push_str("<g class=\"open-set\" fill=\"black\" fill-opacity=\"0.25\">");
        runs(&mut svg, |i, j| m[j * nx + i], grid, row_h);
        svg.push_str("</g>\n");
    }
    if let Some(p) = points {
        svg.push_str("<g class=\"cloud\" fill=\"black\">");
        for x in p.subsample(MAX_DOTS).points() {
            let px = (x[0] - spec.lo[0]) * spec.scale;
            let py = if dim == 1 { 0.5 * row_h as f64 } else { (spec.hi[1] - x[1]) * spec.scale };
            if (0.0..=nx as f64).contains(&px) && (0.0..=(ny * row_h) as f64).contains(&py) {
                let _ = write!(svg, "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"0.6\"/>");
            }
        }
        svg.push_str("</g>\n");
    }
    svg.push_str("</svg>\n");
    svg
}
