#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use proptest::prelude::*;
use tilefab::attractor::cell_cloud_with;
use tilefab::system::load_system_file;
use tilefab::tiling::TileRealizer;
use tilefab::{DaggerPath, GraphIfs};

pub fn system_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../systems").join(format!("{name}.json"))
}

pub fn load(name: &str) -> GraphIfs {
    load_system_file(&system_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Deterministic sample with a guaranteed covering radius.
pub fn realizer(sys: &GraphIfs, points: usize) -> TileRealizer {
    TileRealizer::new(&cell_cloud_with(sys, points), usize::MAX)
}

/// Random finite dagger path of `len` edges ending anywhere.
pub fn random_dagger(sys: &GraphIfs, choices: &[usize]) -> DaggerPath {
    let mut edges = vec![choices[0] % sys.edge_count()];
    for c in &choices[1..] {
        // θ_k⁻ = θ_{k+1}⁺
        let prev = sys.edge(*edges.last().unwrap()).from;
        let next = sys.in_edges(prev);
        edges.push(next[c % next.len()]);
    }
    DaggerPath::finite(sys, &edges, None).expect("adjacent by construction")
}

pub fn dagger_strategy(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0usize..1000, len)
}

/// Every word of length ≤ k+1 filtered by `ξ⁻ ≤ k < ξ`.
pub fn brute_omega(sys: &GraphIfs, k: i64, v: usize) -> BTreeSet<Vec<usize>> {
    let mut out = BTreeSet::new();
    let mut frontier: Vec<(Vec<usize>, usize, i64)> = vec![(vec![], v, 0)];
    for _ in 0..=k + 1 {
        let mut next = Vec::new();
        for (w, end, xi) in frontier {
            for e in 0..sys.edge_count() {
                if sys.edge(e).from != end {
                    continue;
                }
                let nxi = xi + sys.edge(e).a as i64;
                let mut nw = w.clone();
                nw.push(e);
                if xi <= k && k < nxi {
                    out.insert(nw.clone());
                }
                next.push((nw, sys.edge(e).to, nxi));
            }
        }
        frontier = next;
    }
    out
}

/// Every finite dagger path with `ξ ≤ max_xi`, including the empty path at each vertex.
pub fn all_daggers(sys: &GraphIfs, max_xi: i64) -> Vec<DaggerPath> {
    let mut out: Vec<DaggerPath> = (0..sys.vertex_count()).map(DaggerPath::empty).collect();
    let mut frontier: Vec<(Vec<usize>, i64)> = (0..sys.edge_count())
        .map(|e| (vec![e], sys.edge(e).a as i64))
        .filter(|(_, x)| *x <= max_xi)
        .collect();
    while let Some((edges, xi)) = frontier.pop() {
        let prev = sys.edge(*edges.last().unwrap()).from;
        for &e in sys.in_edges(prev) {
            let nxi = xi + sys.edge(e).a as i64;
            if nxi <= max_xi {
                let mut n = edges.clone();
                n.push(e);
                frontier.push((n, nxi));
            }
        }
        out.push(DaggerPath::finite(sys, &edges, None).unwrap());
    }
    out
}
