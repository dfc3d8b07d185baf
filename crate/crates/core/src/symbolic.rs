//! Words on the graph, dagger paths on the reversed graph, and the address calculus.
//!
//! Edges are 0-based indices internally and 1-based labels in text.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_integer::Integer;
use thiserror::Error;

use crate::geometry::Similitude;
use crate::system::GraphIfs;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymbolicError {
    #[error("unknown edge label {0}")]
    BadEdge(String),
    #[error("edges {0} and {1} are not adjacent")]
    NotAPath(usize, usize),
    #[error("cannot parse address {0:?}: {1}")]
    Parse(String, String),
    #[error("word {word} is not in Ω_{k}")]
    NotInOmega { word: String, k: i64 },
    #[error("not a valid Ω_{k}: {reason}")]
    InvalidOmega { k: i64, reason: String },
    #[error("precondition failed: {0}")]
    Precondition(String),
}

/// A finite path `σ₁σ₂…` in the graph with `σᵢ⁺ = σᵢ₊₁⁻`.
///
/// The empty word carries the vertex it sits at.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    edges: Vec<usize>,
    start: usize,
    end: usize,
    xi: i64,
    xi_minus: i64,
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.edges.cmp(&other.edges).then(self.start.cmp(&other.start))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Word {
    pub fn empty(v: usize) -> Self {
        Word { edges: Vec::new(), start: v, end: v, xi: 0, xi_minus: 0 }
    }

    pub fn single(sys: &GraphIfs, e: usize) -> Self {
        let edge = sys.edge(e);
        Word { edges: vec![e], start: edge.from, end: edge.to, xi: edge.a as i64, xi_minus: 0 }
    }

    pub fn from_edges(sys: &GraphIfs, edges: &[usize]) -> Result<Self, SymbolicError> {
        let Some(&first) = edges.first() else {
            return Err(SymbolicError::Precondition("empty edge list needs a vertex".into()));
        };
        check_edge(sys, first)?;
        let mut w = Word::single(sys, first);
        for &e in &edges[1..] {
            w = w.push(sys, e)?;
        }
        Ok(w)
    }

    pub fn push(&self, sys: &GraphIfs, e: usize) -> Result<Self, SymbolicError> {
        check_edge(sys, e)?;
        let edge = sys.edge(e);
        if edge.from != self.end {
            return Err(SymbolicError::NotAPath(self.edges.last().map_or(0, |&l| l + 1), e + 1));
        }
        let mut edges = self.edges.clone();
        edges.push(e);
        Ok(Word { edges, start: self.start, end: edge.to, xi: self.xi + edge.a as i64, xi_minus: self.xi })
    }

    pub fn concat(&self, sys: &GraphIfs, other: &Word) -> Result<Self, SymbolicError> {
        if other.start != self.end {
            return Err(SymbolicError::Precondition(format!(
                "cannot join {} and {}",
                self.label(sys),
                other.label(sys)
            )));
        }
        let mut w = self.clone();
        for &e in &other.edges {
            w = w.push(sys, e)?;
        }
        Ok(w)
    }

    pub fn edges(&self) -> &[usize] {
        &self.edges
    }
    pub fn len(&self) -> usize {
        self.edges.len()
    }
    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
    /// `σ⁻`
    pub fn start(&self) -> usize {
        self.start
    }
    /// `σ⁺`
    pub fn end(&self) -> usize {
        self.end
    }
    /// Sum of the exponents along the word.
    pub fn xi(&self) -> i64 {
        self.xi
    }
    /// `ξ` of the word without its last letter.
    pub fn xi_minus(&self) -> i64 {
        self.xi_minus
    }
    pub fn first(&self) -> Option<usize> {
        self.edges.first().copied()
    }
    pub fn last(&self) -> Option<usize> {
        self.edges.last().copied()
    }

    /// Straddles level `k`: `ξ⁻ ≤ k < ξ`.
    pub fn straddles(&self, k: i64) -> bool {
        !self.is_empty() && self.xi_minus <= k && k < self.xi
    }

    /// `σ|n`, the first `n` letters.
    pub fn prefix(&self, sys: &GraphIfs, n: usize) -> Word {
        if n == 0 {
            return Word::empty(self.start);
        }
        Word::from_edges(sys, &self.edges[..n.min(self.len())]).expect("prefix of a path is a path")
    }

    /// Drop `k` leading letters; past the end this is the marker at `σ₁⁺`.
    pub fn shift(&self, sys: &GraphIfs, k: usize) -> Word {
        if k == 0 {
            return self.clone();
        }
        if k >= self.len() {
            return match self.first() {
                Some(e) => Word::empty(sys.edge(e).to),
                None => self.clone(),
            };
        }
        Word::from_edges(sys, &self.edges[k..]).expect("suffix of a path is a path")
    }

    /// `f_σ = f_{σ₁} ∘ f_{σ₂} ∘ …`
    pub fn map(&self, sys: &GraphIfs) -> Similitude {
        let mut acc = Similitude::identity(sys.dim());
        for &e in &self.edges {
            acc = &acc * &sys.edge(e).map;
        }
        acc
    }

    pub fn label(&self, sys: &GraphIfs) -> String {
        if self.is_empty() {
            return "∅".into();
        }
        format_edges(sys, &self.edges)
    }
}

fn check_edge(sys: &GraphIfs, e: usize) -> Result<(), SymbolicError> {
    if e < sys.edge_count() {
        Ok(())
    } else {
        Err(SymbolicError::BadEdge((e + 1).to_string()))
    }
}

pub fn format_edges(sys: &GraphIfs, edges: &[usize]) -> String {
    let sep = if sys.compact_labels() { "" } else { "," };
    let mut s = String::new();
    for (i, e) in edges.iter().enumerate() {
        if i > 0 {
            s.push_str(sep);
        }
        write!(s, "{}", e + 1).unwrap();
    }
    s
}

/// An eventually periodic path in the reversed graph: `θₖ⁻ = θₖ₊₁⁺`.
///
/// An empty cycle means a finite path. `origin` is `θ⁻ = θ₁⁺`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DaggerPath {
    origin: usize,
    prefix: Vec<usize>,
    cycle: Vec<usize>,
}

impl DaggerPath {
    pub fn empty(v: usize) -> Self {
        DaggerPath { origin: v, prefix: Vec::new(), cycle: Vec::new() }
    }

    pub fn new(sys: &GraphIfs, prefix: &[usize], cycle: &[usize], origin: Option<usize>) -> Result<Self, SymbolicError> {
        let all: Vec<usize> = prefix.iter().chain(cycle).copied().collect();
        for &e in &all {
            check_edge(sys, e)?;
        }
        for w in all.windows(2) {
            if sys.edge(w[0]).from != sys.edge(w[1]).to {
                return Err(SymbolicError::NotAPath(w[0] + 1, w[1] + 1));
            }
        }
        if let (Some(&l), Some(&f)) = (cycle.last(), cycle.first()) {
            if sys.edge(l).from != sys.edge(f).to {
                return Err(SymbolicError::NotAPath(l + 1, f + 1));
            }
        }
        let origin = match all.first() {
            Some(&e) => sys.edge(e).to,
            None => origin.ok_or_else(|| SymbolicError::Precondition("empty path needs a vertex".into()))?,
        };
        Ok(DaggerPath { origin, prefix: prefix.to_vec(), cycle: cycle.to_vec() })
    }

    pub fn finite(sys: &GraphIfs, edges: &[usize], origin: Option<usize>) -> Result<Self, SymbolicError> {
        Self::new(sys, edges, &[], origin)
    }

    pub fn prefix(&self) -> &[usize] {
        &self.prefix
    }
    pub fn cycle(&self) -> &[usize] {
        &self.cycle
    }
    pub fn is_finite(&self) -> bool {
        self.cycle.is_empty()
    }
    pub fn len(&self) -> Option<usize> {
        self.is_finite().then_some(self.prefix.len())
    }
    pub fn is_empty(&self) -> bool {
        self.prefix.is_empty() && self.cycle.is_empty()
    }
    /// `θ⁻`
    pub fn origin(&self) -> usize {
        self.origin
    }

    /// `θ_{i+1}` (0-based position).
    pub fn edge_at(&self, i: usize) -> Option<usize> {
        if i < self.prefix.len() {
            Some(self.prefix[i])
        } else if self.cycle.is_empty() {
            None
        } else {
            Some(self.cycle[(i - self.prefix.len()) % self.cycle.len()])
        }
    }

    /// The first `k` edges.
    pub fn edges_upto(&self, k: usize) -> Result<Vec<usize>, SymbolicError> {
        (0..k)
            .map(|i| {
                self.edge_at(i)
                    .ok_or_else(|| SymbolicError::Precondition(format!("path has fewer than {k} edges")))
            })
            .collect()
    }

    /// `θ|k`
    pub fn truncate(&self, k: usize) -> Result<DaggerPath, SymbolicError> {
        let edges = self.edges_upto(k)?;
        Ok(DaggerPath { origin: self.origin, prefix: edges, cycle: Vec::new() })
    }

    /// `(θ|k)⁺ = θₖ⁻` for a finite path.
    pub fn terminal(&self, sys: &GraphIfs) -> usize {
        debug_assert!(self.is_finite());
        self.prefix.last().map_or(self.origin, |&e| sys.edge(e).from)
    }

    pub fn xi(&self, sys: &GraphIfs) -> i64 {
        debug_assert!(self.is_finite());
        self.prefix.iter().map(|&e| sys.edge(e).a as i64).sum()
    }

    /// `ξ(θ|k)`
    pub fn xi_upto(&self, sys: &GraphIfs, k: usize) -> Result<i64, SymbolicError> {
        Ok(self.edges_upto(k)?.iter().map(|&e| sys.edge(e).a as i64).sum())
    }

    /// `θₖ…θ₁` read as a word of the graph.
    pub fn reversed_word(&self, sys: &GraphIfs) -> Word {
        debug_assert!(self.is_finite());
        if self.prefix.is_empty() {
            return Word::empty(self.origin);
        }
        let rev: Vec<usize> = self.prefix.iter().rev().copied().collect();
        Word::from_edges(sys, &rev).expect("reversal of a dagger path is a path")
    }

    /// `f_{-θ} = f_{θ₁}⁻¹ ∘ f_{θ₂}⁻¹ ∘ …` for a finite path.
    pub fn inverse_map(&self, sys: &GraphIfs) -> Similitude {
        debug_assert!(self.is_finite());
        let mut acc = Similitude::identity(sys.dim());
        for &e in &self.prefix {
            acc = &acc * &sys.inverse_map(e);
        }
        acc
    }

    /// `S^k θ`
    pub fn shift(&self, sys: &GraphIfs, k: usize) -> DaggerPath {
        if k < self.prefix.len() {
            let prefix = self.prefix[k..].to_vec();
            let origin = sys.edge(prefix[0]).to;
            return DaggerPath { origin, prefix, cycle: self.cycle.clone() };
        }
        if self.cycle.is_empty() {
            return DaggerPath::empty(self.terminal(sys));
        }
        let mut cycle = self.cycle.clone();
        cycle.rotate_left((k - self.prefix.len()) % self.cycle.len());
        DaggerPath { origin: sys.edge(cycle[0]).to, prefix: Vec::new(), cycle }
    }

    /// Shortest representation of the same infinite path.
    pub fn normalized(&self) -> DaggerPath {
        if self.cycle.is_empty() {
            return self.clone();
        }
        let mut cycle = primitive_root(&self.cycle);
        let mut prefix = self.prefix.clone();
        while let (Some(&p), Some(&c)) = (prefix.last(), cycle.last()) {
            if p != c {
                break;
            }
            prefix.pop();
            cycle.rotate_right(1);
        }
        DaggerPath { origin: self.origin, prefix, cycle }
    }

    /// Equality as infinite (or finite) sequences.
    pub fn same_path(&self, other: &DaggerPath) -> bool {
        self.normalized() == other.normalized()
    }

    pub fn label(&self, sys: &GraphIfs) -> String {
        if self.is_empty() {
            return "∅".into();
        }
        let mut s = format_edges(sys, &self.prefix);
        if !self.cycle.is_empty() {
            if !s.is_empty() && !sys.compact_labels() {
                s.push(',');
            }
            s.push('(');
            s.push_str(&format_edges(sys, &self.cycle));
            s.push(')');
        }
        s
    }
}

fn primitive_root(c: &[usize]) -> Vec<usize> {
    let n = c.len();
    for p in 1..=n {
        if n.is_multiple_of(p) && (p..n).all(|i| c[i] == c[i - p]) {
            return c[..p].to_vec();
        }
    }
    c.to_vec()
}

/// Parse an edge list: comma-separated integers, or digit-per-edge when `N ≤ 9`.
pub fn parse_edges(sys: &GraphIfs, text: &str) -> Result<Vec<usize>, SymbolicError> {
    let t = text.trim();
    if t.is_empty() || t == "∅" {
        return Ok(Vec::new());
    }
    let labels: Vec<usize> = if t.contains(',') {
        t.split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|e| SymbolicError::Parse(text.into(), e.to_string())))
            .collect::<Result<_, _>>()?
    } else if sys.compact_labels() {
        t.chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|d| d as usize)
                    .ok_or_else(|| SymbolicError::Parse(text.into(), format!("unexpected {c:?}")))
            })
            .collect::<Result<_, _>>()?
    } else {
        vec![t.parse::<usize>().map_err(|e| SymbolicError::Parse(text.into(), e.to_string()))?]
    };
    labels
        .into_iter()
        .map(|l| {
            if (1..=sys.edge_count()).contains(&l) {
                Ok(l - 1)
            } else {
                Err(SymbolicError::BadEdge(l.to_string()))
            }
        })
        .collect()
}

/// Parse a word; the empty word is placed at `empty_at`.
pub fn parse_word(sys: &GraphIfs, text: &str, empty_at: usize) -> Result<Word, SymbolicError> {
    let edges = parse_edges(sys, text)?;
    if edges.is_empty() {
        return Ok(Word::empty(empty_at));
    }
    Word::from_edges(sys, &edges)
}

/// Parse `prefix(cycle)`; the empty path is placed at `empty_at`.
pub fn parse_dagger(sys: &GraphIfs, text: &str, empty_at: usize) -> Result<DaggerPath, SymbolicError> {
    let t = text.trim();
    let (pre, cyc) = match t.find('(') {
        Some(i) => {
            let rest = &t[i + 1..];
            let close = rest
                .strip_suffix(')')
                .ok_or_else(|| SymbolicError::Parse(text.into(), "cycle must end with ')'".into()))?;
            if close.is_empty() {
                return Err(SymbolicError::Parse(text.into(), "empty cycle".into()));
            }
            (t[..i].trim_end_matches(','), close)
        }
        None => (t, ""),
    };
    let prefix = parse_edges(sys, pre)?;
    let cycle = parse_edges(sys, cyc)?;
    DaggerPath::new(sys, &prefix, &cycle, Some(empty_at))
}

/// `θ.σ`: the tile `f_{-θ} f_σ (A_{σ⁺})`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbsoluteAddress {
    pub theta: DaggerPath,
    pub sigma: Word,
}

impl AbsoluteAddress {
    pub fn label(&self, sys: &GraphIfs) -> String {
        format!("{}.{}", self.theta.label(sys), self.sigma.label(sys))
    }

    /// Similitude placing `A_{σ⁺}` as this tile.
    pub fn map(&self, sys: &GraphIfs) -> Similitude {
        &self.theta.inverse_map(sys) * &self.sigma.map(sys)
    }
}

/// `Ω_k` (or `Ω_k^v`), sorted.
pub fn omega(sys: &GraphIfs, k: i64, v: Option<usize>) -> Vec<Word> {
    assert!(k >= 0, "Ω_k needs k ≥ 0");
    let mut words: Vec<Word> = (0..sys.edge_count())
        .filter(|&e| v.is_none_or(|v| sys.edge(e).from == v))
        .map(|e| Word::single(sys, e))
        .collect();
    for j in 0..k {
        words = split_unchecked(sys, words, j);
    }
    words.sort();
    words
}

fn split_unchecked(sys: &GraphIfs, words: Vec<Word>, k: i64) -> Vec<Word> {
    let mut out = Vec::with_capacity(words.len() * 2);
    for w in words {
        if w.xi() == k + 1 {
            for &e in sys.out_edges(w.end()) {
                out.push(w.push(sys, e).expect("out edge continues the path"));
            }
        } else {
            out.push(w);
        }
    }
    out
}

/// `|Ω_k^v|` without enumerating.
pub fn omega_count(sys: &GraphIfs, k: i64, v: usize) -> u128 {
    let mut memo = BTreeMap::new();
    count_rec(sys, k, v, &mut memo)
}

fn count_rec(sys: &GraphIfs, k: i64, v: usize, memo: &mut BTreeMap<(i64, usize), u128>) -> u128 {
    if let Some(&c) = memo.get(&(k, v)) {
        return c;
    }
    let mut c = 0;
    for &e in sys.out_edges(v) {
        let edge = sys.edge(e);
        let a = edge.a as i64;
        c += if a > k { 1 } else { count_rec(sys, k - a, edge.to, memo) };
    }
    memo.insert((k, v), c);
    c
}

/// Check that `words` is exactly `Ω_k^v` for the set of start vertices it uses.
pub fn validate_omega(sys: &GraphIfs, words: &[Word], k: i64) -> Result<(), SymbolicError> {
    let bad = |reason: String| SymbolicError::InvalidOmega { k, reason };
    if words.is_empty() {
        return Err(bad("empty set".into()));
    }
    let mut starts: Vec<usize> = words.iter().map(|w| w.start()).collect();
    starts.sort_unstable();
    starts.dedup();
    for w in words {
        if !w.straddles(k) {
            return Err(bad(format!("{} does not straddle level {k}", w.label(sys))));
        }
    }
    let mut sorted: Vec<&Word> = words.iter().collect();
    sorted.sort();
    if sorted.windows(2).any(|p| p[0] == p[1]) {
        return Err(bad("repeated word".into()));
    }
    let expected: u128 = starts.iter().map(|&v| omega_count(sys, k, v)).sum();
    if expected != words.len() as u128 {
        return Err(bad(format!("expected {expected} words, got {}", words.len())));
    }
    Ok(())
}

/// `Ω_k → Ω_{k+1}`: words with `ξ = k+1` are replaced by their one-letter extensions.
pub fn split(sys: &GraphIfs, omega_k: &[Word], k: i64) -> Result<Vec<Word>, SymbolicError> {
    validate_omega(sys, omega_k, k)?;
    let mut out = split_unchecked(sys, omega_k.to_vec(), k);
    out.sort();
    Ok(out)
}

/// The unique prefix of `sigma` lying in `Ω_{from_k - 1}`.
pub fn amalgamate(sys: &GraphIfs, sigma: &Word, from_k: i64) -> Result<Word, SymbolicError> {
    if from_k <= 0 {
        return Err(SymbolicError::Precondition("cannot amalgamate below Ω_0".into()));
    }
    if !sigma.straddles(from_k) {
        return Err(SymbolicError::NotInOmega { word: sigma.label(sys), k: from_k });
    }
    let mut xi = 0;
    for (i, &e) in sigma.edges().iter().enumerate() {
        xi += sys.edge(e).a as i64;
        if xi >= from_k {
            return Ok(sigma.prefix(sys, i + 1));
        }
    }
    unreachable!("a straddling word reaches level from_k")
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredecessorBlock {
    pub prefix: Word,
    pub level: i64,
    pub suffixes: Vec<Word>,
}

impl PredecessorBlock {
    pub fn words(&self, sys: &GraphIfs) -> Vec<Word> {
        self.suffixes.iter().map(|s| self.prefix.concat(sys, s).expect("suffix starts at prefix end")).collect()
    }
}

/// Partition of `Ω_k^v` into blocks `ω · Ω_{k-ξ(ω)}^{ω⁺}` for `ω ∈ Ω_l^v`.
pub fn predecessors(sys: &GraphIfs, k: i64, l: i64, v: usize) -> Result<Vec<PredecessorBlock>, SymbolicError> {
    if l < 0 || k < sys.a_max() as i64 + l {
        return Err(SymbolicError::Precondition(format!("need k ≥ a_max + l, got k = {k}, l = {l}")));
    }
    Ok(omega(sys, l, Some(v))
        .into_iter()
        .map(|w| {
            let level = k - w.xi();
            let suffixes = omega(sys, level, Some(w.end()));
            PredecessorBlock { prefix: w, level, suffixes }
        })
        .collect())
}

/// `Λ_k^{v,w}`: words from `v` to `w` with `ξ = k`.
pub fn lambda_set(sys: &GraphIfs, k: i64, v: usize, w: usize) -> Vec<Word> {
    let mut out = Vec::new();
    let mut stack = vec![Word::empty(v)];
    while let Some(cur) = stack.pop() {
        if cur.xi() == k {
            if cur.end() == w {
                out.push(cur);
            }
            continue;
        }
        for &e in sys.out_edges(cur.end()) {
            if cur.xi() + sys.edge(e).a as i64 <= k {
                stack.push(cur.push(sys, e).unwrap());
            }
        }
    }
    out.sort();
    out
}

/// Convert a tile's address relative to `Π(θ)` into its absolute address.
pub fn relative_to_absolute(sys: &GraphIfs, theta: &DaggerPath, omega_w: &Word) -> Result<AbsoluteAddress, SymbolicError> {
    if !theta.is_finite() {
        return Err(SymbolicError::Precondition("relative addresses need a finite path".into()));
    }
    let k = theta.xi(sys);
    if !omega_w.straddles(k) || omega_w.start() != theta.terminal(sys) {
        return Err(SymbolicError::NotInOmega { word: omega_w.label(sys), k });
    }
    let mut t: Vec<usize> = theta.prefix().to_vec();
    let mut s: Vec<usize> = omega_w.edges().to_vec();
    while let (Some(&tl), Some(&sf)) = (t.last(), s.first()) {
        if tl != sf || s.len() == 1 {
            break;
        }
        t.pop();
        s.remove(0);
    }
    let theta = DaggerPath::finite(sys, &t, Some(theta.origin()))?;
    let sigma = Word::from_edges(sys, &s)?;
    Ok(AbsoluteAddress { theta, sigma })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Coprimality {
    Coprime { sigma: Word, omega: Word },
    Unknown { bound: usize },
}

/// Search for two distinct words with common endpoints and coprime `ξ`.
pub fn is_coprime(sys: &GraphIfs, bound: Option<usize>) -> Coprimality {
    let bound = bound.unwrap_or(2 * sys.a_max() as usize * sys.vertex_count()).max(1);
    let mut words: Vec<Word> = Vec::new();
    let mut layer: Vec<Word> = (0..sys.vertex_count()).map(Word::empty).collect();
    for _ in 0..bound {
        let mut next = Vec::new();
        for w in &layer {
            for &e in sys.out_edges(w.end()) {
                next.push(w.push(sys, e).unwrap());
            }
        }
        next.sort();
        for w in &next {
            for u in &words {
                if u.start() == w.start() && u.end() == w.end() && u.xi().gcd(&w.xi()) == 1 {
                    return Coprimality::Coprime { sigma: u.clone(), omega: w.clone() };
                }
            }
            words.push(w.clone());
        }
        layer = next;
    }
    Coprimality::Unknown { bound }
}

#[derive(Clone, Debug)]
pub struct HierarchyLevel {
    /// Isometry placing this canonical tiling inside the top one.
    pub frame: Similitude,
    pub level: i64,
    pub vertex: usize,
}

/// Nested canonical tilings `F₀T₀ ⊂ F₁T_{ξ(σ_last)} ⊂ … ⊂ T_{ξ(σ)}`.
pub fn hierarchy(sys: &GraphIfs, sigma: &Word) -> Vec<HierarchyLevel> {
    let rev: Vec<usize> = sigma.edges().iter().rev().copied().collect();
    let theta = DaggerPath::finite(sys, &rev, Some(sigma.end())).expect("reversed word is a dagger path");
    let e_of = |j: usize| {
        let t = theta.truncate(j).unwrap();
        (&t.inverse_map(sys) * &sys.scaling(t.xi(sys)), t.xi(sys), t.terminal(sys))
    };
    let top = e_of(rev.len()).0.inverse();
    (0..=rev.len())
        .map(|j| {
            let (e, level, vertex) = e_of(j);
            HierarchyLevel { frame: (&top * &e).with_scale_exponent(Some(0)), level, vertex }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::load_system;

    fn fib() -> GraphIfs {
        load_system(
            r#"{"dimension":1,"s":{"poly":[-1,1,1],"bracket":[0.5,0.7]},"vertices":["A"],"edges":[
            {"id":1,"from":"A","to":"A","a":1,"ortho":[[1]],"translate":[0]},
            {"id":2,"from":"A","to":"A","a":2,"ortho":[[1]],"translate":[0.6180339887498949]}]}"#,
        )
        .unwrap()
    }

    fn labels(sys: &GraphIfs, ws: &[Word]) -> Vec<String> {
        ws.iter().map(|w| w.label(sys)).collect()
    }

    #[test]
    fn fibonacci_omegas() {
        let sys = fib();
        assert_eq!(labels(&sys, &omega(&sys, 1, None)), ["11", "12", "2"]);
        assert_eq!(labels(&sys, &omega(&sys, 2, None)), ["111", "112", "12", "21", "22"]);
        assert_eq!(parse_word(&sys, "12", 0).unwrap().xi(), 3);
        assert_eq!(Word::empty(0).xi(), 0);
    }

    #[test]
    fn amalgamation() {
        let sys = fib();
        let w = |t| parse_word(&sys, t, 0).unwrap();
        assert_eq!(amalgamate(&sys, &w("111"), 2).unwrap(), w("11"));
        assert_eq!(amalgamate(&sys, &w("12"), 2).unwrap(), w("12"));
        assert!(amalgamate(&sys, &w("1"), 0).is_err());
    }

    #[test]
    fn split_rejects_incomplete_sets() {
        let sys = fib();
        let mut o = omega(&sys, 1, None);
        o.pop();
        assert!(split(&sys, &o, 1).is_err());
    }

    #[test]
    fn dagger_parse_and_shift() {
        let sys = fib();
        let p = parse_dagger(&sys, "12(2)", 0).unwrap();
        assert_eq!(p.prefix(), &[0, 1]);
        assert_eq!(p.cycle(), &[1]);
        assert_eq!(p.label(&sys), "12(2)");
        assert_eq!(p.shift(&sys, 2).label(&sys), "(2)");
        assert!(p.shift(&sys, 1).same_path(&parse_dagger(&sys, "(2)", 0).unwrap()));
        let w = parse_word(&sys, "2", 0).unwrap();
        assert!(w.shift(&sys, 5).is_empty());
        assert!(parse_dagger(&sys, "1(", 0).is_err());
        assert!(parse_dagger(&sys, "3", 0).is_err());
    }

    #[test]
    fn normalization_absorbs_prefix() {
        let sys = fib();
        let a = parse_dagger(&sys, "1212(12)", 0).unwrap().normalized();
        assert!(a.prefix().is_empty());
        assert_eq!(a.cycle(), &[0, 1]);
        let b = parse_dagger(&sys, "2(1212)", 0).unwrap().normalized();
        assert_eq!(b.label(&sys), "(21)");
    }

    #[test]
    fn coprime_fibonacci() {
        let sys = fib();
        match is_coprime(&sys, None) {
            Coprimality::Coprime { sigma, omega } => {
                assert_eq!((sigma.label(&sys), omega.label(&sys)), ("1".into(), "2".into()))
            }
            c => panic!("{c:?}"),
        }
    }

    #[test]
    fn absolute_address_cancellation() {
        let sys = fib();
        let t = parse_dagger(&sys, "2", 0).unwrap();
        let a = relative_to_absolute(&sys, &t, &parse_word(&sys, "21", 0).unwrap()).unwrap();
        assert_eq!(a.label(&sys), "∅.1");
    }

    #[test]
    fn lambda_sets() {
        let sys = fib();
        assert_eq!(labels(&sys, &lambda_set(&sys, 3, 0, 0)), ["111", "12", "21"]);
        assert_eq!(labels(&sys, &lambda_set(&sys, 1, 0, 0)), ["1"]);
        assert_eq!(lambda_set(&sys, 0, 0, 0), [Word::empty(0)]);
    }
}
