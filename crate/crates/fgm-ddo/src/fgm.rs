//! Functional graphical models.
//!
//! An FGM is an undirected graph over input coordinates in which a *missing*
//! edge (i, j) certifies that the function splits additively across i and j
//! given the remaining coordinates — equivalently, that the mixed second
//! partial ∂²f/∂xᵢ∂xⱼ vanishes everywhere. Any function with FGM `G`
//! decomposes as a sum of components over the maximal cliques of `G`, which
//! is what the surrogate models in this crate exploit.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Undirected graph over `d` variable indices. No self-loops; edges are
/// stored as ordered pairs `(i, j)` with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FgmGraph {
    d: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl FgmGraph {
    pub fn new(d: usize) -> Self {
        FgmGraph {
            d,
            edges: BTreeSet::new(),
        }
    }

    pub fn with_edges(d: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = FgmGraph::new(d);
        for &(i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    /// Complete graph on `d` vertices.
    pub fn complete(d: usize) -> Self {
        let mut g = FgmGraph::new(d);
        for i in 0..d {
            for j in (i + 1)..d {
                g.edges.insert((i, j));
            }
        }
        g
    }

    pub fn num_vertices(&self) -> usize {
        self.d
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        if i == j {
            return Err(Error::arg(format!("self-loop at vertex {i}")));
        }
        if i >= self.d || j >= self.d {
            return Err(Error::arg(format!(
                "edge ({i}, {j}) out of range for d = {}",
                self.d
            )));
        }
        self.edges.insert((i.min(j), i.max(j)));
        Ok(())
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        (0..self.d).filter(|&u| self.has_edge(u, v)).collect()
    }

    /// Plain-text serialization: a `d=<n>` header, then one `i j` pair per
    /// line.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("d={}\n", self.d);
        for (i, j) in &self.edges {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty graph text".to_string()))?;
        let d: usize = header
            .strip_prefix("d=")
            .ok_or_else(|| Error::Parse(format!("expected 'd=<n>' header, got {header:?}")))?
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad vertex count in {header:?}")))?;
        let mut g = FgmGraph::new(d);
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |t: Option<&str>| -> Result<usize> {
                t.and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Parse(format!("line {}: bad edge {line:?}", lineno + 2)))
            };
            let i = parse(it.next())?;
            let j = parse(it.next())?;
            g.add_edge(i, j)?;
        }
        Ok(g)
    }
}

/// Normalized graph edit distance: |E₁ Δ E₂| / (d(d−1)/2). Zero means the
/// graphs agree exactly; one means they disagree on every possible edge.
pub fn normalized_ged(a: &FgmGraph, b: &FgmGraph) -> Result<f64> {
    if a.d != b.d {
        return Err(Error::dim("graphs over different vertex sets".to_string()));
    }
    if a.d < 2 {
        return Ok(0.0);
    }
    let sym_diff = a.edges.symmetric_difference(&b.edges).count();
    Ok(sym_diff as f64 / (a.d * (a.d - 1) / 2) as f64)
}

/// Maximal cliques of a graph, each sorted ascending, listed in
/// lexicographic order. Isolated vertices appear as singletons, so the
/// cliques always cover every vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueSet {
    cliques: Vec<Vec<usize>>,
    d: usize,
}

impl CliqueSet {
    /// Builds from explicit cliques (used by benchmarks with known
    /// structure). Sorts members and the clique list; validates coverage.
    pub fn from_cliques(d: usize, cliques: &[Vec<usize>]) -> Result<Self> {
        let mut cs: Vec<Vec<usize>> = cliques
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.sort_unstable();
                c.dedup();
                c
            })
            .collect();
        cs.sort();
        cs.dedup();
        let mut covered = vec![false; d];
        for c in &cs {
            if c.is_empty() {
                return Err(Error::arg("empty clique"));
            }
            for &v in c {
                if v >= d {
                    return Err(Error::arg(format!("clique vertex {v} out of range for d = {d}")));
                }
                covered[v] = true;
            }
        }
        if let Some(v) = covered.iter().position(|&c| !c) {
            return Err(Error::arg(format!("vertex {v} not covered by any clique")));
        }
        Ok(CliqueSet { cliques: cs, d })
    }

    pub fn cliques(&self) -> &[Vec<usize>] {
        &self.cliques
    }

    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn max_clique_size(&self) -> usize {
        self.cliques.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// The union of within-clique vertex pairs, as a graph.
    pub fn pair_union(&self) -> FgmGraph {
        let mut g = FgmGraph::new(self.d);
        for c in &self.cliques {
            for (a, &i) in c.iter().enumerate() {
                for &j in &c[a + 1..] {
                    g.add_edge(i, j).expect("validated indices");
                }
            }
        }
        g
    }
}

/// Dynamic bitset over vertices; enough machinery for Bron–Kerbosch.
#[derive(Clone, PartialEq, Eq)]
struct VertexSet {
    words: Vec<u64>,
}

impl VertexSet {
    fn empty(d: usize) -> Self {
        VertexSet {
            words: vec![0; d.div_ceil(64)],
        }
    }

    fn full(d: usize) -> Self {
        let mut s = VertexSet::empty(d);
        for v in 0..d {
            s.insert(v);
        }
        s
    }

    fn insert(&mut self, v: usize) {
        self.words[v / 64] |= 1 << (v % 64);
    }

    fn remove(&mut self, v: usize) {
        self.words[v / 64] &= !(1 << (v % 64));
    }

    fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn intersect(&self, other: &VertexSet) -> VertexSet {
        VertexSet {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    fn intersection_count(&self, other: &VertexSet) -> u32 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let b = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some(wi * 64 + b)
                }
            })
        })
    }
}

/// Enumerates the maximal cliques of `g` via Bron–Kerbosch with pivoting.
///
/// Returns exactly the maximal cliques in lexicographic order; isolated
/// vertices come back as singletons.
pub fn maximal_cliques(g: &FgmGraph) -> Result<CliqueSet> {
    let d = g.num_vertices();
    if d == 0 {
        return Err(Error::arg("graph must have at least one vertex"));
    }
    let mut adj: Vec<VertexSet> = (0..d).map(|_| VertexSet::empty(d)).collect();
    for (i, j) in g.edges() {
        adj[i].insert(j);
        adj[j].insert(i);
    }
    let mut found: Vec<Vec<usize>> = Vec::new();
    let mut r: Vec<usize> = Vec::new();
    bron_kerbosch(
        &adj,
        &mut r,
        VertexSet::full(d),
        VertexSet::empty(d),
        &mut found,
    );
    found.iter_mut().for_each(|c| c.sort_unstable());
    found.sort();
    Ok(CliqueSet { cliques: found, d })
}

fn bron_kerbosch(
    adj: &[VertexSet],
    r: &mut Vec<usize>,
    p: VertexSet,
    mut x: VertexSet,
    found: &mut Vec<Vec<usize>>,
) {
    if p.is_empty() && x.is_empty() {
        found.push(r.clone());
        return;
    }
    // Pivot: vertex of P ∪ X with the most neighbors in P.
    let pivot = p
        .iter()
        .chain(x.iter())
        .max_by_key(|&u| adj[u].intersection_count(&p))
        .expect("p or x nonempty");
    let mut candidates = p.clone();
    for v in adj[pivot].iter() {
        candidates.remove(v);
    }
    let mut p = p;
    for v in candidates.iter() {
        r.push(v);
        bron_kerbosch(adj, r, p.intersect(&adj[v]), x.intersect(&adj[v]), found);
        r.pop();
        p.remove(v);
        x.insert(v);
    }
}

/// A function expressed as a sum of per-clique components, each reading only
/// its clique's coordinates (the constructive side of the decomposition
/// theorem).
pub struct DecomposedFunction {
    cliques: CliqueSet,
    components: Vec<Box<dyn Fn(&[f64]) -> f64 + Send + Sync>>,
}

impl DecomposedFunction {
    pub fn new(
        cliques: CliqueSet,
        components: Vec<Box<dyn Fn(&[f64]) -> f64 + Send + Sync>>,
    ) -> Result<Self> {
        if cliques.len() != components.len() {
            return Err(Error::dim(format!(
                "{} cliques but {} components",
                cliques.len(),
                components.len()
            )));
        }
        Ok(DecomposedFunction {
            cliques,
            components,
        })
    }

    pub fn cliques(&self) -> &CliqueSet {
        &self.cliques
    }

    pub fn dim(&self) -> usize {
        self.cliques.dim()
    }

    /// Each component evaluated on its coordinate slice of `x`.
    pub fn component_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cliques.dim() {
            return Err(Error::dim(format!(
                "expected input of dimension {}, got {}",
                self.cliques.dim(),
                x.len()
            )));
        }
        let mut buf = Vec::with_capacity(self.cliques.max_clique_size());
        Ok(self
            .components
            .iter()
            .zip(self.cliques.cliques())
            .map(|(f, c)| {
                buf.clear();
                buf.extend(c.iter().map(|&k| x[k]));
                f(&buf)
            })
            .collect())
    }

    /// Σ over cliques of the clique component applied to its slice.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.component_values(x)?.iter().sum())
    }
}

/// Central-difference estimate of the mixed partial ∂²f/∂xᵢ∂xⱼ at `x`.
pub fn mixed_partial<F: Fn(&[f64]) -> f64>(
    f: &F,
    x: &[f64],
    i: usize,
    j: usize,
    h: f64,
) -> f64 {
    let mut p = x.to_vec();
    let eval = |p: &mut Vec<f64>, si: f64, sj: f64| {
        p[i] = x[i] + si * h;
        p[j] = x[j] + sj * h;
        f(p)
    };
    let pp = eval(&mut p, 1.0, 1.0);
    let pm = eval(&mut p, 1.0, -1.0);
    let mp = eval(&mut p, -1.0, 1.0);
    let mm = eval(&mut p, -1.0, -1.0);
    (pp - pm - mp + mm) / (4.0 * h * h)
}

/// Tests whether coordinates `i` and `j` are functionally independent given
/// the rest, by checking that the central-difference mixed partial vanishes
/// at every probe point.
///
/// The tolerance is `1e-4 · max(1, |f(probe)|)`: finite differencing a smooth
/// function at `h = 1e-3` carries O(h²) truncation error, so 1e-4 sits safely
/// above the noise while catching genuine interactions.
pub fn independence_test<F: Fn(&[f64]) -> f64>(
    f: &F,
    i: usize,
    j: usize,
    probes: &[Vec<f64>],
    h: f64,
) -> Result<bool> {
    if i == j {
        return Err(Error::arg("independence test needs distinct indices"));
    }
    if probes.is_empty() {
        return Err(Error::arg("at least one probe point required"));
    }
    if h <= 0.0 {
        return Err(Error::arg("step size must be positive"));
    }
    for probe in probes {
        let center = f(probe);
        if !center.is_finite() {
            return Err(Error::NonFinite(format!(
                "objective at probe {probe:?}"
            )));
        }
        let est = mixed_partial(f, probe, i, j, h);
        if !est.is_finite() {
            return Err(Error::NonFinite(format!(
                "mixed partial at probe {probe:?}"
            )));
        }
        if est.abs() > 1e-4 * center.abs().max(1.0) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Default probe points: 16 standard-normal draws.
pub fn default_probes(d: usize, rng: &mut crate::numkit::Rng) -> Vec<Vec<f64>> {
    (0..16)
        .map(|_| (0..d).map(|_| rng.normal()).collect())
        .collect()
}

/// Recovers a graph from a black-box function by pairwise independence
/// testing: edge (i, j) present iff the test reports dependence.
pub fn recover_graph_from_oracle<F: Fn(&[f64]) -> f64>(
    f: &F,
    d: usize,
    probes: &[Vec<f64>],
    h: f64,
) -> Result<FgmGraph> {
    if d < 2 {
        return Err(Error::arg("graph recovery needs d >= 2"));
    }
    let mut g = FgmGraph::new(d);
    for i in 0..d {
        for j in (i + 1)..d {
            if !independence_test(f, i, j, probes, h)? {
                g.add_edge(i, j)?;
            }
        }
    }
    Ok(g)
}
