//! Bipartite host graphs, factorisations and the structural predicates used
//! to qualify inputs (degree bands, uniformity, density, sparsity).
//!
//! Vertices are numbered globally: `0..n` is the left part `U1` and `n..2n`
//! is the right part `U2`. Edges are stored as `(left, right)` pairs with
//! part-local indices, sorted, so the edge id of a pair is canonical.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching;
use crate::rng::RngSeed;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiGraph {
    n: usize,
    edges: Vec<(u32, u32)>,
    /// `adj[v]` holds `(neighbour, edge id)` with global vertex ids.
    adj: Vec<Vec<(u32, u32)>>,
}

impl BiGraph {
    pub fn new(n: usize, mut edges: Vec<(u32, u32)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("part size must be positive".into()));
        }
        if let Some(&(u, v)) = edges.iter().find(|&&(u, v)| u as usize >= n || v as usize >= n) {
            return Err(Error::InvalidGraph(format!("edge ({u},{v}) out of range for n={n}")));
        }
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!("duplicate edge ({},{})", w[0].0, w[0].1)));
        }
        let mut adj = vec![Vec::new(); 2 * n];
        for (id, &(u, v)) in edges.iter().enumerate() {
            adj[u as usize].push((n as u32 + v, id as u32));
            adj[n + v as usize].push((u, id as u32));
        }
        Ok(BiGraph { n, edges, adj })
    }

    pub fn empty(n: usize) -> Self {
        BiGraph::new(n, Vec::new()).expect("positive n")
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n as u32).flat_map(|u| (0..n as u32).map(move |v| (u, v))).collect();
        BiGraph::new(n, edges).expect("positive n")
    }

    /// Part size.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_vertices(&self) -> usize {
        2 * self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Global endpoints `(left, right)` of an edge.
    pub fn endpoints(&self, e: usize) -> (usize, usize) {
        let (u, v) = self.edges[e];
        (u as usize, self.n + v as usize)
    }

    pub fn incident(&self, v: usize) -> &[(u32, u32)] {
        &self.adj[v]
    }

    pub fn neighbours(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[v].iter().map(|&(w, _)| w as usize)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).min().unwrap_or(0)
    }

    /// The common degree if the graph is regular.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.adj[0].len();
        self.adj.iter().all(|a| a.len() == d).then_some(d)
    }

    pub fn is_left(&self, v: usize) -> bool {
        v < self.n
    }

    /// Edge id of the pair with part-local indices.
    pub fn edge_id(&self, left: usize, right: usize) -> Option<usize> {
        self.edges.binary_search(&(left as u32, right as u32)).ok()
    }

    pub fn has_edge(&self, left: usize, right: usize) -> bool {
        self.edge_id(left, right).is_some()
    }

    /// Spanning subgraph on the given edge ids.
    pub fn subgraph(&self, ids: impl IntoIterator<Item = usize>) -> BiGraph {
        let edges = ids.into_iter().map(|e| self.edges[e]).collect();
        BiGraph::new(self.n, edges).expect("edge ids of a valid graph")
    }

    pub fn union(&self, other: &BiGraph) -> Result<BiGraph> {
        if self.n != other.n {
            return Err(Error::InvalidGraph("part sizes differ".into()));
        }
        let mut edges = self.edges.clone();
        edges.extend_from_slice(&other.edges);
        BiGraph::new(self.n, edges)
    }

    pub fn difference(&self, other: &BiGraph) -> BiGraph {
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|&(u, v)| !other.has_edge(u as usize, v as usize))
            .collect();
        BiGraph::new(self.n, edges).expect("subset of a valid graph")
    }

    pub fn contains(&self, other: &BiGraph) -> bool {
        self.n == other.n && other.edges.iter().all(|&(u, v)| self.has_edge(u as usize, v as usize))
    }

    pub fn is_edge_disjoint(&self, other: &BiGraph) -> bool {
        other.edges.iter().all(|&(u, v)| !self.has_edge(u as usize, v as usize))
    }

    /// Bipartite complement inside `K_{n,n}`.
    pub fn complement(&self) -> BiGraph {
        let n = self.n as u32;
        let edges = (0..n)
            .flat_map(|u| (0..n).map(move |v| (u, v)))
            .filter(|&(u, v)| !self.has_edge(u as usize, v as usize))
            .collect();
        BiGraph::new(self.n, edges).expect("complement of a valid graph")
    }

    /// Right-part neighbourhood of each left vertex as a bitmask (n <= 64).
    fn left_masks(&self) -> Vec<u64> {
        debug_assert!(self.n <= 64);
        let mut masks = vec![0u64; self.n];
        for &(u, v) in &self.edges {
            masks[u as usize] |= 1 << v;
        }
        masks
    }

    /// Vertex order from repeated minimum-degree deletion in `H[vertices]`,
    /// reversed so that the first vertex deleted comes last.
    pub fn degeneracy_order(&self, vertices: &[usize]) -> Vec<usize> {
        let mut local = vec![usize::MAX; self.num_vertices()];
        for (i, &v) in vertices.iter().enumerate() {
            local[v] = i;
        }
        let adj: Vec<Vec<usize>> = vertices
            .iter()
            .map(|&v| {
                self.neighbours(v)
                    .filter(|&w| local[w] != usize::MAX)
                    .map(|w| local[w])
                    .collect()
            })
            .collect();
        degeneracy_order(&adj, vertices)
    }
}

/// Degeneracy order of a small graph given by local adjacency lists.
///
/// `labels[i]` is the global index of local vertex `i`; ties between
/// minimum-degree vertices go to the smallest label. Returns labels, with
/// the first deleted vertex last.
pub fn degeneracy_order(adj: &[Vec<usize>], labels: &[usize]) -> Vec<usize> {
    let k = adj.len();
    let mut deg: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut alive = vec![true; k];
    let mut heap: BTreeSet<(usize, usize, usize)> = (0..k).map(|i| (deg[i], labels[i], i)).collect();
    let mut deleted = Vec::with_capacity(k);
    while let Some(&top) = heap.iter().next() {
        heap.remove(&top);
        let (_, label, i) = top;
        alive[i] = false;
        deleted.push(label);
        for &j in &adj[i] {
            if alive[j] {
                heap.remove(&(deg[j], labels[j], j));
                deg[j] -= 1;
                heap.insert((deg[j], labels[j], j));
            }
        }
    }
    deleted.reverse();
    deleted
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorisation {
    host: BiGraph,
    m: usize,
    colour_of: Vec<u32>,
}

impl Factorisation {
    pub fn new(host: BiGraph, m: usize, colour_of: Vec<u32>) -> Result<Self> {
        if colour_of.len() != host.num_edges() {
            return Err(Error::InvalidGraph(format!(
                "colour map covers {} edges, host has {}",
                colour_of.len(),
                host.num_edges()
            )));
        }
        if let Some(&c) = colour_of.iter().find(|&&c| c as usize >= m) {
            return Err(Error::InvalidGraph(format!("colour {c} outside [0,{m})")));
        }
        Ok(Factorisation { host, m, colour_of })
    }

    /// Assembles a factorisation from edge-disjoint classes covering a host.
    pub fn from_classes(host: BiGraph, classes: &[BiGraph]) -> Result<Self> {
        let mut colour_of = vec![u32::MAX; host.num_edges()];
        for (c, class) in classes.iter().enumerate() {
            for &(u, v) in class.edges() {
                let e = host
                    .edge_id(u as usize, v as usize)
                    .ok_or_else(|| Error::InvalidGraph(format!("class {c} edge ({u},{v}) not in host")))?;
                if colour_of[e] != u32::MAX {
                    return Err(Error::InvalidGraph(format!("edge ({u},{v}) in two classes")));
                }
                colour_of[e] = c as u32;
            }
        }
        if colour_of.contains(&u32::MAX) {
            return Err(Error::InvalidGraph("classes do not cover the host".into()));
        }
        Factorisation::new(host, classes.len(), colour_of)
    }

    pub fn host(&self) -> &BiGraph {
        &self.host
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn colour_of(&self) -> &[u32] {
        &self.colour_of
    }

    pub fn class(&self, c: usize) -> BiGraph {
        self.host.subgraph((0..self.colour_of.len()).filter(|&e| self.colour_of[e] as usize == c))
    }

    pub fn classes(&self) -> Vec<BiGraph> {
        let mut ids = vec![Vec::new(); self.m];
        for (e, &c) in self.colour_of.iter().enumerate() {
            ids[c as usize].push(e);
        }
        ids.into_iter().map(|ids| self.host.subgraph(ids)).collect()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.m];
        for &c in &self.colour_of {
            sizes[c as usize] += 1;
        }
        sizes
    }

    /// Degree of every vertex in every class, indexed `[v * m + c]`.
    pub fn class_degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.host.num_vertices() * self.m];
        for (e, &c) in self.colour_of.iter().enumerate() {
            let (u, v) = self.host.endpoints(e);
            deg[u * self.m + c as usize] += 1;
            deg[v * self.m + c as usize] += 1;
        }
        deg
    }

    /// True when every class degree lies in `band`.
    pub fn is_banded(&self, band: DegreeBand) -> bool {
        self.class_degrees().iter().all(|&d| band.contains(d as f64))
    }
}

/// The interval `[(1 - tol) centre, (1 + tol) centre]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeBand {
    pub centre: f64,
    pub tol: f64,
}

impl DegreeBand {
    pub fn new(centre: f64, tol: f64) -> Self {
        assert!(tol >= 0.0, "negative tolerance");
        DegreeBand { centre, tol }
    }

    pub fn exact(d: usize) -> Self {
        DegreeBand { centre: d as f64, tol: 0.0 }
    }

    pub fn lo(&self) -> f64 {
        self.centre - self.tol * self.centre
    }

    pub fn hi(&self) -> f64 {
        self.centre + self.tol * self.centre
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo() <= x && x <= self.hi()
    }
}

pub fn is_d_regular(h: &BiGraph, band: DegreeBand) -> bool {
    h.adj.iter().all(|a| band.contains(a.len() as f64))
}

/// How a subset-quantified verdict was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMode {
    /// Every qualifying subset was examined.
    Exhaustive,
    /// Holds for all subsets by a counting bound.
    Bound,
    /// Randomized or heuristic search; a `true` verdict is not a proof.
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetCheck {
    pub holds: bool,
    pub mode: CheckMode,
}

impl SubsetCheck {
    /// A violation witness was found, or the search was complete.
    pub fn certified(&self) -> bool {
        !self.holds || self.mode != CheckMode::Sampled
    }

    fn and(self, other: SubsetCheck) -> SubsetCheck {
        let mode = match (self.mode, other.mode) {
            (CheckMode::Sampled, _) | (_, CheckMode::Sampled) => CheckMode::Sampled,
            (CheckMode::Exhaustive, _) | (_, CheckMode::Exhaustive) => CheckMode::Exhaustive,
            _ => CheckMode::Bound,
        };
        SubsetCheck { holds: self.holds && other.holds, mode }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    /// Largest part size checked exhaustively.
    pub subset_cap: usize,
    /// Random subsets drawn per side in sampled mode.
    pub samples: usize,
    pub seed: RngSeed,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { subset_cap: 12, samples: 2000, seed: RngSeed::new(0x5eed) }
    }
}

/// Tests `lo(|V1|,|V2|) <= |H[V1,V2]| <= hi(..)` over all `|Vi| >= min_size`.
///
/// For a fixed `V1` the extreme values of `|H[V1,V2]|` over `|V2| = k` are
/// the sums of the `k` smallest / largest `V1`-degrees on the right, so
/// enumerating one side suffices for an exact answer.
fn pair_density_check(
    h: &BiGraph,
    min_size: f64,
    lower: impl Fn(usize, usize) -> f64,
    upper: impl Fn(usize, usize) -> f64,
    cfg: &CheckConfig,
) -> SubsetCheck {
    let n = h.n();
    let kmin = min_size.max(0.0).ceil() as usize;
    if kmin > n {
        return SubsetCheck { holds: true, mode: CheckMode::Bound };
    }
    let ok_for = |side_deg: &mut Vec<u32>, s1: usize| -> bool {
        side_deg.sort_unstable();
        let mut lo_sum = 0u64;
        let mut hi_sum = 0u64;
        for k in 1..=n {
            lo_sum += side_deg[k - 1] as u64;
            hi_sum += side_deg[n - k] as u64;
            if k < kmin {
                continue;
            }
            if (lo_sum as f64) < lower(s1, k) || (hi_sum as f64) > upper(s1, k) {
                return false;
            }
        }
        true
    };
    if n <= cfg.subset_cap.min(24) {
        let mut deg = vec![0u32; n];
        for mask in 0u32..(1u32 << n) {
            let s1 = mask.count_ones() as usize;
            if s1 < kmin || s1 == 0 {
                continue;
            }
            deg.iter_mut().for_each(|d| *d = 0);
            for u in (0..n).filter(|&u| mask >> u & 1 == 1) {
                for w in h.neighbours(u) {
                    deg[w - n] += 1;
                }
            }
            if !ok_for(&mut deg, s1) {
                return SubsetCheck { holds: false, mode: CheckMode::Exhaustive };
            }
        }
        return SubsetCheck { holds: true, mode: CheckMode::Exhaustive };
    }
    let mut rng = cfg.seed.rng();
    let mut order: Vec<usize> = (0..n).collect();
    let mut deg = vec![0u32; n];
    for t in 0..cfg.samples {
        let from_left = t % 2 == 0;
        let s1 = if t < 2 { n } else { rng.gen_range(kmin.max(1)..=n) };
        order.shuffle(&mut rng);
        deg.iter_mut().for_each(|d| *d = 0);
        for &x in &order[..s1] {
            let x = if from_left { x } else { x + n };
            for w in h.neighbours(x) {
                deg[if from_left { w - n } else { w }] += 1;
            }
        }
        if !ok_for(&mut deg, s1) {
            return SubsetCheck { holds: false, mode: CheckMode::Sampled };
        }
    }
    SubsetCheck { holds: true, mode: CheckMode::Sampled }
}

/// `(δ, p)`-uniformity: every `|Vi| >= δn` pair carries `(1 ± δ)p|V1||V2|` edges.
pub fn is_uniform(h: &BiGraph, delta: f64, p: f64, cfg: &CheckConfig) -> SubsetCheck {
    let n = h.n() as f64;
    pair_density_check(
        h,
        delta * n,
        |a, b| (1.0 - delta) * p * (a * b) as f64,
        |a, b| (1.0 + delta) * p * (a * b) as f64,
        cfg,
    )
}

/// `(δ, δ', p)`-density: every `|Vi| >= δ'n` pair carries at least `(1 - δ)p|V1||V2|` edges.
pub fn is_dense(h: &BiGraph, delta: f64, delta_prime: f64, p: f64, cfg: &CheckConfig) -> SubsetCheck {
    let n = h.n() as f64;
    pair_density_check(
        h,
        delta_prime * n,
        |a, b| (1.0 - delta) * p * (a * b) as f64,
        |_, _| f64::INFINITY,
        cfg,
    )
}

/// `(α, β)`-sparsity: every `V` with `|V| <= αn` spans at most `|V|βn` edges.
pub fn is_sparse(h: &BiGraph, alpha: f64, beta: f64, cfg: &CheckConfig) -> SubsetCheck {
    let n = h.n();
    let max_size = (alpha * n as f64).floor().min(2.0 * n as f64) as usize;
    let limit = |s: usize| s as f64 * beta * n as f64;
    // A bipartite graph on s vertices has at most s^2/4 edges.
    if max_size as f64 / 4.0 <= beta * n as f64 {
        return SubsetCheck { holds: true, mode: CheckMode::Bound };
    }
    if n <= cfg.subset_cap.min(12) {
        return sparse_exhaustive(h, max_size, limit);
    }
    // Any violating V has average degree > 2βn in H[V], hence a subgraph of
    // minimum degree > βn, which lives inside the (⌊βn⌋+1)-core.
    let k = (beta * n as f64).floor() as usize + 1;
    let peel = peeling_sequence(h, &(0..h.num_vertices()).collect::<Vec<_>>());
    let core_empty = peel.iter().all(|step| step.degree < k);
    if core_empty {
        return SubsetCheck { holds: true, mode: CheckMode::Bound };
    }
    // Falsifier: every suffix of the peeling sequence is a dense candidate.
    let mut edges_left = h.num_edges();
    let total = peel.len();
    for (i, step) in peel.iter().enumerate() {
        let size = total - i;
        if size <= max_size && edges_left as f64 > limit(size) {
            return SubsetCheck { holds: false, mode: CheckMode::Sampled };
        }
        edges_left -= step.degree;
    }
    SubsetCheck { holds: true, mode: CheckMode::Sampled }
}

fn sparse_exhaustive(h: &BiGraph, max_size: usize, limit: impl Fn(usize) -> f64) -> SubsetCheck {
    let n = h.n();
    let nv = 2 * n;
    let masks = h.left_masks();
    // Gray-code walk over all subsets of the 2n vertices, tracking |H[V]|.
    let mut current: u64 = 0;
    let mut edges: i64 = 0;
    let right_of = |s: u64| (s >> n) & ((1u64 << n) - 1);
    let mut right_masks = vec![0u64; n];
    for (u, &m) in masks.iter().enumerate() {
        for v in 0..n {
            if m >> v & 1 == 1 {
                right_masks[v] |= 1 << u;
            }
        }
    }
    for i in 1u64..(1u64 << nv) {
        let bit = i.trailing_zeros() as usize;
        let deg = if bit < n {
            (masks[bit] & right_of(current)).count_ones() as i64
        } else {
            (right_masks[bit - n] & current & ((1u64 << n) - 1)).count_ones() as i64
        };
        current ^= 1 << bit;
        if current >> bit & 1 == 1 {
            edges += deg;
        } else {
            edges -= deg;
        }
        let size = current.count_ones() as usize;
        if size <= max_size && edges as f64 > limit(size) {
            return SubsetCheck { holds: false, mode: CheckMode::Exhaustive };
        }
    }
    SubsetCheck { holds: true, mode: CheckMode::Exhaustive }
}

struct PeelStep {
    /// Degree of the deleted vertex at the time of deletion.
    degree: usize,
}

fn peeling_sequence(h: &BiGraph, vertices: &[usize]) -> Vec<PeelStep> {
    let order = h.degeneracy_order(vertices);
    let mut alive = vec![false; h.num_vertices()];
    vertices.iter().for_each(|&v| alive[v] = true);
    order
        .iter()
        .rev()
        .map(|&v| {
            alive[v] = false;
            PeelStep { degree: h.neighbours(v).filter(|&w| alive[w]).count() }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasirandomReport {
    pub regular: bool,
    pub sparse: SubsetCheck,
    pub dense: SubsetCheck,
}

impl QuasirandomReport {
    pub fn holds(&self) -> bool {
        self.regular && self.sparse.holds && self.dense.holds
    }

    pub fn certified(&self) -> bool {
        !self.regular || self.sparse.and(self.dense).certified()
    }
}

/// `(δ, δ', η, p)`-quasirandomness: `(1 ± δ)pn`-regular, `(3δ', ηp)`-sparse
/// and `(δ, δ', p)`-dense.
pub fn is_quasirandom(
    h: &BiGraph,
    delta: f64,
    delta_prime: f64,
    eta: f64,
    p: f64,
    cfg: &CheckConfig,
) -> QuasirandomReport {
    let regular = is_d_regular(h, DegreeBand::new(p * h.n() as f64, delta));
    QuasirandomReport {
        regular,
        sparse: is_sparse(h, 3.0 * delta_prime, eta * p, cfg),
        dense: is_dense(h, delta, delta_prime, p, cfg),
    }
}

/// Searches for disjoint `S, T` with `|T| = 20|S| < √n` where every `t ∈ T`
/// is adjacent to a pair of `S`, all pairs distinct. `holds` means no such
/// configuration was found.
pub fn check_sparse2(h: &BiGraph, cap: usize, cfg: &CheckConfig) -> SubsetCheck {
    let n = h.n();
    let sqrt_n = (n as f64).sqrt();
    let mut mode = CheckMode::Bound;
    let mut rng = cfg.seed.with_stream(2).rng();
    for k in 2..=cap {
        if (20 * k) as f64 >= sqrt_n {
            break;
        }
        // 20k distinct pairs need k(k-1)/2 >= 20k.
        if k * (k - 1) / 2 < 20 * k {
            continue;
        }
        let total = binomial(2 * n, k);
        if total <= 200_000.0 {
            mode = CheckMode::Exhaustive;
            let mut found = false;
            for_each_subset(2 * n, k, |s| {
                if !found && has_pair_structure(h, s) {
                    found = true;
                }
            });
            if found {
                return SubsetCheck { holds: false, mode };
            }
        } else {
            mode = CheckMode::Sampled;
            for _ in 0..cfg.samples {
                // Candidates: neighbours of a random vertex's neighbours.
                let x = rng.gen_range(0..2 * n);
                let mut pool: Vec<usize> = h.neighbours(x).flat_map(|w| h.neighbours(w)).collect();
                pool.sort_unstable();
                pool.dedup();
                if pool.len() < k {
                    continue;
                }
                pool.shuffle(&mut rng);
                pool.truncate(k);
                if has_pair_structure(h, &pool) {
                    return SubsetCheck { holds: false, mode };
                }
            }
        }
    }
    SubsetCheck { holds: true, mode }
}

fn has_pair_structure(h: &BiGraph, s: &[usize]) -> bool {
    let k = s.len();
    let mut in_s = vec![usize::MAX; h.num_vertices()];
    for (i, &x) in s.iter().enumerate() {
        in_s[x] = i;
    }
    // Each outside vertex t may take any pair of its S-neighbours.
    let mut ts: Vec<Vec<usize>> = Vec::new();
    for t in 0..h.num_vertices() {
        if in_s[t] != usize::MAX {
            continue;
        }
        let nb: Vec<usize> = h.neighbours(t).filter(|&w| in_s[w] != usize::MAX).map(|w| in_s[w]).collect();
        if nb.len() < 2 {
            continue;
        }
        let mut pairs = Vec::new();
        for a in 0..nb.len() {
            for b in a + 1..nb.len() {
                let (x, y) = (nb[a].min(nb[b]), nb[a].max(nb[b]));
                pairs.push(x * k + y);
            }
        }
        ts.push(pairs);
    }
    if ts.len() < 20 * k {
        return false;
    }
    matching::hopcroft_karp(ts.len(), k * k, &ts).size() >= 20 * k
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matching_graph(n: usize) -> BiGraph {
        BiGraph::new(n, (0..n as u32).map(|i| (i, i)).collect()).unwrap()
    }

    #[test]
    fn rejects_duplicates_and_range() {
        assert!(BiGraph::new(2, vec![(0, 0), (0, 0)]).is_err());
        assert!(BiGraph::new(2, vec![(0, 2)]).is_err());
        assert!(BiGraph::new(0, vec![]).is_err());
    }

    #[test]
    fn adjacency_agrees_with_edges() {
        let h = BiGraph::new(3, vec![(2, 0), (0, 1), (1, 1)]).unwrap();
        for (e, &(u, v)) in h.edges().iter().enumerate() {
            assert!(h.incident(u as usize).contains(&(3 + v, e as u32)));
            assert!(h.incident(3 + v as usize).contains(&(u, e as u32)));
        }
        assert_eq!(h.degrees().iter().sum::<usize>(), 2 * h.num_edges());
    }

    #[test]
    fn regular_predicate() {
        assert!(is_d_regular(&BiGraph::complete(2), DegreeBand::exact(2)));
        assert!(!is_d_regular(&matching_graph(3), DegreeBand::exact(2)));
        let band = DegreeBand::new(5.0, 0.1);
        assert!(band.contains(4.5) && band.contains(5.5) && !band.contains(5.6));
    }

    #[test]
    fn uniform_examples() {
        let cfg = CheckConfig::default();
        let k = BiGraph::complete(6);
        for delta in [0.1, 0.5, 0.9] {
            let c = is_uniform(&k, delta, 1.0, &cfg);
            assert!(c.holds);
            assert_eq!(c.mode, CheckMode::Exhaustive);
        }
        assert!(!is_uniform(&BiGraph::empty(6), 0.5, 0.5, &cfg).holds);
        assert!(!is_dense(&BiGraph::empty(6), 0.5, 0.5, 0.5, &cfg).holds);
        assert!(is_dense(&k, 0.3, 0.2, 1.0, &cfg).holds);
    }

    #[test]
    fn uniform_dense_above_cap_is_sampled() {
        let cfg = CheckConfig { samples: 50, ..CheckConfig::default() };
        let k = BiGraph::complete(20);
        let c = is_uniform(&k, 0.5, 1.0, &cfg);
        assert!(c.holds && c.mode == CheckMode::Sampled && !c.certified());
        let e = is_dense(&BiGraph::empty(20), 0.5, 0.5, 0.5, &cfg);
        assert!(!e.holds && e.certified());
    }

    #[test]
    fn uniform_exhaustive_matches_brute_force() {
        // Brute force over both sides on a lopsided 5x5 graph.
        let h = BiGraph::new(5, vec![(0, 0), (0, 1), (0, 2), (1, 0), (2, 3), (3, 4), (4, 4), (4, 0)]).unwrap();
        for &(delta, p) in &[(0.4, 0.3), (0.6, 0.3), (0.8, 0.35), (0.2, 0.5)] {
            let mut brute = true;
            for a in 1u32..32 {
                for b in 1u32..32 {
                    let (s1, s2) = (a.count_ones() as f64, b.count_ones() as f64);
                    if s1 < delta * 5.0 || s2 < delta * 5.0 {
                        continue;
                    }
                    let e = h.edges().iter().filter(|&&(u, v)| a >> u & 1 == 1 && b >> v & 1 == 1).count() as f64;
                    if e < (1.0 - delta) * p * s1 * s2 || e > (1.0 + delta) * p * s1 * s2 {
                        brute = false;
                    }
                }
            }
            assert_eq!(is_uniform(&h, delta, p, &CheckConfig::default()).holds, brute, "δ={delta} p={p}");
        }
    }

    #[test]
    fn sparse_examples() {
        let cfg = CheckConfig::default();
        let n = 6;
        assert!(is_sparse(&matching_graph(n), 1.0, 1.0 / n as f64, &cfg).holds);
        let k44 = BiGraph::complete(4);
        let c = is_sparse(&k44, 1.0, 1.0 / 8.0, &cfg);
        assert!(!c.holds);
        assert_eq!(c.mode, CheckMode::Exhaustive);
        // s^2/4 <= s·βn for s <= αn whenever α/4 <= β.
        let c = is_sparse(&BiGraph::complete(30), 0.4, 0.1, &cfg);
        assert!(c.holds && c.mode == CheckMode::Bound);
    }

    #[test]
    fn sparse_peeling_finds_dense_block() {
        // K_{6,6} planted inside an otherwise perfect matching on n=40.
        let n = 40u32;
        let mut edges: Vec<(u32, u32)> = (6..n).map(|i| (i, i)).collect();
        for u in 0..6 {
            for v in 0..6 {
                edges.push((u, v));
            }
        }
        let h = BiGraph::new(n as usize, edges).unwrap();
        let cfg = CheckConfig::default();
        let bad = is_sparse(&h, 0.5, 2.0 / n as f64, &cfg);
        assert!(!bad.holds && bad.certified());
        let good = is_sparse(&h, 0.5, 6.0 / n as f64, &cfg);
        assert!(good.holds && good.mode == CheckMode::Bound);
    }

    #[test]
    fn degeneracy_examples() {
        // Path a-b-c as a local graph.
        let adj = vec![vec![1], vec![0, 2], vec![1]];
        assert_eq!(degeneracy_order(&adj, &[0, 1, 2]), vec![2, 1, 0]);
        let indep = vec![vec![]; 4];
        assert_eq!(degeneracy_order(&indep, &[3, 5, 7, 9]), vec![9, 7, 5, 3]);
        // 4-cycle in K_{2,2}.
        let h = BiGraph::complete(2);
        let order = h.degeneracy_order(&[0, 1, 2, 3]);
        assert_eq!(*order.last().unwrap(), 0);
        for (i, &v) in order.iter().enumerate() {
            let earlier = h.neighbours(v).filter(|w| order[..i].contains(w)).count();
            assert!(earlier <= 2);
        }
    }

    #[test]
    fn sparse2_small_hosts_hold() {
        let cfg = CheckConfig::default();
        assert!(check_sparse2(&matching_graph(50), 4, &cfg).holds);
        assert!(check_sparse2(&BiGraph::complete(30), 4, &cfg).holds);
        // Three S-vertices give only three distinct pairs.
        assert!(!has_pair_structure(&BiGraph::complete(40), &[0, 1, 2]));
    }

    #[test]
    fn pair_structure_detects_witness() {
        // S = 41 left vertices has 820 pairs; K_{n,n} right side supplies T.
        let h = BiGraph::complete(60);
        let s: Vec<usize> = (0..41).collect();
        assert!(!has_pair_structure(&h, &s));
        let h = BiGraph::complete(900);
        assert!(has_pair_structure(&h, &s));
    }

    #[test]
    fn factorisation_partition() {
        let h = BiGraph::complete(2);
        let f = Factorisation::new(h.clone(), 2, vec![0, 1, 1, 0]).unwrap();
        assert_eq!(f.class_sizes(), vec![2, 2]);
        assert!(f.is_banded(DegreeBand::exact(1)));
        let back = Factorisation::from_classes(h.clone(), &f.classes()).unwrap();
        assert_eq!(back, f);
        assert!(Factorisation::new(h, 2, vec![0, 2, 1, 0]).is_err());
    }
}
