//! List edge-colouring: an exact backtracking solver, exhaustive counting of
//! 1-factorisations, and Monte-Carlo success curves for random lists.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gen::{CoupledLists, ListModel};
use crate::graph::BiGraph;
use crate::par;
use crate::rng::RngSeed;
use crate::stats::{Proportion, Z99};

/// Largest palette the bitmask solver handles.
pub const MAX_PALETTE: usize = 128;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ListAssignment {
    host: BiGraph,
    palette: usize,
    lists: Vec<Vec<u32>>,
}

impl ListAssignment {
    pub fn new(host: BiGraph, palette: usize, lists: Vec<Vec<u32>>) -> Result<Self> {
        if lists.len() != host.num_edges() {
            return Err(Error::InvalidParams(format!(
                "{} lists for {} edges",
                lists.len(),
                host.num_edges()
            )));
        }
        if let Some(c) = lists.iter().flatten().find(|&&c| c as usize >= palette) {
            return Err(Error::InvalidParams(format!("colour {c} outside palette {palette}")));
        }
        Ok(ListAssignment { host, palette, lists })
    }

    /// Every edge may use every colour of `[0, palette)`.
    pub fn full(host: BiGraph, palette: usize) -> Self {
        let lists = vec![(0..palette as u32).collect(); host.num_edges()];
        ListAssignment { host, palette, lists }
    }

    pub fn host(&self) -> &BiGraph {
        &self.host
    }

    pub fn palette(&self) -> usize {
        self.palette
    }

    pub fn lists(&self) -> &[Vec<u32>] {
        &self.lists
    }

    fn masks(&self) -> Vec<u128> {
        self.lists.iter().map(|l| l.iter().fold(0u128, |m, &c| m | 1 << c)).collect()
    }
}

/// True iff every edge gets a colour from its list and no two edges at a
/// vertex share a colour.
pub fn verify_colouring(l: &ListAssignment, colouring: &[u32]) -> bool {
    let h = l.host();
    if colouring.len() != h.num_edges() {
        return false;
    }
    let mut seen = std::collections::HashSet::new();
    for (e, &c) in colouring.iter().enumerate() {
        if !l.lists[e].contains(&c) {
            return false;
        }
        let (u, v) = h.endpoints(e);
        if !seen.insert((u, c)) || !seen.insert((v, c)) {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    /// Search nodes before giving up. Node budgets keep verdicts reproducible.
    pub max_nodes: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_nodes: 2_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Sat(Vec<u32>),
    Unsat,
    Timeout,
}

struct Search<'a> {
    h: &'a BiGraph,
    nodes: u64,
    budget: u64,
    /// Node count at which the current restart gives up.
    limit: u64,
    /// Tie-break salt; 0 keeps index order.
    salt: u64,
}

/// Colour domains of every edge plus their union at every vertex. A
/// singleton domain is a coloured edge.
#[derive(Clone)]
struct State {
    dom: Vec<u128>,
    union: Vec<u128>,
    queued: Vec<bool>,
    stack: Vec<usize>,
    colours: u128,
}

const NONE: usize = usize::MAX;

/// Nodes in the shortest restart.
const RESTART_UNIT: u64 = 64;

/// The Luby sequence 1, 1, 2, 1, 1, 2, 4, ... (1-based).
fn luby(mut i: u64) -> u64 {
    loop {
        let mut k = 1;
        while (1u64 << k) - 1 < i {
            k += 1;
        }
        if i == (1u64 << k) - 1 {
            return 1 << (k - 1);
        }
        i -= (1u64 << (k - 1)) - 1;
    }
}

/// Kuhn matching scratch for one colour, indexed by vertex.
struct Matching {
    mate: [usize; 2 * MAX_PALETTE],
    edge: [usize; 2 * MAX_PALETTE],
    seen: [u32; 2 * MAX_PALETTE],
    stamp: u32,
}

fn bits(mut m: u128) -> impl Iterator<Item = u32> {
    std::iter::from_fn(move || {
        (m != 0).then(|| {
            let c = m.trailing_zeros();
            m &= m - 1;
            c
        })
    })
}

/// Bitset transitive closure: afterwards `reach[i]` holds every node reachable
/// from `i` by a path of length at least one, over the nodes in `nodes`.
fn close(reach: &mut [u128], nodes: u128) {
    for mid in bits(nodes) {
        let via = reach[mid as usize];
        for i in bits(nodes) {
            if reach[i as usize] >> mid & 1 == 1 {
                reach[i as usize] |= via;
            }
        }
    }
}

impl State {
    fn dirty(&mut self, x: usize) {
        if !self.queued[x] {
            self.queued[x] = true;
            self.stack.push(x);
        }
    }

    fn clear_queue(&mut self) {
        for x in self.stack.drain(..) {
            self.queued[x] = false;
        }
        self.colours = 0;
    }
}

impl<'a> Search<'a> {
    fn new(l: &'a ListAssignment, budget: u64) -> (Self, State) {
        let h = l.host();
        let nv = h.num_vertices();
        let dom = l.masks();
        let mut st = State { dom, union: vec![0; nv], queued: vec![false; nv], stack: Vec::new(), colours: 0 };
        let search = Search { h, nodes: 0, budget, limit: budget, salt: 0 };
        for x in 0..nv {
            st.union[x] = search.union_at(&st, x);
            st.dirty(x);
        }
        st.colours = if l.palette() == 128 { u128::MAX } else { (1u128 << l.palette()) - 1 };
        (search, st)
    }

    fn union_at(&self, st: &State, x: usize) -> u128 {
        self.h.incident(x).iter().fold(0, |a, &(_, e)| a | st.dom[e as usize])
    }

    fn tight(&self, st: &State, x: usize) -> bool {
        st.union[x].count_ones() as usize == self.h.degree(x)
    }

    fn narrow(&self, st: &mut State, e: usize, new: u128) -> bool {
        self.narrow_from(st, e, new, NONE)
    }

    /// Shrinks the domain of `e`; false on a wipe-out. The filter at `from`
    /// is already at its fixpoint and is not queued again.
    fn narrow_from(&self, st: &mut State, e: usize, new: u128, from: usize) -> bool {
        let old = st.dom[e];
        if new == old {
            return true;
        }
        st.dom[e] = new;
        if new == 0 {
            return false;
        }
        st.colours |= old & !new;
        let (u, v) = self.h.endpoints(e);
        for x in [u, v] {
            if x != from {
                st.dirty(x);
            }
            let union = self.union_at(st, x);
            if union != st.union[x] {
                // Tightness may have changed for every colour left at x.
                st.union[x] = union;
                st.colours |= union;
            }
        }
        true
    }

    /// The edges at `x` take distinct colours: keep only the (edge, colour)
    /// pairs that lie in some matching saturating the edges.
    fn filter_vertex(&self, st: &mut State, x: usize) -> bool {
        let inc = self.h.incident(x);
        let k = inc.len();
        if k == 0 {
            return true;
        }
        let union = st.union[x];
        if (union.count_ones() as usize) < k {
            return false;
        }
        let mut doms = [0u128; MAX_PALETTE];
        for (i, &(_, e)) in inc.iter().enumerate() {
            doms[i] = st.dom[e as usize];
        }
        let doms = &doms[..k];
        let mut owner = [NONE; MAX_PALETTE];
        fn kuhn(i: usize, doms: &[u128], owner: &mut [usize; MAX_PALETTE], seen: &mut u128) -> bool {
            for c in bits(doms[i] & !*seen) {
                *seen |= 1 << c;
                let c = c as usize;
                if owner[c] == NONE || kuhn(owner[c], doms, owner, seen) {
                    owner[c] = i;
                    return true;
                }
            }
            false
        }
        if !(0..k).all(|i| kuhn(i, doms, &mut owner, &mut 0)) {
            return false;
        }
        let mut mate = [0u32; MAX_PALETTE];
        let mut free = union;
        for c in bits(union) {
            if owner[c as usize] != NONE {
                mate[owner[c as usize]] = c;
                free &= !(1 << c);
            }
        }
        if free == 0 && doms.iter().all(|d| d.count_ones() == 1) {
            return true;
        }
        // Colour c leads to every other colour its owner could take instead.
        let mut reach = [0u128; MAX_PALETTE];
        for c in bits(union & !free) {
            reach[c as usize] = doms[owner[c as usize]] & !(1 << c);
        }
        close(&mut reach, union);
        let escapes = free | bits(union).filter(|&c| reach[c as usize] & free != 0).fold(0, |a, c| a | 1 << c);
        for (i, &(_, e)) in inc.iter().enumerate() {
            let m = mate[i];
            let mut keep = 1u128 << m;
            for c in bits(doms[i] & !(1 << m)) {
                if escapes >> c & 1 == 1 || reach[c as usize] >> m & 1 == 1 {
                    keep |= 1 << c;
                }
            }
            if !self.narrow_from(st, e as usize, keep, x) {
                return false;
            }
        }
        true
    }

    /// Colour `c` appears at most once at each vertex and exactly once at a
    /// vertex whose remaining colours are all needed. When every vertex that
    /// can still see `c` needs it, the `c`-edges form a perfect matching and
    /// edges outside every perfect matching lose `c`. Otherwise only the
    /// needy vertices of each side are checked for a matching.
    fn filter_colour(&self, st: &mut State, c: u32) -> bool {
        let bit = 1u128 << c;
        let n = self.h.n();
        let nv = self.h.num_vertices();
        let mut m = Matching { mate: [NONE; 2 * MAX_PALETTE], edge: [NONE; 2 * MAX_PALETTE], seen: [0; 2 * MAX_PALETTE], stamp: 0 };
        let all_tight = (0..nv).all(|x| st.union[x] & bit == 0 || self.tight(st, x));
        if !all_tight {
            for side in [0..n, n..nv] {
                m.mate.iter_mut().for_each(|x| *x = NONE);
                for x in side.filter(|&x| st.union[x] & bit != 0 && self.tight(st, x)) {
                    m.stamp += 1;
                    if !self.augment(st, x, bit, &mut m) {
                        return false;
                    }
                }
            }
            return true;
        }
        let rows = (0..n).filter(|&x| st.union[x] & bit != 0).fold(0u128, |a, r| a | 1 << r);
        let cols = (n..nv).filter(|&x| st.union[x] & bit != 0).count();
        if rows.count_ones() as usize != cols {
            return false;
        }
        for r in bits(rows) {
            m.stamp += 1;
            if !self.augment(st, r as usize, bit, &mut m) {
                return false;
            }
        }
        // Row r leads to the mate of every column it could switch to.
        let mut reach = [0u128; MAX_PALETTE];
        for r in bits(rows) {
            for &(y, e) in self.h.incident(r as usize) {
                if st.dom[e as usize] & bit != 0 && m.edge[y as usize] != e as usize {
                    reach[r as usize] |= 1 << m.mate[y as usize];
                }
            }
        }
        close(&mut reach, rows);
        for r in bits(rows) {
            let r = r as usize;
            for &(y, e) in self.h.incident(r) {
                let (y, e) = (y as usize, e as usize);
                if st.dom[e] & bit == 0 || m.edge[y] == e || reach[m.mate[y]] >> r & 1 == 1 {
                    continue;
                }
                if !self.narrow(st, e, st.dom[e] & !bit) {
                    return false;
                }
            }
        }
        true
    }

    fn augment(&self, st: &State, x: usize, bit: u128, m: &mut Matching) -> bool {
        for &(y, e) in self.h.incident(x) {
            let (y, e) = (y as usize, e as usize);
            if st.dom[e] & bit == 0 || m.seen[y] == m.stamp {
                continue;
            }
            m.seen[y] = m.stamp;
            if m.mate[y] == NONE || self.augment(st, m.mate[y], bit, m) {
                m.mate[y] = x;
                m.edge[y] = e;
                return true;
            }
        }
        false
    }

    fn propagate(&self, st: &mut State) -> bool {
        let ok = loop {
            if let Some(x) = st.stack.pop() {
                st.queued[x] = false;
                if !self.filter_vertex(st, x) {
                    break false;
                }
            } else if st.colours != 0 {
                let c = st.colours.trailing_zeros();
                st.colours &= !(1 << c);
                if !self.filter_colour(st, c) {
                    break false;
                }
            } else {
                break true;
            }
        };
        st.clear_queue();
        ok
    }

    /// The branching choice with the fewest options: an edge and its
    /// remaining colours, or a vertex that needs a colour and the edges that
    /// could carry it. `None` when every edge is coloured.
    fn pick(&self, st: &State) -> Option<Vec<(usize, u32)>> {
        let (e, a) = st
            .dom
            .iter()
            .enumerate()
            .filter(|(_, d)| d.count_ones() > 1)
            .min_by_key(|&(e, d)| (d.count_ones(), self.tie(e as u64)))
            .map(|(e, &d)| (e, d))?;
        let mut bound = (a.count_ones() as usize, 0);
        let mut best: Option<(usize, u32)> = None;
        for x in 0..self.h.num_vertices() {
            if bound.0 <= 1 {
                break;
            }
            if !self.tight(st, x) {
                continue;
            }
            let doms = self.h.incident(x).iter().map(|&(_, e)| st.dom[e as usize]);
            let open = doms.clone().filter(|d| d.count_ones() > 1).fold(0u128, |a, d| a | d);
            for c in bits(open) {
                let k = (doms.clone().filter(|d| d >> c & 1 == 1).count(), self.tie(1 << 32 | (x as u64) << 8 | c as u64));
                if k < bound {
                    bound = k;
                    best = Some((x, c));
                }
            }
        }
        Some(match best {
            Some((x, c)) => self
                .h
                .incident(x)
                .iter()
                .map(|&(_, e)| e as usize)
                .filter(|&e| st.dom[e] >> c & 1 == 1)
                .map(|e| (e, c))
                .collect(),
            None => bits(a).map(|c| (e, c)).collect(),
        })
    }

    fn tie(&self, key: u64) -> u64 {
        if self.salt == 0 {
            return 0;
        }
        let mut z = key ^ self.salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Depth-first search from a propagated state; each failed option is
    /// removed before the next is tried. `on_solution` returns `false` to stop.
    fn run(&mut self, st: &mut State, on_solution: &mut dyn FnMut(&[u32]) -> bool) -> Option<bool> {
        self.nodes += 1;
        if self.nodes > self.limit {
            return None;
        }
        let Some(options) = self.pick(st) else {
            let colouring: Vec<u32> = st.dom.iter().map(|d| d.trailing_zeros()).collect();
            return Some(on_solution(&colouring));
        };
        for (e, c) in options {
            let bit = 1u128 << c;
            if st.dom[e] & bit == 0 {
                continue;
            }
            let mut child = st.clone();
            if self.narrow(&mut child, e, bit) && self.propagate(&mut child) {
                match self.run(&mut child, on_solution) {
                    Some(true) => {}
                    other => return other,
                }
            } else {
                child.clear_queue();
            }
            if !(self.narrow(st, e, st.dom[e] & !bit) && self.propagate(st)) {
                st.clear_queue();
                break;
            }
        }
        Some(true)
    }

    fn start(&mut self, mut st: State, on_solution: &mut dyn FnMut(&[u32]) -> bool) -> Option<bool> {
        if !self.propagate(&mut st) {
            return Some(true);
        }
        self.run(&mut st, on_solution)
    }

    /// Restarts with fresh tie-breaks on a Luby schedule. A restart that
    /// finishes its tree is exact, so the verdict stays exact; only the node
    /// budget can end the search undecided.
    fn start_with_restarts(&mut self, mut st: State, on_solution: &mut dyn FnMut(&[u32]) -> bool) -> Option<bool> {
        if !self.propagate(&mut st) {
            return Some(true);
        }
        for r in 0u64.. {
            self.salt = r;
            self.limit = self.budget.min(self.nodes + RESTART_UNIT * luby(r + 1));
            let outcome = self.run(&mut st.clone(), on_solution);
            if outcome.is_some() || self.nodes >= self.budget {
                return outcome;
            }
        }
        unreachable!()
    }
}

fn check_palette(l: &ListAssignment) -> Result<()> {
    if l.palette() > MAX_PALETTE {
        return Err(Error::SizeCap(format!("palette {} exceeds {MAX_PALETTE}", l.palette())));
    }
    if l.host().n() > MAX_PALETTE {
        return Err(Error::SizeCap(format!("part size {} exceeds {MAX_PALETTE}", l.host().n())));
    }
    Ok(())
}

/// Decides whether `l` admits a proper list edge-colouring.
pub fn solve_list_edge_colouring(l: &ListAssignment, budget: Budget) -> Result<Verdict> {
    check_palette(l)?;
    let (mut search, st) = Search::new(l, budget.max_nodes);
    let mut found = None;
    let outcome = search.start_with_restarts(st, &mut |c| {
        found = Some(c.to_vec());
        false
    });
    Ok(match (found, outcome) {
        (Some(c), _) => {
            debug_assert!(verify_colouring(l, &c));
            Verdict::Sat(c)
        }
        (None, None) => Verdict::Timeout,
        (None, Some(_)) => Verdict::Unsat,
    })
}

/// Counts list colourings exhaustively; `None` if the budget ran out.
pub fn count_list_colourings(l: &ListAssignment, budget: Budget) -> Result<Option<u64>> {
    check_palette(l)?;
    let (mut search, st) = Search::new(l, budget.max_nodes);
    let mut count = 0u64;
    let outcome = search.start(st, &mut |_| {
        count += 1;
        true
    });
    Ok(outcome.map(|_| count))
}

/// Largest part size accepted by [`count_one_factorisations`].
pub const COUNT_CAP: usize = 6;

/// Number of ordered 1-factorisations of a regular bipartite graph, i.e.
/// proper edge-colourings with `r` colours. For `K_{n,n}` this is the number
/// of Latin squares of order `n`.
///
/// Colour permutations act freely on these colourings, so the count is `r!`
/// times the number with the edges at left vertex 0 coloured in order.
pub fn count_one_factorisations(h: &BiGraph) -> Result<u128> {
    if h.n() > COUNT_CAP {
        return Err(Error::SizeCap(format!("n = {} exceeds {COUNT_CAP}", h.n())));
    }
    let r = h.regular_degree().ok_or_else(|| Error::InvalidGraph("host is not regular".into()))?;
    if r == 0 {
        return Ok(1);
    }
    let edges: Vec<(usize, usize)> = (0..h.num_edges()).map(|e| h.endpoints(e)).collect();
    let mut used = vec![0u32; h.num_vertices()];
    for (c, &(_, e)) in h.incident(0).iter().enumerate() {
        let (u, v) = edges[e as usize];
        used[u] |= 1 << c;
        used[v] |= 1 << c;
    }
    let rest: Vec<(usize, usize)> = edges.iter().copied().filter(|&(u, _)| u != 0).collect();
    fn go(i: usize, rest: &[(usize, usize)], used: &mut [u32], full: u32) -> u128 {
        let Some(&(u, v)) = rest.get(i) else { return 1 };
        let mut avail = full & !used[u] & !used[v];
        let mut total = 0;
        while avail != 0 {
            let c = avail & avail.wrapping_neg();
            avail &= avail - 1;
            used[u] |= c;
            used[v] |= c;
            total += go(i + 1, rest, used, full);
            used[u] &= !c;
            used[v] &= !c;
        }
        total
    }
    let full = (1u32 << r) - 1;
    let factorial: u128 = (1..=r as u128).product();
    Ok(factorial * go(0, &rest, &mut used, full))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Grid coordinate: `p` for density curves, `C` for `C log n` curves.
    pub x: f64,
    /// List size used for fixed-size curves.
    pub k: Option<usize>,
    pub sat: u64,
    pub unsat: u64,
    pub timeouts: u64,
    pub frequency: f64,
    pub radius: f64,
}

impl CurvePoint {
    fn proportion(&self) -> Proportion {
        Proportion::new(self.sat, self.sat + self.unsat)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    /// Grid coordinate where the success frequency crosses 1/2.
    pub x: f64,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    /// The crossing expressed as `C` in `C log n / n` (density curves only).
    pub c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCurve {
    pub n: usize,
    pub palette: usize,
    pub model: String,
    pub trials: usize,
    pub points: Vec<CurvePoint>,
    /// Decided verdicts never went from SAT to UNSAT along the grid, per seed.
    pub per_seed_monotone: bool,
    pub crossing: Option<Crossing>,
}

/// First upward crossing of `level` by linear interpolation.
fn crossing_of(xs: &[f64], ys: &[f64], level: f64) -> Option<f64> {
    if ys.first().is_some_and(|&y| y >= level) {
        return xs.first().copied();
    }
    xs.windows(2).zip(ys.windows(2)).find_map(|(x, y)| {
        (y[0] < level && y[1] >= level).then(|| x[0] + (level - y[0]) * (x[1] - x[0]) / (y[1] - y[0]))
    })
}

fn summarise(
    n: usize,
    palette: usize,
    model: &str,
    xs: &[f64],
    ks: &[Option<usize>],
    verdicts: &[Vec<Verdict>],
    to_c: impl Fn(f64) -> Option<f64>,
) -> ThresholdCurve {
    let per_seed_monotone = verdicts.iter().all(|row| {
        let mut seen_sat = false;
        row.iter().all(|v| match v {
            Verdict::Sat(_) => {
                seen_sat = true;
                true
            }
            Verdict::Unsat => !seen_sat,
            Verdict::Timeout => true,
        })
    });
    let points: Vec<CurvePoint> = xs
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let (mut sat, mut unsat, mut timeouts) = (0, 0, 0);
            for row in verdicts {
                match row[j] {
                    Verdict::Sat(_) => sat += 1,
                    Verdict::Unsat => unsat += 1,
                    Verdict::Timeout => timeouts += 1,
                }
            }
            let prop = Proportion::new(sat, sat + unsat);
            CurvePoint {
                x,
                k: ks[j],
                sat,
                unsat,
                timeouts,
                frequency: if sat + unsat == 0 { f64::NAN } else { prop.estimate() },
                radius: prop.wilson_radius(Z99),
            }
        })
        .collect();
    let mid: Vec<f64> = points.iter().map(|p| p.frequency).collect();
    let upper: Vec<f64> = points.iter().map(|p| p.proportion().wilson(Z99).1).collect();
    let lower: Vec<f64> = points.iter().map(|p| p.proportion().wilson(Z99).0).collect();
    let crossing = crossing_of(xs, &mid, 0.5).map(|x| Crossing {
        x,
        lo: crossing_of(xs, &upper, 0.5),
        hi: crossing_of(xs, &lower, 0.5),
        c: to_c(x),
    });
    ThresholdCurve {
        n,
        palette,
        model: model.to_string(),
        trials: verdicts.len(),
        points,
        per_seed_monotone,
        crossing,
    }
}

fn solve_or_timeout(l: &ListAssignment, budget: Budget) -> Verdict {
    solve_list_edge_colouring(l, budget).expect("palette checked by caller")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Binomial,
    Fixed,
}

/// Success curve for list edge-colouring `K_{n,n}` from random lists over
/// the palette `[n]`. Grid values are densities `p`; the fixed-size model
/// uses lists of size `round(p n)`. All grid points of one trial share the
/// same uniforms, so each trial's lists grow monotonically along the grid.
pub fn estimate_threshold(
    n: usize,
    model: ModelKind,
    grid: &[f64],
    trials: usize,
    budget: Budget,
    seed: RngSeed,
) -> Result<ThresholdCurve> {
    if n > MAX_PALETTE {
        return Err(Error::SizeCap(format!("n = {n} exceeds {MAX_PALETTE}")));
    }
    let h = BiGraph::complete(n);
    let ks: Vec<Option<usize>> = grid
        .iter()
        .map(|&p| match model {
            ModelKind::Binomial => None,
            ModelKind::Fixed => Some(((p * n as f64).round() as usize).min(n)),
        })
        .collect();
    let verdicts = par::map_indexed(trials, |t| {
        let coupled = CoupledLists::sample(&h, n, seed.child(t as u64));
        grid.iter()
            .zip(&ks)
            .map(|(&p, k)| {
                let lists = match k {
                    None => coupled.model(&h, ListModel::Binomial(p)),
                    Some(k) => coupled.model(&h, ListModel::FixedSize(*k)),
                };
                solve_or_timeout(&lists, budget)
            })
            .collect::<Vec<_>>()
    });
    let ln_n = (n as f64).ln();
    let name = match model {
        ModelKind::Binomial => "binomial",
        ModelKind::Fixed => "fixed",
    };
    Ok(summarise(n, n, name, grid, &ks, &verdicts, |p| {
        (ln_n > 0.0).then(|| p * n as f64 / ln_n)
    }))
}

/// Success curve for list edge-colouring an `r`-regular host from uniform
/// `k`-subsets of `[r]` with `k = min(r, round(C ln n))`, over a grid of `C`.
pub fn estimate_threshold_subgraph(
    h: &BiGraph,
    c_grid: &[f64],
    trials: usize,
    budget: Budget,
    seed: RngSeed,
) -> Result<ThresholdCurve> {
    let r = h.regular_degree().ok_or_else(|| Error::InvalidGraph("host is not regular".into()))?;
    if r > MAX_PALETTE {
        return Err(Error::SizeCap(format!("palette {r} exceeds {MAX_PALETTE}")));
    }
    let ln_n = (h.n() as f64).ln();
    let ks: Vec<Option<usize>> =
        c_grid.iter().map(|&c| Some(((c * ln_n).round().max(0.0) as usize).min(r))).collect();
    let verdicts = par::map_indexed(trials, |t| {
        let coupled = CoupledLists::sample(h, r, seed.child(t as u64));
        ks.iter()
            .map(|k| solve_or_timeout(&coupled.model(h, ListModel::FixedSize(k.unwrap_or(0))), budget))
            .collect::<Vec<_>>()
    });
    Ok(summarise(h.n(), r, "fixed", c_grid, &ks, &verdicts, Some))
}
