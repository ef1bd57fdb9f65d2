//! Iterative absorption: group a greedy factorisation into an edge-vortex,
//! repeatedly refactorise the leftover and complete each part to a regular
//! graph, then split regular classes into perfect matchings.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowNetwork;
use crate::graph::{BiGraph, Factorisation};
use crate::greedy::{self, RunOptions, RunSummary};
use crate::matching::{self, Matching};
use crate::par;
use crate::params::Params;
use crate::rng::RngSeed;

/// Pieces `H_{i,j}` for levels `i = 1..=ℓ`, with `2^{ℓ-i}` pieces at level `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vortex {
    ell: usize,
    pieces: Vec<Vec<BiGraph>>,
}

impl Vortex {
    pub fn ell(&self) -> usize {
        self.ell
    }

    /// Pieces at level `i` (1-based).
    pub fn level(&self, i: usize) -> &[BiGraph] {
        &self.pieces[i - 1]
    }

    /// `H_i`, the union of the level-`i` pieces.
    pub fn level_union(&self, i: usize) -> BiGraph {
        union_all(self.pieces[0][0].n(), &self.pieces[i - 1])
    }

    pub fn piece_count(&self) -> usize {
        self.pieces.iter().map(Vec::len).sum()
    }

    pub fn pieces(&self) -> impl Iterator<Item = ((usize, usize), &BiGraph)> {
        self.pieces
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, g)| ((i + 1, j + 1), g)))
    }

    /// Groups the `2^ℓ - 1` classes of `f` by colour index: the first
    /// `2^{ℓ-1}` colours form level 1, the next `2^{ℓ-2}` level 2, and so on.
    pub fn from_factorisation(f: &Factorisation, ell: usize) -> Result<Self> {
        if ell == 0 || f.m() != (1 << ell) - 1 {
            return Err(Error::InvalidParams(format!("vortex with ℓ={ell} needs 2^ℓ-1 classes, got {}", f.m())));
        }
        let mut classes = f.classes().into_iter();
        let pieces = (1..=ell).map(|i| classes.by_ref().take(1 << (ell - i)).collect()).collect();
        Ok(Vortex { ell, pieces })
    }
}

fn union_all_checked(n: usize, classes: &[((usize, usize), BiGraph)]) -> Result<BiGraph> {
    let mut edges: Vec<(u32, u32)> = classes.iter().flat_map(|(_, g)| g.edges().iter().copied()).collect();
    edges.sort_unstable();
    edges.dedup();
    BiGraph::new(n, edges)
}

fn union_all(n: usize, graphs: &[BiGraph]) -> BiGraph {
    let edges: Vec<(u32, u32)> = graphs.iter().flat_map(|g| g.edges().iter().copied()).collect();
    BiGraph::new(n, edges).expect("disjoint pieces")
}

/// `ℓ` with `m = 2^ℓ - 1`, if any.
pub fn ell_of(m: usize) -> Option<usize> {
    let ell = (m + 1).trailing_zeros() as usize;
    ((1usize << ell) == m + 1 && m > 0).then_some(ell)
}

/// Runs the greedy process with `m = 2^ℓ - 1` colours and groups the classes.
/// For `ℓ = 1` the vortex is `H` itself and no colouring is needed.
pub fn build_vortex(h: &BiGraph, params: &Params, seed: RngSeed, opts: &RunOptions) -> Result<(Vortex, Option<RunSummary>)> {
    let ell = ell_of(params.m)
        .ok_or_else(|| Error::InvalidParams(format!("m = {} is not of the form 2^ℓ - 1", params.m)))?;
    if ell == 1 {
        return Ok((Vortex { ell, pieces: vec![vec![h.clone()]] }, None));
    }
    let report = greedy::run(h, params, seed, opts)?;
    match report.outcome {
        Ok(f) => Ok((Vortex::from_factorisation(&f, ell)?, Some(report.summary))),
        Err(a) => Err(Error::LevelAbort { level: 0, reason: a.to_string() }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegulariseReport {
    /// Common degree of `R`.
    pub target: usize,
    /// `Δ(R ∩ H_piece)`.
    pub max_piece_degree: usize,
    pub bound: f64,
    pub within_bound: bool,
}

/// Smallest regular `R` with `L ⊆ R ⊆ L ∪ H_piece`: every vertex takes
/// `t - deg_L(v)` edges of `H_piece` for `t = Δ(L)`, found as a bipartite
/// b-matching by maximum flow. `Δ(R ∩ H_piece)` is compared to `bound`.
pub fn regularise_to(h_piece: &BiGraph, l: &BiGraph, bound: f64) -> Result<(BiGraph, RegulariseReport)> {
    let n = l.n();
    if h_piece.n() != n {
        return Err(Error::InvalidGraph("piece and leftover have different part sizes".into()));
    }
    if !h_piece.is_edge_disjoint(l) {
        return Err(Error::InvalidGraph("leftover shares edges with the piece".into()));
    }
    let t = l.max_degree();
    let need: Vec<i64> = (0..2 * n).map(|v| (t - l.degree(v)) as i64).collect();
    let total: i64 = need[..n].iter().sum();
    let (s, sink) = (2 * n, 2 * n + 1);
    let mut net = FlowNetwork::new(2 * n + 2);
    for u in 0..n {
        net.add_edge(s, u, need[u]);
        net.add_edge(n + u, sink, need[n + u]);
    }
    let arcs: Vec<(usize, usize)> = h_piece
        .edges()
        .iter()
        .enumerate()
        .filter(|&(_, &(u, v))| need[u as usize] > 0 && need[n + v as usize] > 0)
        .map(|(e, &(u, v))| (e, net.add_edge(u as usize, n + v as usize, 1)))
        .collect();
    let flow = net.max_flow(s, sink);
    if flow < total {
        return Err(Error::Infeasible(format!("deficiency {total} but only {flow} edges of the piece fit")));
    }
    let chosen: Vec<usize> = arcs.iter().filter(|&&(_, a)| net.flow(a) == 1).map(|&(e, _)| e).collect();
    let added = h_piece.subgraph(chosen);
    let r = l.union(&added)?;
    let max_piece_degree = added.max_degree();
    debug_assert_eq!(r.regular_degree(), Some(t));
    Ok((r, RegulariseReport { target: t, max_piece_degree, bound, within_bound: (max_piece_degree as f64) < bound }))
}

/// [`regularise_to`] with the bound `4δpn`.
pub fn regularise(h_piece: &BiGraph, l: &BiGraph, delta: f64, p: f64) -> Result<(BiGraph, RegulariseReport)> {
    regularise_to(h_piece, l, 4.0 * delta * p * l.n() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    pub min_degree: usize,
    pub max_degree: usize,
    pub d_i: f64,
    pub greedy: RunSummary,
    pub regularise: Vec<RegulariseReport>,
}

#[derive(Debug, Clone)]
pub struct Absorption {
    /// `((i, j), R_{i,j})` for every non-empty output class.
    pub classes: Vec<((usize, usize), BiGraph)>,
    pub levels: Vec<LevelReport>,
}

impl Absorption {
    pub fn factorisation(&self, h: &BiGraph) -> Result<Factorisation> {
        let graphs: Vec<BiGraph> = self.classes.iter().map(|(_, g)| g.clone()).collect();
        Factorisation::from_classes(h.clone(), &graphs)
    }
}

/// Levels `i = 1..=ℓ-2`: refactorise `L_i = H_i \ R_i` into `2^{ℓ-i-1}`
/// classes with the greedy process and regularise each against
/// `H_{i+1,j}`; the last class `R_{ℓ,1}` is everything not yet used.
/// The host must be exactly regular for that class to be regular.
pub fn vortex_absorb(h: &BiGraph, vortex: &Vortex, params: &Params, seed: RngSeed, opts: &RunOptions) -> Result<Absorption> {
    let ell = vortex.ell();
    let n = h.n();
    let (d, delta) = (params.d, params.delta);
    let mut r_prev: Vec<BiGraph> = vec![BiGraph::empty(n); 1 << (ell - 1)];
    let mut classes: Vec<((usize, usize), BiGraph)> = Vec::new();
    let mut levels = Vec::new();
    for i in 1..ell.saturating_sub(1) {
        let h_i = vortex.level_union(i);
        let l_i = h_i.difference(&union_all(n, &r_prev));
        let parts = 1usize << (ell - i - 1);
        let (lo, hi) = (l_i.min_degree(), l_i.max_degree());
        let d_i = lo as f64 / parts as f64;
        if hi as f64 > (1.0 + 2.1 * delta) * lo as f64 || lo == 0 {
            return Err(Error::RegularityViolation(format!(
                "level {i}: leftover degrees in [{lo}, {hi}] leave the (1 ± 2.1δ) band"
            )));
        }
        if (d_i - 2.0 * d).abs() > 40.0 * delta * 2.0 * d {
            return Err(Error::RegularityViolation(format!("level {i}: d_i = {d_i} outside (1 ± 40δ)2d")));
        }
        let level_params = Params { m: parts, d: d_i, delta: (2.0 * delta).min(0.99), ..params.clone() };
        let run = greedy::run(&l_i, &level_params, seed.child(i as u64), opts)
            .map_err(|e| Error::LevelAbort { level: i, reason: e.to_string() })?;
        let f = match &run.outcome {
            Ok(f) => f.clone(),
            Err(a) => return Err(Error::LevelAbort { level: i, reason: a.to_string() }),
        };
        let pieces = vortex.level(i + 1);
        let l_classes = f.classes();
        let results = par::map_indexed(parts, |j| regularise_to(&pieces[j], &l_classes[j], 38.0 * delta * d));
        let mut reports = Vec::with_capacity(parts);
        let mut r_next = Vec::with_capacity(parts);
        for res in results {
            let (r, rep) = res.map_err(|e| Error::LevelAbort { level: i, reason: e.to_string() })?;
            reports.push(rep);
            r_next.push(r);
        }
        for (j, r) in r_next.iter().enumerate() {
            classes.push(((i + 1, j + 1), r.clone()));
        }
        levels.push(LevelReport { level: i, min_degree: lo, max_degree: hi, d_i, greedy: run.summary, regularise: reports });
        r_prev = r_next;
        let used: usize = classes.iter().map(|(_, g)| g.num_edges()).sum();
        let joined = union_all_checked(n, &classes)?;
        if joined.num_edges() != used || !h.contains(&joined) {
            return Err(Error::Invariant(format!("level {i}: output classes overlap or leave the host")));
        }
    }
    let used = union_all_checked(n, &classes)?;
    let last = h.difference(&used);
    if last.num_edges() > 0 {
        if last.regular_degree().is_none() {
            return Err(Error::RegularityViolation(format!(
                "final class degrees in [{}, {}]",
                last.min_degree(),
                last.max_degree()
            )));
        }
        classes.push(((ell, 1), last));
    }
    Ok(Absorption { classes, levels })
}

/// A perfect matching of a regular bipartite graph, as edge ids: random
/// greedy in a seeded order, then augmenting paths.
pub fn extract_perfect_matching(g: &BiGraph, seed: RngSeed) -> Result<Vec<usize>> {
    let n = g.n();
    match g.regular_degree() {
        Some(r) if r > 0 => {}
        _ => return Err(Error::InvalidGraph("perfect matching extraction needs a non-empty regular graph".into())),
    }
    let mut rng = seed.rng();
    let adj: Vec<Vec<usize>> = (0..n).map(|u| g.neighbours(u).map(|w| w - n).collect()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut m = Matching::empty(n, n);
    for &u in &order {
        let free: Vec<usize> = adj[u].iter().copied().filter(|&v| m.mate_of_right(v).is_none()).collect();
        if !free.is_empty() {
            m.set(u, free[rng.gen_range(0..free.len())]);
        }
    }
    matching::augment(&mut m, &adj);
    if !m.is_perfect() {
        return Err(Error::NoPerfectMatching);
    }
    Ok(m.pairs().map(|(u, v)| g.edge_id(u, v).expect("matched along an edge")).collect())
}

/// Splits a graph with all degrees even into two halves with every degree
/// exactly halved, by alternating edges along Euler circuits.
pub fn euler_halve(g: &BiGraph) -> Result<(BiGraph, BiGraph)> {
    let nv = g.num_vertices();
    if (0..nv).any(|v| g.degree(v) % 2 == 1) {
        return Err(Error::InvalidGraph("Euler halving needs every degree even".into()));
    }
    let mut used = vec![false; g.num_edges()];
    let mut next = vec![0usize; nv];
    let mut side = vec![false; g.num_edges()];
    for start in 0..nv {
        if next[start] >= g.degree(start) {
            continue;
        }
        // Hierholzer: the circuit is read off as edges in pop order.
        let mut stack: Vec<(usize, usize)> = vec![(start, usize::MAX)];
        let mut circuit: Vec<usize> = Vec::new();
        while let Some(&(v, via)) = stack.last() {
            let inc = g.incident(v);
            while next[v] < inc.len() && used[inc[next[v]].1 as usize] {
                next[v] += 1;
            }
            if next[v] == inc.len() {
                stack.pop();
                if via != usize::MAX {
                    circuit.push(via);
                }
            } else {
                let (w, e) = inc[next[v]];
                used[e as usize] = true;
                stack.push((w as usize, e as usize));
            }
        }
        for (k, &e) in circuit.iter().enumerate() {
            side[e] = k % 2 == 1;
        }
    }
    let a = g.subgraph((0..g.num_edges()).filter(|&e| !side[e]));
    let b = g.subgraph((0..g.num_edges()).filter(|&e| side[e]));
    Ok((a, b))
}

#[derive(Debug, Clone)]
pub struct Refinement {
    pub factorisation: Factorisation,
    /// Input class of every output class.
    pub parent: Vec<usize>,
}

/// Splits every `r_c`-regular class into `r_c` perfect matchings. With
/// `euler` set, even-degree classes are first halved along Euler circuits.
pub fn refine_to_one_factorisation(f: &Factorisation, seed: RngSeed, euler: bool) -> Result<Refinement> {
    let mut out = Vec::new();
    let mut parent = Vec::new();
    for (c, class) in f.classes().into_iter().enumerate() {
        let r = class
            .regular_degree()
            .ok_or_else(|| Error::RegularityViolation(format!("class {c} is not regular")))?;
        let mut counter = 0u64;
        let mut pieces = Vec::new();
        split(class, r, euler, seed.child(c as u64), &mut counter, &mut pieces)?;
        parent.extend(std::iter::repeat(c).take(pieces.len()));
        out.extend(pieces);
    }
    Ok(Refinement { factorisation: Factorisation::from_classes(f.host().clone(), &out)?, parent })
}

fn split(g: BiGraph, r: usize, euler: bool, seed: RngSeed, counter: &mut u64, out: &mut Vec<BiGraph>) -> Result<()> {
    match r {
        0 => Ok(()),
        1 => {
            out.push(g);
            Ok(())
        }
        _ if euler && r % 2 == 0 => {
            let (a, b) = euler_halve(&g)?;
            split(a, r / 2, euler, seed, counter, out)?;
            split(b, r / 2, euler, seed, counter, out)
        }
        _ => {
            *counter += 1;
            let ids = extract_perfect_matching(&g, seed.child(*counter))?;
            let m = g.subgraph(ids);
            let rest = g.difference(&m);
            out.push(m);
            split(rest, r - 1, euler, seed, counter, out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::gen_regular_bipartite;
    use crate::threshold::count_one_factorisations;

    fn is_perfect_matching(g: &BiGraph) -> bool {
        g.regular_degree() == Some(1)
    }

    #[test]
    fn ell_values() {
        assert_eq!(ell_of(1), Some(1));
        assert_eq!(ell_of(3), Some(2));
        assert_eq!(ell_of(7), Some(3));
        assert_eq!(ell_of(6), None);
        assert_eq!(ell_of(0), None);
    }

    #[test]
    fn vortex_ell_one_is_host() {
        let h = gen_regular_bipartite(10, 3, RngSeed::new(1)).unwrap();
        let p = Params { n: 10, m: 1, d: 3.0, ..Params::preset() };
        let (v, summary) = build_vortex(&h, &p, RngSeed::new(2), &RunOptions::default()).unwrap();
        assert!(summary.is_none());
        assert_eq!(v.piece_count(), 1);
        assert_eq!(v.level(1)[0], h);
    }

    #[test]
    fn vortex_shape_from_factorisation() {
        let h = BiGraph::complete(7);
        let colour_of = h.edges().iter().map(|&(u, v)| (u + v) % 7).collect();
        let f = Factorisation::new(h.clone(), 7, colour_of).unwrap();
        let v = Vortex::from_factorisation(&f, 3).unwrap();
        assert_eq!(v.level(1).len(), 4);
        assert_eq!(v.level(2).len(), 2);
        assert_eq!(v.level(3).len(), 1);
        assert_eq!(v.piece_count(), 7);
        let total: usize = v.pieces().map(|(_, g)| g.num_edges()).sum();
        assert_eq!(total, h.num_edges());
        assert!(Vortex::from_factorisation(&f, 2).is_err());
    }

    #[test]
    fn regularise_trivial() {
        let l = gen_regular_bipartite(8, 2, RngSeed::new(1)).unwrap();
        let piece = l.complement();
        let (r, rep) = regularise(&piece, &l, 0.1, 0.5).unwrap();
        assert_eq!(r, l);
        assert_eq!(rep.max_piece_degree, 0);
        let (r, _) = regularise(&piece, &BiGraph::empty(8), 0.1, 0.5).unwrap();
        assert_eq!(r.num_edges(), 0);
    }

    #[test]
    fn regularise_banded_leftover() {
        // L: a 3-regular graph minus a few edges; piece: the complement.
        let full = gen_regular_bipartite(8, 3, RngSeed::new(5)).unwrap();
        let l = full.subgraph((0..full.num_edges()).filter(|e| e % 5 != 0));
        let piece = full.complement();
        let (r, rep) = regularise(&piece, &l, 0.2, 0.5).unwrap();
        assert_eq!(r.regular_degree(), Some(3));
        assert!(r.contains(&l));
        assert!(piece.union(&l).unwrap().contains(&r));
        assert_eq!(rep.target, 3);
    }

    #[test]
    fn regularise_infeasible() {
        let l = BiGraph::new(2, vec![(0, 0), (0, 1)]).unwrap();
        let piece = BiGraph::empty(2);
        assert!(matches!(regularise(&piece, &l, 0.1, 0.5), Err(Error::Infeasible(_))));
    }

    #[test]
    fn extract_examples() {
        let pm = BiGraph::new(4, (0..4).map(|i| (i, (i + 1) % 4)).collect()).unwrap();
        let mut ids = extract_perfect_matching(&pm, RngSeed::new(1)).unwrap();
        ids.sort_unstable();
        assert_eq!(ids, vec![0, 1, 2, 3]);
        let k = BiGraph::complete(6);
        assert_eq!(extract_perfect_matching(&k, RngSeed::new(2)).unwrap().len(), 6);
        let g = gen_regular_bipartite(50, 4, RngSeed::new(3)).unwrap();
        let m = g.subgraph(extract_perfect_matching(&g, RngSeed::new(4)).unwrap());
        assert!(is_perfect_matching(&m));
        assert_eq!(g.difference(&m).regular_degree(), Some(3));
    }

    #[test]
    fn euler_halves_degrees() {
        let g = gen_regular_bipartite(30, 6, RngSeed::new(7)).unwrap();
        let (a, b) = euler_halve(&g).unwrap();
        assert_eq!(a.regular_degree(), Some(3));
        assert_eq!(b.regular_degree(), Some(3));
        assert_eq!(a.union(&b).unwrap(), g);
        assert!(euler_halve(&gen_regular_bipartite(10, 3, RngSeed::new(1)).unwrap()).is_err());
    }

    #[test]
    fn cycle_splits_into_alternating_matchings() {
        // A single 2n-cycle: u_i ~ v_i and u_i ~ v_{i+1}.
        let n = 5u32;
        let edges = (0..n).flat_map(|i| [(i, i), (i, (i + 1) % n)]).collect();
        let g = BiGraph::new(n as usize, edges).unwrap();
        let a: BiGraph = BiGraph::new(n as usize, (0..n).map(|i| (i, i)).collect()).unwrap();
        let b: BiGraph = BiGraph::new(n as usize, (0..n).map(|i| (i, (i + 1) % n)).collect()).unwrap();
        for s in 0..20 {
            let f = Factorisation::from_classes(g.clone(), &[g.clone()]).unwrap();
            let refined = refine_to_one_factorisation(&f, RngSeed::new(s), s % 2 == 0).unwrap();
            let mut classes = refined.factorisation.classes();
            classes.sort_by_key(|c| c.edges().to_vec());
            let mut want = vec![a.clone(), b.clone()];
            want.sort_by_key(|c| c.edges().to_vec());
            assert_eq!(classes, want);
        }
    }

    #[test]
    fn refine_identity_on_one_regular() {
        let k = BiGraph::complete(4);
        let colour_of = k.edges().iter().map(|&(u, v)| (u + v) % 4).collect();
        let f = Factorisation::new(k, 4, colour_of).unwrap();
        let r = refine_to_one_factorisation(&f, RngSeed::new(1), true).unwrap();
        assert_eq!(r.factorisation, f);
        assert_eq!(r.parent, vec![0, 1, 2, 3]);
    }

    /// Latin squares of order 3 by brute force, as colour maps on K_{3,3}.
    fn latin_squares_3() -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        for code in 0..3u32.pow(9) {
            let cells: Vec<u32> = (0..9).map(|i| code / 3u32.pow(i) % 3).collect();
            let rows_ok = (0..3).all(|r| (0..3).map(|c| 1 << cells[r * 3 + c]).sum::<u32>() == 7);
            let cols_ok = (0..3).all(|c| (0..3).map(|r| 1 << cells[r * 3 + c]).sum::<u32>() == 7);
            if rows_ok && cols_ok {
                out.push(cells);
            }
        }
        out
    }

    #[test]
    fn refine_k33_lands_in_latin_squares() {
        let squares = latin_squares_3();
        assert_eq!(squares.len(), 12);
        assert_eq!(count_one_factorisations(&BiGraph::complete(3)).unwrap(), 12);
        let k = BiGraph::complete(3);
        let f = Factorisation::new(k.clone(), 1, vec![0; 9]).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for s in 0..500 {
            let r = refine_to_one_factorisation(&f, RngSeed::new(s), false).unwrap();
            let cm = r.factorisation.colour_of().to_vec();
            assert!(squares.contains(&cm));
            seen.insert(cm);
        }
        assert!(seen.len() > 1);
    }

    #[test]
    fn refine_rejects_irregular() {
        let g = BiGraph::new(2, vec![(0, 0), (0, 1), (1, 0)]).unwrap();
        let f = Factorisation::new(g, 1, vec![0; 3]).unwrap();
        assert!(matches!(refine_to_one_factorisation(&f, RngSeed::new(1), false), Err(Error::RegularityViolation(_))));
    }

    #[test]
    fn absorb_ell_two_single_class() {
        let h = gen_regular_bipartite(16, 6, RngSeed::new(1)).unwrap();
        let colour_of = (0..h.num_edges()).map(|e| (e % 3) as u32).collect();
        let f = Factorisation::new(h.clone(), 3, colour_of).unwrap();
        let v = Vortex::from_factorisation(&f, 2).unwrap();
        let p = Params { n: 16, m: 3, d: 2.0, ..Params::preset() };
        let a = vortex_absorb(&h, &v, &p, RngSeed::new(2), &RunOptions::default()).unwrap();
        assert_eq!(a.classes.len(), 1);
        assert_eq!(a.classes[0].1, h);
        assert!(a.levels.is_empty());
    }
}
