//! Random perfect matchings for the cleaning step, and Monte-Carlo
//! estimates of how spread a random factorisation is.
//!
//! A random factorisation is `q`-spread when every family of probe sets
//! `(S_c)` satisfies `P(S_c ⊂ H_c for all c) <= q^{Σ|S_c|}`. Only probes of
//! size one and two are estimated; larger events are too rare to measure.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::BiGraph;
use crate::matching::{self, Matching};
use crate::par;
use crate::rng::{Rng, RngSeed};
use crate::stats::{Proportion, Z99};

pub const RESTART_CAP: usize = 1000;

/// Random perfect matching of a balanced bipartite graph given as left
/// adjacency lists. Left vertices are processed in random order, each taking
/// a uniformly random free neighbour; a dead end restarts the pass. After
/// [`RESTART_CAP`] restarts the last partial matching is completed by
/// augmenting paths.
pub fn sample_perfect_matching(adj: &[Vec<usize>], rng: &mut Rng) -> Result<Matching> {
    let k = adj.len();
    let mut order: Vec<usize> = (0..k).collect();
    let mut m = Matching::empty(k, k);
    let mut free_nbrs: Vec<usize> = Vec::new();
    for _ in 0..=RESTART_CAP {
        m = Matching::empty(k, k);
        order.shuffle(rng);
        let mut stuck = false;
        for &l in &order {
            free_nbrs.clear();
            free_nbrs.extend(adj[l].iter().copied().filter(|&r| m.mate_of_right(r).is_none()));
            if free_nbrs.is_empty() {
                stuck = true;
                break;
            }
            m.set(l, free_nbrs[rng.gen_range(0..free_nbrs.len())]);
        }
        if !stuck {
            return Ok(m);
        }
    }
    matching::augment(&mut m, adj);
    if m.is_perfect() {
        return Ok(m);
    }
    let min_deg = adj.iter().map(Vec::len).min().unwrap_or(0);
    if 2 * min_deg > k {
        // Hall guarantees a perfect matching in this regime.
        Err(Error::RestartExhausted(RESTART_CAP))
    } else {
        Err(Error::NoPerfectMatching)
    }
}

/// Random perfect matching of a bipartite host, as a list of edge ids.
pub fn sample_spread_matching(b: &BiGraph, seed: RngSeed) -> Result<Vec<usize>> {
    let n = b.n();
    let adj: Vec<Vec<usize>> = (0..n).map(|u| b.neighbours(u).map(|w| w - n).collect()).collect();
    let m = sample_perfect_matching(&adj, &mut seed.rng())?;
    Ok(m.pairs().map(|(u, v)| b.edge_id(u, v).expect("matched along an edge")).collect())
}

/// An outcome of a factorisation sampler: the class of every host edge, or
/// [`ABSENT`] for edges the sampled structure does not use.
pub type ColourMap = Vec<u32>;
pub const ABSENT: u32 = u32::MAX;

/// A probe set: `(edge id, class)` pairs that must all be present.
pub type Probe = Vec<(usize, u32)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeEstimate {
    pub probe: Probe,
    pub hits: u64,
    pub frequency: f64,
    /// Half-width of the 99% Wilson interval.
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadEstimate {
    pub trials: u64,
    pub probes: Vec<ProbeEstimate>,
    /// `max_S freq(S)^{1/|S|}` over the probes.
    pub q_hat: f64,
    /// Same maximum taken over upper Wilson bounds.
    pub q_hat_upper: f64,
    /// Sampler failures (for example aborted runs), excluded from `trials`.
    pub failures: u64,
}

fn hit(sample: &ColourMap, probe: &Probe) -> bool {
    probe.iter().all(|&(e, c)| sample[e] == c)
}

fn q_of(freq: f64, size: usize) -> f64 {
    if size == 0 {
        1.0
    } else {
        freq.powf(1.0 / size as f64)
    }
}

/// Monte-Carlo probe frequencies of `sampler`. Trials run in parallel; the
/// result depends only on `seed`.
pub fn estimate_spread<F>(sampler: F, probes: &[Probe], trials: usize, seed: RngSeed) -> SpreadEstimate
where
    F: Fn(RngSeed) -> Option<ColourMap> + Sync + Send,
{
    let outcomes = par::map_indexed(trials, |t| {
        sampler(seed.child(t as u64)).map(|s| probes.iter().map(|p| hit(&s, p)).collect::<Vec<bool>>())
    });
    let ok: Vec<&Vec<bool>> = outcomes.iter().flatten().collect();
    let n_ok = ok.len() as u64;
    let probes: Vec<ProbeEstimate> = probes
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let hits = ok.iter().filter(|row| row[j]).count() as u64;
            let prop = Proportion::new(hits, n_ok);
            ProbeEstimate { probe: p.clone(), hits, frequency: prop.estimate(), radius: prop.wilson_radius(Z99) }
        })
        .collect();
    let q_hat = probes.iter().map(|p| q_of(p.frequency, p.probe.len())).fold(0.0, f64::max);
    let q_hat_upper = probes
        .iter()
        .map(|p| q_of(Proportion::new(p.hits, n_ok).wilson(Z99).1, p.probe.len()))
        .fold(0.0, f64::max);
    SpreadEstimate { trials: n_ok, probes, q_hat, q_hat_upper, failures: trials as u64 - n_ok }
}

/// All single `(edge, class)` probes plus `pairs` random two-edge probes
/// on distinct edges.
pub fn default_probes(num_edges: usize, classes: u32, pairs: usize, seed: RngSeed) -> Vec<Probe> {
    let mut probes: Vec<Probe> =
        (0..num_edges).flat_map(|e| (0..classes).map(move |c| vec![(e, c)])).collect();
    if num_edges >= 2 {
        let mut rng = seed.rng();
        for _ in 0..pairs {
            let a = rng.gen_range(0..num_edges);
            let mut b = rng.gen_range(0..num_edges - 1);
            if b >= a {
                b += 1;
            }
            probes.push(vec![(a, rng.gen_range(0..classes)), (b, rng.gen_range(0..classes))]);
        }
    }
    probes
}

/// `singles` random `(edge, class)` probes and `pairs` two-edge probes,
/// for hosts too large to probe every edge.
pub fn random_probes(num_edges: usize, classes: u32, singles: usize, pairs: usize, seed: RngSeed) -> Vec<Probe> {
    if num_edges == 0 || classes == 0 {
        return Vec::new();
    }
    let mut rng = seed.rng();
    let mut probes: Vec<Probe> =
        (0..singles).map(|_| vec![(rng.gen_range(0..num_edges), rng.gen_range(0..classes))]).collect();
    probes.extend(default_probes(num_edges, classes, pairs, seed.child(0)).into_iter().filter(|p| p.len() == 2));
    probes
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComposeReport {
    pub trials: u64,
    /// Spread of the outer grouping, from single-edge probes.
    pub outer_q: f64,
    /// Conditional spread of the inner split: `max P(e in class | e in its group)`.
    pub inner_q: f64,
    /// Spread of the combined factorisation.
    pub composed_q: f64,
    pub bound: f64,
    /// Largest Wilson radius among the composed probes.
    pub radius: f64,
    pub holds: bool,
}

/// Checks that composing a grouping with independent splits of each group
/// is at most as concentrated as the product of the two spreads.
///
/// `outer` maps each host edge to a group in `[0, groups)`; `inner` receives
/// the group index and its edge ids and returns a class in
/// `[0, classes_per_group[g])` for each of them.
pub fn compose_spread_check<O, I>(
    num_edges: usize,
    groups: usize,
    classes_per_group: &[u32],
    outer: O,
    inner: I,
    trials: usize,
    seed: RngSeed,
) -> ComposeReport
where
    O: Fn(RngSeed) -> Vec<u32> + Sync + Send,
    I: Fn(usize, &[usize], RngSeed) -> Vec<u32> + Sync + Send,
{
    let offsets: Vec<u32> = classes_per_group
        .iter()
        .scan(0u32, |acc, &k| {
            let o = *acc;
            *acc += k;
            Some(o)
        })
        .collect();
    let total: usize = classes_per_group.iter().map(|&k| k as usize).sum();
    let samples = par::map_indexed(trials, |t| {
        let s = seed.child(t as u64);
        let grouping = outer(s.child(0));
        let mut combined = vec![ABSENT; num_edges];
        for g in 0..groups {
            let ids: Vec<usize> = (0..num_edges).filter(|&e| grouping[e] as usize == g).collect();
            let classes = inner(g, &ids, s.child(1 + g as u64));
            for (&e, &c) in ids.iter().zip(&classes) {
                combined[e] = offsets[g] + c;
            }
        }
        (grouping, combined)
    });
    let group_of_class: Vec<usize> =
        (0..groups).flat_map(|g| std::iter::repeat(g).take(classes_per_group[g] as usize)).collect();
    let mut group_hits = vec![0u64; num_edges * groups];
    let mut class_hits = vec![0u64; num_edges * total];
    for (grouping, combined) in &samples {
        for e in 0..num_edges {
            group_hits[e * groups + grouping[e] as usize] += 1;
            if combined[e] != ABSENT {
                class_hits[e * total + combined[e] as usize] += 1;
            }
        }
    }
    let n = trials as u64;
    let mut outer_q: f64 = 0.0;
    let mut inner_q: f64 = 0.0;
    let mut composed_q: f64 = 0.0;
    let mut radius: f64 = 0.0;
    for e in 0..num_edges {
        for g in 0..groups {
            outer_q = outer_q.max(group_hits[e * groups + g] as f64 / n as f64);
        }
        for k in 0..total {
            let hits = class_hits[e * total + k];
            let prop = Proportion::new(hits, n);
            composed_q = composed_q.max(prop.estimate());
            radius = radius.max(prop.wilson_radius(Z99));
            let gh = group_hits[e * groups + group_of_class[k]];
            if gh > 0 {
                inner_q = inner_q.max(hits as f64 / gh as f64);
            }
        }
    }
    let bound = outer_q * inner_q;
    ComposeReport { trials: n, outer_q, inner_q, composed_q, bound, radius, holds: composed_q <= bound + radius }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditioningReport {
    pub trials: u64,
    pub event_hits: u64,
    pub event_probability: f64,
    /// Largest `P(S | E) / P(S)` over probes with `P(S) > 0`.
    pub max_ratio: f64,
    /// Every probe has `P(S | E) <= 2 P(S)` up to the two Wilson radii.
    pub holds: bool,
}

/// Compares probe frequencies with and without conditioning on `event`.
/// Conditioning on an event of probability at least 1/2 can at most double
/// any probability, so `holds` is only meaningful in that regime.
pub fn conditioning_check<F, E>(sampler: F, event: E, probes: &[Probe], trials: usize, seed: RngSeed) -> ConditioningReport
where
    F: Fn(RngSeed) -> Option<ColourMap> + Sync + Send,
    E: Fn(&ColourMap) -> bool + Sync + Send,
{
    let rows = par::map_indexed(trials, |t| {
        sampler(seed.child(t as u64)).map(|s| (event(&s), probes.iter().map(|p| hit(&s, p)).collect::<Vec<bool>>()))
    });
    let ok: Vec<&(bool, Vec<bool>)> = rows.iter().flatten().collect();
    let n = ok.len() as u64;
    let event_hits = ok.iter().filter(|r| r.0).count() as u64;
    let mut max_ratio: f64 = 0.0;
    let mut holds = true;
    for j in 0..probes.len() {
        let all = Proportion::new(ok.iter().filter(|r| r.1[j]).count() as u64, n);
        let cond = Proportion::new(ok.iter().filter(|r| r.0 && r.1[j]).count() as u64, event_hits);
        if all.estimate() > 0.0 {
            max_ratio = max_ratio.max(cond.estimate() / all.estimate());
        }
        if cond.estimate() > 2.0 * all.estimate() + cond.wilson_radius(Z99) + 2.0 * all.wilson_radius(Z99) {
            holds = false;
        }
    }
    ConditioningReport {
        trials: n,
        event_hits,
        event_probability: Proportion::new(event_hits, n).estimate(),
        max_ratio,
        holds,
    }
}

/// Uniform sampler over all Latin squares of order `n <= 5`, viewed as
/// 1-factorisations of `K_{n,n}`: the class of edge `(i, j)` is the symbol in
/// row `i`, column `j`.
pub struct LatinSampler {
    n: usize,
    squares: Vec<Vec<u8>>,
}

impl LatinSampler {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > 5 {
            return Err(Error::SizeCap(format!("Latin square enumeration needs 1 <= n <= 5, got {n}")));
        }
        let mut squares = Vec::new();
        let mut cell = vec![0u8; n * n];
        let mut row_used = vec![0u32; n];
        let mut col_used = vec![0u32; n];
        fn fill(
            i: usize,
            n: usize,
            cell: &mut [u8],
            row_used: &mut [u32],
            col_used: &mut [u32],
            out: &mut Vec<Vec<u8>>,
        ) {
            if i == n * n {
                out.push(cell.to_vec());
                return;
            }
            let (r, c) = (i / n, i % n);
            for s in 0..n {
                let bit = 1 << s;
                if row_used[r] & bit == 0 && col_used[c] & bit == 0 {
                    row_used[r] |= bit;
                    col_used[c] |= bit;
                    cell[i] = s as u8;
                    fill(i + 1, n, cell, row_used, col_used, out);
                    row_used[r] &= !bit;
                    col_used[c] &= !bit;
                }
            }
        }
        fill(0, n, &mut cell, &mut row_used, &mut col_used, &mut squares);
        Ok(LatinSampler { n, squares })
    }

    pub fn count(&self) -> usize {
        self.squares.len()
    }

    /// Colour map over the edges of `BiGraph::complete(n)`, whose edge ids
    /// are row-major.
    pub fn sample(&self, rng: &mut Rng) -> ColourMap {
        let sq = &self.squares[rng.gen_range(0..self.squares.len())];
        debug_assert_eq!(sq.len(), self.n * self.n);
        sq.iter().map(|&s| s as u32).collect()
    }
}
