//! Seeded generators for host graphs and list assignments.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{is_quasirandom, BiGraph, CheckConfig, QuasirandomReport};
use crate::params::Params;
use crate::rng::RngSeed;
use crate::threshold::ListAssignment;

/// Restarts allowed per matching before giving up.
pub const MATCHING_RETRY_CAP: usize = 1000;
/// Fresh graphs tried by [`gen_quasirandom_instance`].
pub const INSTANCE_ATTEMPTS: usize = 100;

/// Exactly `r`-regular bipartite graph on parts of size `n`: the union of `r`
/// random perfect matchings, each drawn one left vertex at a time among the
/// right vertices that keep the union simple, restarting on a dead end.
/// For `2r > n` the complement of an `(n - r)`-regular graph is returned.
pub fn gen_regular_bipartite(n: usize, r: usize, seed: RngSeed) -> Result<BiGraph> {
    if n == 0 || r > n {
        return Err(Error::InvalidParams(format!("need 0 <= r <= n and n > 0, got n={n}, r={r}")));
    }
    if r == n {
        return Ok(BiGraph::complete(n));
    }
    if 2 * r > n {
        return Ok(gen_regular_bipartite(n, n - r, seed)?.complement());
    }
    let mut rng = seed.rng();
    let mut taken = vec![vec![false; n]; n];
    let mut edges = Vec::with_capacity(n * r);
    let mut perm = vec![0usize; n];
    let mut free: Vec<usize> = Vec::with_capacity(n);
    let mut candidates: Vec<usize> = Vec::with_capacity(n);
    for _ in 0..r {
        let mut done = false;
        for _ in 0..MATCHING_RETRY_CAP {
            free.clear();
            free.extend(0..n);
            let mut ok = true;
            for (u, slot) in perm.iter_mut().enumerate() {
                candidates.clear();
                candidates.extend(free.iter().enumerate().filter(|&(_, &v)| !taken[u][v]).map(|(i, _)| i));
                if candidates.is_empty() {
                    ok = false;
                    break;
                }
                let pick = candidates[rng.gen_range(0..candidates.len())];
                *slot = free.swap_remove(pick);
            }
            if ok {
                done = true;
                break;
            }
        }
        if !done {
            return Err(Error::RetryExhausted { n, r, retries: MATCHING_RETRY_CAP });
        }
        for (u, &v) in perm.iter().enumerate() {
            taken[u][v] = true;
            edges.push((u as u32, v as u32));
        }
    }
    BiGraph::new(n, edges)
}

/// A `round(dm)`-regular host that passes the `(δ, δ', η, dm/n)`
/// quasirandomness check, regenerating up to [`INSTANCE_ATTEMPTS`] times.
pub fn gen_quasirandom_instance(
    params: &Params,
    cfg: &CheckConfig,
    seed: RngSeed,
) -> Result<(BiGraph, QuasirandomReport)> {
    let n = params.n;
    let dm = params.dm();
    if dm > n as f64 {
        return Err(Error::InvalidParams(format!("dm = {dm} exceeds n = {n}")));
    }
    let r = dm.round() as usize;
    let p = dm / n as f64;
    for attempt in 0..INSTANCE_ATTEMPTS {
        let h = gen_regular_bipartite(n, r, seed.child(attempt as u64))?;
        let report = is_quasirandom(&h, params.delta, params.delta_prime, params.eta, p, cfg);
        if report.holds() {
            return Ok((h, report));
        }
    }
    Err(Error::GenerationFailed { attempts: INSTANCE_ATTEMPTS })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "model", content = "value")]
pub enum ListModel {
    /// Each colour is on each list independently with probability `p`.
    Binomial(f64),
    /// Each list is a uniform `k`-subset of the palette.
    FixedSize(usize),
}

/// One uniform per (edge, colour). The binomial list at density `p` keeps
/// the colours with `u < p`; the fixed-size list of size `k` keeps the `k`
/// colours with the smallest uniforms, which is a uniform `k`-subset. Reading
/// every grid point off one table couples the grid monotonically.
#[derive(Debug, Clone)]
pub struct CoupledLists {
    palette: usize,
    uniforms: Vec<f64>,
}

impl CoupledLists {
    pub fn sample(h: &BiGraph, palette: usize, seed: RngSeed) -> Self {
        let mut rng = seed.rng();
        let uniforms = (0..h.num_edges() * palette).map(|_| rng.gen::<f64>()).collect();
        CoupledLists { palette, uniforms }
    }

    fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.uniforms.len() / self.palette.max(1)).map(|e| &self.uniforms[e * self.palette..(e + 1) * self.palette])
    }

    pub fn model(&self, h: &BiGraph, model: ListModel) -> ListAssignment {
        let lists: Vec<Vec<u32>> = match model {
            ListModel::Binomial(p) => {
                self.rows().map(|row| (0..self.palette as u32).filter(|&c| row[c as usize] < p).collect()).collect()
            }
            ListModel::FixedSize(k) => self
                .rows()
                .map(|row| {
                    let mut order: Vec<u32> = (0..self.palette as u32).collect();
                    order.sort_by(|&a, &b| row[a as usize].total_cmp(&row[b as usize]));
                    let mut l = order[..k.min(self.palette)].to_vec();
                    l.sort_unstable();
                    l
                })
                .collect(),
        };
        let lists = if self.palette == 0 { vec![Vec::new(); h.num_edges()] } else { lists };
        ListAssignment::new(h.clone(), self.palette, lists).expect("colours drawn from the palette")
    }
}

pub fn gen_list_assignment(h: &BiGraph, palette: usize, model: ListModel, seed: RngSeed) -> Result<ListAssignment> {
    match model {
        ListModel::Binomial(p) if !(0.0..=1.0).contains(&p) => {
            Err(Error::InvalidParams(format!("p = {p} outside [0,1]")))
        }
        ListModel::FixedSize(k) if k > palette => {
            Err(Error::InvalidParams(format!("k = {k} exceeds palette {palette}")))
        }
        _ => Ok(CoupledLists::sample(h, palette, seed).model(h, model)),
    }
}
