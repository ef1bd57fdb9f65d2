use std::collections::VecDeque;

use rand::seq::index;
use rand::{Rng as _, RngCore};

use super::f_threshold;
use super::report::*;
use crate::graph::{self, BiGraph};
use crate::params::Params;
use crate::rng::{Rng, RngSeed};
use crate::spread;

/// Thresholds derived from the parameters, kept unrounded.
#[derive(Debug, Clone)]
pub struct Limits {
    pub dm: f64,
    pub d: f64,
    pub m: f64,
    pub early_rounds: f64,
    pub delta_d: f64,
    pub late_full: f64,
    pub class_cap: f64,
    pub blocked: f64,
    pub blocking: f64,
    pub exceptional: f64,
    pub unsafe_nbrs: f64,
    pub abort_unsafe: f64,
    pub bad_colour: f64,
    pub b_prime: f64,
    pub earlier_nbrs: f64,
    pub ev_min: f64,
    pub min_colours: f64,
    pub typical: f64,
    pub theta: f64,
    pub eta: f64,
    pub epsilon: f64,
}

impl Limits {
    pub fn new(p: &Params) -> Self {
        let (d, m) = (p.d, p.m as f64);
        let dm = d * m;
        let n = p.n as f64;
        Limits {
            dm,
            d,
            m,
            early_rounds: (1.0 - p.epsilon) * dm / 2.0,
            delta_d: p.delta * d,
            late_full: (1.0 + 2.0 * p.delta) * d - 1.0,
            class_cap: (1.0 + 2.0 * p.delta) * d,
            blocked: d.powf(0.9) * m,
            blocking: p.theta * p.theta * m,
            exceptional: p.theta * dm,
            unsafe_nbrs: 2.0 * p.eta * dm,
            abort_unsafe: p.theta * n,
            bad_colour: p.theta.powi(4) * n,
            b_prime: d.powf(0.1),
            earlier_nbrs: d.powf(0.2),
            ev_min: 1.0 - p.theta.powf(0.1),
            min_colours: (1.0 - 3.0 * p.theta) * m,
            typical: p.eta.powf(0.9) * dm,
            theta: p.theta,
            eta: p.eta,
            epsilon: p.epsilon,
        }
    }
}

/// What the next call to [`GreedyState::step`] will do.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Clean(usize),
    Standard(usize),
    Exceptional(usize),
    /// The active vertex has no uncoloured edges.
    Skip(usize),
}

/// Full mutable state of the random greedy colouring process.
///
/// Vertices use global ids (left part `0..n`, right part `n..2n`); the active
/// vertex sweeps all `2n` of them once per round. Per-(vertex, colour) data is
/// stored at index `v * m + c`.
#[derive(Debug, Clone)]
pub struct GreedyState<'h> {
    host: &'h BiGraph,
    m: usize,
    lim: Limits,
    round: usize,
    v_star: usize,
    steps: u64,
    colour_of: Vec<u32>,
    uncol: Vec<Vec<u32>>,
    upos: Vec<[u32; 2]>,
    uncoloured: usize,
    col: Vec<u32>,
    col_c: Vec<u32>,
    ever_full: Vec<bool>,
    ever_sparse: Vec<bool>,
    full_colours: Vec<u32>,
    sparse_colours: Vec<u32>,
    nbr_full: Vec<u32>,
    nbr_sparse: Vec<u32>,
    blocked: Vec<bool>,
    attacked: Vec<bool>,
    atypical: Vec<bool>,
    exc_edges: Vec<u32>,
    dangerous: Vec<bool>,
    unsafe_: Vec<bool>,
    unsafe_nbrs: Vec<u32>,
    cleaned: Vec<bool>,
    cleaned_nbrs: Vec<u32>,
    touched: Vec<bool>,
    colour_touched: Vec<u32>,
    unsafe_count: usize,
    last_unsafe: usize,
    queue: VecDeque<u32>,
    newly_unsafe: Vec<u32>,
    rng: Rng,
    abort_rules: bool,
    pub(crate) monitors: Monitors,
    pub(crate) cleaning: CleaningStats,
    pub(crate) counts: [u64; 5],
    pub(crate) per_round: Vec<RoundStats>,
}

pub(crate) const STANDARD: usize = 0;
pub(crate) const EXCEPTIONAL: usize = 1;
pub(crate) const CLEANING: usize = 2;
pub(crate) const SKIP_STANDARD: usize = 3;
pub(crate) const SKIP_EXCEPTIONAL: usize = 4;

pub const CLEAN_RETRY_CAP: usize = 64;

impl<'h> GreedyState<'h> {
    pub fn new(host: &'h BiGraph, params: &Params, seed: RngSeed, batch_armed: bool) -> Self {
        let m = params.m;
        let nv = host.num_vertices();
        let ne = host.num_edges();
        let mut uncol: Vec<Vec<u32>> = vec![Vec::new(); nv];
        let mut upos = vec![[0u32; 2]; ne];
        for e in 0..ne {
            let (a, b) = host.endpoints(e);
            upos[e] = [uncol[a].len() as u32, uncol[b].len() as u32];
            uncol[a].push(e as u32);
            uncol[b].push(e as u32);
        }
        let mut s = GreedyState {
            host,
            m,
            lim: Limits::new(params),
            round: 0,
            v_star: 0,
            steps: 0,
            colour_of: vec![u32::MAX; ne],
            uncol,
            upos,
            uncoloured: ne,
            col: vec![0; nv],
            col_c: vec![0; nv * m],
            ever_full: vec![false; nv * m],
            ever_sparse: vec![false; nv * m],
            full_colours: vec![0; nv],
            sparse_colours: vec![0; nv],
            nbr_full: vec![0; nv * m],
            nbr_sparse: vec![0; nv * m],
            blocked: vec![false; nv],
            attacked: vec![false; nv],
            atypical: vec![false; nv],
            exc_edges: vec![0; nv],
            dangerous: vec![false; nv],
            unsafe_: vec![false; nv],
            unsafe_nbrs: vec![0; nv],
            cleaned: vec![false; nv],
            cleaned_nbrs: vec![0; nv],
            touched: vec![false; nv * m],
            colour_touched: vec![0; m],
            unsafe_count: 0,
            last_unsafe: 0,
            queue: VecDeque::new(),
            newly_unsafe: Vec::new(),
            rng: seed.rng(),
            abort_rules: true,
            monitors: Monitors { batch_armed, ..Monitors::default() },
            cleaning: CleaningStats::default(),
            counts: [0; 5],
            per_round: Vec::new(),
        };
        s.sweep();
        s
    }

    /// Turns the unsafe-count and bad-colour aborts on or off. On tiny hosts
    /// `θn` and `θ^4 n` are below two vertices, so the first colouring would abort.
    pub fn set_abort_rules(&mut self, on: bool) {
        self.abort_rules = on;
    }

    /// Replaces the random stream; used to replay a frozen state many times.
    pub fn reseed(&mut self, seed: RngSeed) {
        self.rng = seed.rng();
    }

    /// Marks `v` unsafe; [`build_batch`](Self::build_batch) then queues it.
    pub fn force_unsafe(&mut self, v: usize) {
        self.mark_unsafe(v);
    }

    pub fn host(&self) -> &'h BiGraph {
        self.host
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn limits(&self) -> &Limits {
        &self.lim
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn v_star(&self) -> usize {
        self.v_star
    }

    pub fn c_star(&self) -> usize {
        self.round % self.m
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn is_early(&self) -> bool {
        (self.round as f64) < self.lim.early_rounds
    }

    pub fn is_complete(&self) -> bool {
        self.uncoloured == 0
    }

    pub fn uncoloured(&self) -> usize {
        self.uncoloured
    }

    pub fn colour_of(&self) -> &[u32] {
        &self.colour_of
    }

    pub fn col(&self, v: usize) -> u32 {
        self.col[v]
    }

    pub fn col_c(&self, v: usize, c: usize) -> u32 {
        self.col_c[v * self.m + c]
    }

    /// Uncoloured edge ids at `v`.
    pub fn uncoloured_at(&self, v: usize) -> &[u32] {
        &self.uncol[v]
    }

    pub fn is_full(&self, v: usize, c: usize) -> bool {
        self.ever_full[v * self.m + c]
    }

    pub fn is_ever_sparse(&self, v: usize, c: usize) -> bool {
        self.ever_sparse[v * self.m + c]
    }

    /// The current sparse condition `col_c(v) <= 2i/m - δd` in an early round.
    pub fn is_sparse_now(&self, v: usize, c: usize) -> bool {
        self.is_early() && (self.col_c(v, c) as f64) <= self.sparse_threshold()
    }

    pub fn is_atypical(&self, v: usize) -> bool {
        self.atypical[v]
    }

    pub fn is_exceptional(&self, v: usize) -> bool {
        self.exc_edges[v] as f64 >= self.lim.exceptional
    }

    pub fn is_blocking(&self, v: usize) -> bool {
        self.full_colours[v] as f64 >= self.lim.blocking
    }

    pub fn is_attacking(&self, v: usize) -> bool {
        self.sparse_colours[v] as f64 >= self.lim.blocking
    }

    pub fn is_blocked(&self, v: usize) -> bool {
        self.blocked[v]
    }

    pub fn is_attacked(&self, v: usize) -> bool {
        self.attacked[v]
    }

    pub fn is_dangerous(&self, v: usize) -> bool {
        self.dangerous[v]
    }

    pub fn is_unsafe(&self, v: usize) -> bool {
        self.unsafe_[v]
    }

    pub fn is_cleaned(&self, v: usize) -> bool {
        self.cleaned[v]
    }

    pub fn unsafe_count(&self) -> usize {
        self.unsafe_count
    }

    pub fn cleaned_neighbours(&self, v: usize) -> u32 {
        self.cleaned_nbrs[v]
    }

    pub fn exceptional_edges(&self, v: usize) -> u32 {
        self.exc_edges[v]
    }

    pub fn queue(&self) -> impl Iterator<Item = usize> + '_ {
        self.queue.iter().map(|&v| v as usize)
    }

    pub fn monitors(&self) -> &Monitors {
        &self.monitors
    }

    pub fn cleaning_stats(&self) -> &CleaningStats {
        &self.cleaning
    }

    fn full_threshold(&self) -> f64 {
        if self.is_early() {
            2.0 * self.round as f64 / self.lim.m + self.lim.delta_d
        } else {
            self.lim.late_full
        }
    }

    fn sparse_threshold(&self) -> f64 {
        2.0 * self.round as f64 / self.lim.m - self.lim.delta_d
    }

    fn atypical_now(&self, v: usize) -> bool {
        let i = self.round as f64;
        let f = f_threshold(self.round, self.lim.eta, self.lim.epsilon, self.lim.d, self.lim.m as usize);
        (self.col[v] as f64 - 2.0 * i).abs() > f * self.lim.dm
    }

    fn flagged(&self, v: usize) -> bool {
        self.atypical[v]
            || self.is_exceptional(v)
            || self.is_blocking(v)
            || self.is_attacking(v)
            || self.blocked[v]
            || self.attacked[v]
    }

    /// Colours of `G(v)` for a safe `v`: not full at `v`, and full at no more
    /// than `θ|G(v)|` of its uncoloured neighbours.
    pub fn colour_set(&self, v: usize) -> Vec<usize> {
        let others: Vec<usize> = self.uncol[v].iter().map(|&e| self.other_end(e as usize, v)).collect();
        self.colours_against(v, &others)
    }

    fn colours_against(&self, v: usize, others: &[usize]) -> Vec<usize> {
        let cap = self.lim.theta * others.len() as f64;
        (0..self.m)
            .filter(|&c| {
                !self.is_full(v, c) && others.iter().filter(|&&u| self.is_full(u, c)).count() as f64 <= cap
            })
            .collect()
    }

    fn other_end(&self, e: usize, v: usize) -> usize {
        let (a, b) = self.host.endpoints(e);
        if a == v {
            b
        } else {
            a
        }
    }

    /// Statuses that only move with the round clock.
    fn sweep(&mut self) {
        let full_thr = self.full_threshold();
        let early = self.is_early();
        let sparse_thr = self.sparse_threshold();
        for v in 0..self.host.num_vertices() {
            for c in 0..self.m {
                let k = self.col_c[v * self.m + c] as f64;
                if !self.ever_full[v * self.m + c] && k >= full_thr {
                    self.set_full(v, c);
                }
                if early && !self.ever_sparse[v * self.m + c] && k <= sparse_thr {
                    self.set_sparse(v, c);
                }
            }
            if early && !self.atypical[v] && self.atypical_now(v) {
                self.atypical[v] = true;
            }
        }
        self.per_round.push(self.round_stats());
    }

    fn round_stats(&self) -> RoundStats {
        let nv = self.host.num_vertices();
        let count = |f: &dyn Fn(usize) -> bool| (0..nv).filter(|&v| f(v)).count();
        RoundStats {
            round: self.round,
            coloured: self.colour_of.len() - self.uncoloured,
            unsafe_: self.unsafe_count,
            atypical: count(&|v| self.atypical[v]),
            exceptional: count(&|v| self.is_exceptional(v)),
            blocking: count(&|v| self.is_blocking(v)),
            attacking: count(&|v| self.is_attacking(v)),
            blocked: count(&|v| self.blocked[v]),
            attacked: count(&|v| self.attacked[v]),
            full_pairs: self.ever_full.iter().filter(|&&b| b).count(),
            sparse_pairs: self.ever_sparse.iter().filter(|&&b| b).count(),
        }
    }

    fn touch(&mut self, v: usize, c: usize) {
        if !self.touched[v * self.m + c] {
            self.touched[v * self.m + c] = true;
            self.colour_touched[c] += 1;
        }
    }

    /// Marks `v` as ever `c`-full and propagates to neighbours.
    pub fn set_full(&mut self, v: usize, c: usize) {
        let m = self.m;
        if std::mem::replace(&mut self.ever_full[v * m + c], true) {
            return;
        }
        self.full_colours[v] += 1;
        self.touch(v, c);
        for (w, _) in self.host.incident(v) {
            let w = *w as usize;
            self.nbr_full[w * m + c] += 1;
            if self.nbr_full[w * m + c] as f64 >= self.lim.blocked {
                self.blocked[w] = true;
            }
        }
    }

    /// Marks `v` as ever `c`-sparse and propagates to neighbours.
    pub fn set_sparse(&mut self, v: usize, c: usize) {
        let m = self.m;
        if std::mem::replace(&mut self.ever_sparse[v * m + c], true) {
            return;
        }
        self.sparse_colours[v] += 1;
        self.touch(v, c);
        for (w, _) in self.host.incident(v) {
            let w = *w as usize;
            self.nbr_sparse[w * m + c] += 1;
            if self.nbr_sparse[w * m + c] as f64 >= self.lim.blocked {
                self.attacked[w] = true;
            }
        }
    }

    fn mark_unsafe(&mut self, v: usize) {
        if std::mem::replace(&mut self.unsafe_[v], true) {
            return;
        }
        self.unsafe_count += 1;
        self.last_unsafe = v;
        self.newly_unsafe.push(v as u32);
        for (w, _) in self.host.incident(v) {
            self.unsafe_nbrs[*w as usize] += 1;
        }
    }

    /// Danger and safety are judged as of the moment just before colouring.
    fn before_colouring(&mut self, v: usize) {
        if self.flagged(v) {
            self.dangerous[v] = true;
            self.mark_unsafe(v);
        } else if self.unsafe_nbrs[v] as f64 > self.lim.unsafe_nbrs {
            self.mark_unsafe(v);
        }
    }

    fn after_colouring(&mut self, v: usize, c: usize) {
        let k = self.col_c[v * self.m + c];
        self.monitors.class_degree.record(k as f64 <= self.lim.class_cap);
        if !self.ever_full[v * self.m + c] && k as f64 >= self.full_threshold() {
            self.set_full(v, c);
        }
        if self.is_early() && !self.atypical[v] && self.atypical_now(v) {
            self.atypical[v] = true;
        }
    }

    fn remove_uncoloured(&mut self, e: usize) {
        let (a, b) = self.host.endpoints(e);
        for (slot, v) in [(0usize, a), (1, b)] {
            let pos = self.upos[e][slot] as usize;
            self.uncol[v].swap_remove(pos);
            if let Some(&moved) = self.uncol[v].get(pos) {
                let (ma, _) = self.host.endpoints(moved as usize);
                self.upos[moved as usize][if ma == v { 0 } else { 1 }] = pos as u32;
            }
        }
        self.uncoloured -= 1;
    }

    /// Colours one uncoloured edge and updates every status it can move.
    pub fn colour_edge(&mut self, e: usize, c: usize, exceptional: bool) {
        assert_eq!(self.colour_of[e], u32::MAX, "edge {e} already coloured");
        let (a, b) = self.host.endpoints(e);
        self.before_colouring(a);
        self.before_colouring(b);
        self.colour_of[e] = c as u32;
        self.remove_uncoloured(e);
        for v in [a, b] {
            self.col[v] += 1;
            self.col_c[v * self.m + c] += 1;
            if exceptional {
                self.exc_edges[v] += 1;
            }
        }
        self.after_colouring(a, c);
        self.after_colouring(b, c);
    }

    pub fn next_action(&self) -> Action {
        if let Some(&v) = self.queue.front() {
            return Action::Clean(v as usize);
        }
        let v = self.v_star;
        if self.uncol[v].is_empty() {
            Action::Skip(v)
        } else if self.is_sparse_now(v, self.c_star()) {
            Action::Exceptional(v)
        } else {
            Action::Standard(v)
        }
    }

    /// Draws `(edge, colour)` for a standard step at the active vertex without
    /// changing the state. `None` if no colour is free at both ends.
    pub fn sample_standard_choice<R: RngCore>(&self, rng: &mut R) -> Option<(usize, usize)> {
        let v = self.v_star;
        let edges = &self.uncol[v];
        if edges.is_empty() {
            return None;
        }
        let e = edges[rng.gen_range(0..edges.len())] as usize;
        let u = self.other_end(e, v);
        let eligible: Vec<usize> = (0..self.m).filter(|&c| !self.is_full(u, c) && !self.is_full(v, c)).collect();
        if eligible.is_empty() {
            return None;
        }
        Some((e, eligible[rng.gen_range(0..eligible.len())]))
    }

    /// Candidate edges of an exceptional step: uncoloured at `v*`, both ends not `c*`-full.
    pub fn exceptional_candidates(&self) -> Vec<usize> {
        let (v, c) = (self.v_star, self.c_star());
        if self.is_full(v, c) {
            return Vec::new();
        }
        self.uncol[v]
            .iter()
            .map(|&e| e as usize)
            .filter(|&e| !self.is_full(self.other_end(e, v), c))
            .collect()
    }

    fn check_typical(&mut self, v: usize) {
        if self.is_early() && !self.unsafe_[v] {
            let ok = (self.col[v] as f64 - 2.0 * self.round as f64).abs() <= self.lim.typical;
            self.monitors.safe_typical.record(ok);
        }
    }

    fn abort(&self, reason: AbortReason, witness: Witness) -> AbortReport {
        AbortReport { reason, step: self.steps, round: self.round, witness }
    }

    fn standard_step(&mut self) -> Result<StepTrace, AbortReport> {
        let v = self.v_star;
        self.check_typical(v);
        let mut rng = self.rng.clone();
        let choice = self.sample_standard_choice(&mut rng);
        self.rng = rng;
        let (e, c) = choice.ok_or_else(|| self.abort(AbortReason::NoEligibleColour, Witness::Vertex(v)))?;
        self.colour_edge(e, c, false);
        self.counts[STANDARD] += 1;
        Ok(StepTrace { kind: StepKind::Standard, round: self.round, edges: vec![(e as u32, c as u32)], batch: None })
    }

    fn exceptional_step(&mut self) -> Option<StepTrace> {
        let v = self.v_star;
        self.check_typical(v);
        let candidates = self.exceptional_candidates();
        if candidates.is_empty() {
            self.counts[SKIP_EXCEPTIONAL] += 1;
            return None;
        }
        let e = candidates[self.rng.gen_range(0..candidates.len())];
        let c = self.c_star();
        self.colour_edge(e, c, true);
        self.counts[EXCEPTIONAL] += 1;
        Some(StepTrace { kind: StepKind::Exceptional, round: self.round, edges: vec![(e as u32, c as u32)], batch: None })
    }

    /// Auxiliary colour slots `Y_v` for the uncoloured edges at `v`, or an abort.
    /// Returns the edge ids (sorted), their far endpoints and one colour per slot.
    pub fn build_bv(&mut self, v: usize) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>), AbortReport> {
        let mut edges: Vec<usize> = self.uncol[v].iter().map(|&e| e as usize).collect();
        edges.sort_unstable();
        let xs: Vec<usize> = edges.iter().map(|&e| self.other_end(e, v)).collect();
        let k = xs.len();
        if k == 0 {
            return Ok((edges, xs, Vec::new()));
        }
        let cv = self.colours_against(v, &xs);
        self.monitors.cleaning_colours.record(cv.len() as f64 >= self.lim.min_colours);
        if cv.is_empty() {
            return Err(self.abort(AbortReason::NoEligibleColour, Witness::Vertex(v)));
        }
        let need = self.lim.ev_min * k as f64;
        if k >= cv.len() {
            let slots: Vec<usize> = (0..k).map(|j| cv[j % cv.len()]).collect();
            self.cleaning.fixed_cleanings += 1;
            if self.min_degree(&xs, &slots) as f64 >= need {
                self.cleaning.fixed_ev_held += 1;
            }
            return Ok((edges, xs, slots));
        }
        self.cleaning.random_cleanings += 1;
        for _ in 0..CLEAN_RETRY_CAP {
            let mut pick = index::sample(&mut self.rng, cv.len(), k).into_vec();
            pick.sort_unstable();
            let slots: Vec<usize> = pick.into_iter().map(|j| cv[j]).collect();
            self.cleaning.attempts += 1;
            if self.min_degree(&xs, &slots) as f64 >= need {
                self.cleaning.successes += 1;
                return Ok((edges, xs, slots));
            }
        }
        Err(self.abort(AbortReason::CleanRetryExhausted, Witness::Vertex(v)))
    }

    fn min_degree(&self, xs: &[usize], slots: &[usize]) -> usize {
        let row = xs.iter().map(|&x| slots.iter().filter(|&&c| !self.is_full(x, c)).count()).min();
        let colm = slots.iter().map(|&c| xs.iter().filter(|&&x| !self.is_full(x, c)).count()).min();
        row.unwrap_or(0).min(colm.unwrap_or(0))
    }

    /// Colours every uncoloured edge at `v` along a random perfect matching of `B_v`.
    pub fn clean_vertex(&mut self, v: usize) -> Result<Option<StepTrace>, AbortReport> {
        let (edges, xs, slots) = self.build_bv(v)?;
        self.cleaned[v] = true;
        if edges.is_empty() {
            return Ok(None);
        }
        let adj: Vec<Vec<usize>> = xs
            .iter()
            .map(|&x| (0..slots.len()).filter(|&j| !self.is_full(x, slots[j])).collect())
            .collect();
        let matching = spread::sample_perfect_matching(&adj, &mut self.rng)
            .map_err(|_| self.abort(AbortReason::NoPerfectMatching, Witness::Vertex(v)))?;
        let mut coloured = Vec::with_capacity(edges.len());
        for (i, &e) in edges.iter().enumerate() {
            let c = slots[matching.mate_of_left(i).expect("perfect matching")];
            self.colour_edge(e, c, false);
            coloured.push((e as u32, c as u32));
        }
        self.cleaning.cleanings += 1;
        for (w, _) in self.host.incident(v) {
            let w = *w as usize;
            self.cleaned_nbrs[w] += 1;
            self.cleaning.max_cleaned_neighbours = self.cleaning.max_cleaned_neighbours.max(self.cleaned_nbrs[w]);
        }
        self.counts[CLEANING] += 1;
        Ok(Some(StepTrace { kind: StepKind::Cleaning, round: self.round, edges: coloured, batch: None }))
    }

    /// Closes the newly unsafe vertices into a batch and queues it in
    /// degeneracy order of `H_B`.
    pub fn build_batch(&mut self) -> Option<Vec<u32>> {
        if self.newly_unsafe.is_empty() {
            return None;
        }
        let nv = self.host.num_vertices();
        let mut batch: Vec<usize> = self.newly_unsafe.drain(..).map(|v| v as usize).collect();
        self.monitors.batch_initial.record(batch.len() as f64 <= self.lim.dm);
        let mut in_b = vec![false; nv];
        let mut hits = vec![0u32; nv];
        let mut pending = Vec::new();
        let mut i = 0;
        batch.iter().for_each(|&v| in_b[v] = true);
        while i < batch.len() {
            let b = batch[i];
            i += 1;
            for (w, _) in self.host.incident(b) {
                let w = *w as usize;
                if !self.unsafe_[w] {
                    hits[w] += 1;
                    if hits[w] == 12 {
                        pending.push(w);
                    }
                }
            }
            while let Some(w) = pending.pop() {
                if !in_b[w] && !self.unsafe_[w] {
                    self.mark_unsafe(w);
                    in_b[w] = true;
                    batch.push(w);
                }
            }
        }
        self.newly_unsafe.clear();
        self.monitors.batch_closed.record(batch.len() as f64 <= 2.0 * self.lim.dm);
        let order = self.batch_order(&batch, &in_b);
        self.queue.extend(order.iter().map(|&v| v as u32));
        Some(order.into_iter().map(|v| v as u32).collect())
    }

    fn batch_order(&mut self, batch: &[usize], in_b: &[bool]) -> Vec<usize> {
        let nv = self.host.num_vertices();
        let mut local = vec![usize::MAX; nv];
        batch.iter().enumerate().for_each(|(i, &v)| local[v] = i);
        let in_b_prime: Vec<bool> = (0..nv)
            .map(|w| in_b[w] && (self.host.neighbours(w).filter(|&x| in_b[x]).count() as f64) < self.lim.b_prime)
            .collect();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); batch.len()];
        for (i, &u) in batch.iter().enumerate() {
            for w in self.host.neighbours(u) {
                if in_b[w] {
                    adj[i].push(local[w]);
                }
                if !self.unsafe_[w] || in_b_prime[w] {
                    for x in self.host.neighbours(w) {
                        if in_b[x] && x != u {
                            adj[i].push(local[x]);
                        }
                    }
                }
            }
            adj[i].sort_unstable();
            adj[i].dedup();
        }
        let order = graph::degeneracy_order(&adj, batch);
        let mut placed = vec![false; batch.len()];
        for &v in &order {
            let earlier = adj[local[v]].iter().filter(|&&j| placed[j]).count();
            self.monitors.batch_degeneracy.record(earlier as f64 <= self.lim.earlier_nbrs);
            placed[local[v]] = true;
        }
        order
    }

    fn check_abort(&self) -> Result<(), AbortReport> {
        if !self.abort_rules {
            return Ok(());
        }
        if self.unsafe_count as f64 >= self.lim.abort_unsafe {
            return Err(self.abort(AbortReason::UnsafeCount, Witness::Vertex(self.last_unsafe)));
        }
        if let Some(c) = (0..self.m).find(|&c| self.colour_touched[c] as f64 >= self.lim.bad_colour) {
            return Err(self.abort(AbortReason::BadColour, Witness::Colour(c)));
        }
        Ok(())
    }

    fn advance_active(&mut self) {
        self.v_star += 1;
        if self.v_star == self.host.num_vertices() {
            self.v_star = 0;
            self.round += 1;
            self.sweep();
        }
    }

    /// Performs the next action. Returns the trace when edges were coloured.
    pub fn step(&mut self) -> Result<Option<StepTrace>, AbortReport> {
        let trace = match self.next_action() {
            Action::Clean(v) => {
                self.queue.pop_front();
                self.clean_vertex(v)?
            }
            Action::Standard(_) => {
                let t = self.standard_step()?;
                self.advance_active();
                Some(t)
            }
            Action::Exceptional(_) => {
                let t = self.exceptional_step();
                self.advance_active();
                t
            }
            Action::Skip(_) => {
                self.counts[SKIP_STANDARD] += 1;
                self.advance_active();
                None
            }
        };
        let trace = trace.map(|mut t| {
            self.steps += 1;
            t.batch = self.build_batch();
            t
        });
        self.check_abort()?;
        Ok(trace)
    }

    pub(crate) fn class_degree_range(&self) -> Option<(u32, u32)> {
        let lo = self.col_c.iter().copied().min()?;
        let hi = self.col_c.iter().copied().max()?;
        Some((lo, hi))
    }
}
