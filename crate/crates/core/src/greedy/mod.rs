//! The random greedy colouring process: a seeded, steppable state machine
//! that colours a quasirandom host with `m` colours and either returns an
//! approximately `d`-regular factorisation or aborts with a reason.

mod report;
mod state;

use rand::Rng as _;

pub use report::*;
pub use state::{Action, GreedyState, Limits, CLEAN_RETRY_CAP};

use crate::error::{Error, Result};
use crate::graph::{check_sparse2, is_quasirandom, is_sparse, BiGraph, CheckConfig, Factorisation};
use crate::params::Params;
use crate::rng::RngSeed;

/// `3η (1 + ε^{-2}/dm)^i`.
pub fn f_threshold(i: usize, eta: f64, epsilon: f64, d: f64, m: usize) -> f64 {
    let dm = d * m as f64;
    3.0 * eta * (1.0 + 1.0 / (epsilon * epsilon * dm)).powf(i as f64)
}

/// Splits `H` into `m'` groups: each edge draws `t` uniform in `[m]` and goes
/// to the group whose block of `{⌊m/m'⌋, ⌈m/m'⌉}` consecutive values holds it.
/// The larger groups come last.
pub fn reduce_colours(h: &BiGraph, m: usize, m_prime: usize, seed: RngSeed) -> Result<Vec<BiGraph>> {
    if m_prime == 0 || m_prime > m {
        return Err(Error::InvalidParams(format!("need 1 <= m' <= m, got m={m}, m'={m_prime}")));
    }
    let sizes = group_sizes(m, m_prime);
    let mut group_of_t = Vec::with_capacity(m);
    for (g, &s) in sizes.iter().enumerate() {
        group_of_t.extend(std::iter::repeat(g).take(s));
    }
    let mut rng = seed.rng();
    let mut ids = vec![Vec::new(); m_prime];
    for e in 0..h.num_edges() {
        ids[group_of_t[rng.gen_range(0..m)]].push(e);
    }
    Ok(ids.into_iter().map(|g| h.subgraph(g)).collect())
}

/// Multiplicities `m_c` of [`reduce_colours`], summing to `m`.
pub fn group_sizes(m: usize, m_prime: usize) -> Vec<usize> {
    let (q, r) = (m / m_prime, m % m_prime);
    (0..m_prime).map(|g| if g >= m_prime - r { q + 1 } else { q }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub trace: bool,
    /// Run the quasirandomness check on the host first and log a warning on failure.
    pub check_host: bool,
    /// Arm the batch-size and degeneracy monitors when the host passes the
    /// two sparsity events they depend on.
    pub check_host_events: bool,
    /// See [`GreedyState::set_abort_rules`].
    pub abort_rules: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { trace: false, check_host: false, check_host_events: true, abort_rules: true }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub outcome: std::result::Result<Factorisation, AbortReport>,
    pub summary: RunSummary,
    pub trace: Option<Vec<StepTrace>>,
}

impl RunReport {
    pub fn factorisation(&self) -> Option<&Factorisation> {
        self.outcome.as_ref().ok()
    }
}

/// Whether the host passes the sparsity events behind the batch bounds:
/// `(n^{-.1}, 6/n)`-sparse and the pair-structure check.
pub fn host_events(h: &BiGraph, cfg: &CheckConfig) -> bool {
    let n = h.n() as f64;
    is_sparse(h, n.powf(-0.1), 6.0 / n, cfg).holds && check_sparse2(h, 48, cfg).holds
}

/// Runs the process to completion or abort.
pub fn run(h: &BiGraph, params: &Params, seed: RngSeed, opts: &RunOptions) -> Result<RunReport> {
    params.validate()?;
    if params.n != h.n() {
        return Err(Error::InvalidParams(format!("params n = {} but host has n = {}", params.n, h.n())));
    }
    if params.dm() > h.max_degree() as f64 + 1e-9 {
        return Err(Error::InvalidParams(format!(
            "m*d = {} exceeds the maximum degree {} of the host",
            params.dm(),
            h.max_degree()
        )));
    }
    let cfg = CheckConfig::default();
    if opts.check_host {
        let report = is_quasirandom(h, params.delta, params.delta_prime, params.eta, params.dm() / h.n() as f64, &cfg);
        if !report.holds() {
            log::warn!("host fails the quasirandomness check: {report:?}");
        }
    }
    let armed = opts.check_host_events && host_events(h, &cfg);
    let mut state = GreedyState::new(h, params, seed, armed);
    state.set_abort_rules(opts.abort_rules);
    let mut trace = opts.trace.then(Vec::new);
    let stall_cap = state.limits().early_rounds.ceil() as usize + 2 * h.max_degree() + 2 * params.m + 10;
    let mut abort = None;
    while !state.is_complete() {
        match state.step() {
            Ok(Some(t)) => {
                if let Some(log) = trace.as_mut() {
                    log.push(t);
                }
            }
            Ok(None) => {}
            Err(a) => {
                abort = Some(a);
                break;
            }
        }
        if state.round() > stall_cap {
            return Err(Error::Invariant(format!("no progress after {} rounds", state.round())));
        }
    }
    let summary = summarise(&state, params, seed, abort.clone());
    let outcome = match abort {
        Some(a) => Err(a),
        None => Ok(Factorisation::new(h.clone(), params.m, state.colour_of().to_vec())?),
    };
    Ok(RunReport { outcome, summary, trace })
}

fn summarise(state: &GreedyState<'_>, params: &Params, seed: RngSeed, abort: Option<AbortReport>) -> RunSummary {
    let c = &state.counts;
    RunSummary {
        seed: seed.seed,
        stream: seed.stream,
        n: params.n,
        m: params.m,
        d: params.d,
        edges: state.host().num_edges(),
        rounds: state.round() + 1,
        steps: state.steps(),
        standard_steps: c[state::STANDARD],
        exceptional_steps: c[state::EXCEPTIONAL],
        cleaning_steps: c[state::CLEANING],
        skipped_standard: c[state::SKIP_STANDARD],
        skipped_exceptional: c[state::SKIP_EXCEPTIONAL],
        abort,
        monitors: state.monitors,
        cleaning: state.cleaning,
        per_round: state.per_round.clone(),
        class_degree_range: state.is_complete().then(|| state.class_degree_range()).flatten(),
    }
}

/// Rebuilds the colour map from a trace log.
pub fn replay(h: &BiGraph, trace: &[StepTrace]) -> Result<Vec<u32>> {
    let mut colour_of = vec![u32::MAX; h.num_edges()];
    for t in trace {
        for &(e, c) in &t.edges {
            let slot = colour_of
                .get_mut(e as usize)
                .ok_or_else(|| Error::Invariant(format!("trace edge {e} out of range")))?;
            if *slot != u32::MAX {
                return Err(Error::Invariant(format!("edge {e} coloured twice in trace")));
            }
            *slot = c;
        }
    }
    Ok(colour_of)
}
