//! End-to-end runs: host generation, greedy vortex, absorption into regular
//! classes, refinement into a 1-factorisation and a spread report, with a
//! JSON manifest of every check and every `(seed, stream)` used.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::absorb::{self, ell_of, LevelReport, Vortex};
use crate::config::Campaign;
use crate::error::{Error, Result};
use crate::gen::{gen_quasirandom_instance, gen_regular_bipartite};
use crate::graph::{is_quasirandom, BiGraph, CheckConfig, DegreeBand, Factorisation, QuasirandomReport};
use crate::greedy::{self, RunOptions, RunSummary};
use crate::io;
use crate::par;
use crate::rng::RngSeed;
use crate::spread::{self, ColourMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostRecord {
    pub n: usize,
    pub degree: usize,
    pub edges: usize,
    pub quasirandom: QuasirandomReport,
    pub quasirandom_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceRecord {
    pub level: usize,
    pub index: usize,
    pub edges: usize,
    pub min_degree: usize,
    pub max_degree: usize,
    /// Degrees within `(1 ± 2δ)d`.
    pub banded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VortexRecord {
    pub ell: usize,
    /// One summary per greedy attempt, in order; the last one completed
    /// unless all aborted.
    pub attempts: Vec<RunSummary>,
    pub pieces: Vec<PieceRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRecord {
    pub level: usize,
    pub index: usize,
    pub edges: usize,
    pub degree: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionRecord {
    pub attempts: usize,
    pub failures: Vec<String>,
    pub levels: Vec<LevelReport>,
    pub classes: Vec<ClassRecord>,
    pub partition: bool,
    pub all_regular: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementRecord {
    pub classes: usize,
    pub all_perfect_matchings: bool,
    /// Every output class lies inside its parent class.
    pub refines_input: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadRecord {
    pub trials: u64,
    pub failures: u64,
    pub probes: usize,
    pub q_hat: f64,
    pub q_hat_upper: f64,
    /// `q̂ n`, the empirical spread constant.
    pub q_hat_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobManifest {
    pub seed: u64,
    pub streams: BTreeMap<String, RngSeed>,
    pub host: Option<HostRecord>,
    pub vortex: Option<VortexRecord>,
    pub absorption: Option<AbsorptionRecord>,
    pub refinement: Option<RefinementRecord>,
    pub spread: Option<SpreadRecord>,
    pub status: String,
    pub error: Option<String>,
    pub exit_code: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: Campaign,
    pub jobs: Vec<JobManifest>,
}

/// Runs every job of the campaign into `out/job-<seed>/` and writes
/// `out/manifest.json`. Returns the manifest, or the first job error after
/// the manifest has been written.
pub fn run_pipeline(campaign: &Campaign, out: &Path) -> Result<Manifest> {
    let params = &campaign.params;
    if ell_of(params.m).is_none() {
        return Err(Error::InvalidParams(format!("m = {} is not of the form 2^ℓ - 1", params.m)));
    }
    if params.dm() > params.n as f64 {
        return Err(Error::InvalidParams(format!("dm = {} exceeds n = {}", params.dm(), params.n)));
    }
    par::set_threads(campaign.threads);
    fs::create_dir_all(out)?;
    let seeds: Vec<u64> = campaign.seeds().collect();
    let results = par::map_indexed(seeds.len(), |k| run_job(campaign, seeds[k], &out.join(format!("job-{}", seeds[k]))));
    let mut jobs = Vec::with_capacity(results.len());
    let mut first_err = None;
    for (job, err) in results {
        if first_err.is_none() {
            first_err = err;
        }
        jobs.push(job);
    }
    let manifest = Manifest { config: campaign.clone(), jobs };
    let w = BufWriter::new(fs::File::create(out.join("manifest.json"))?);
    serde_json::to_writer_pretty(w, &manifest)?;
    match first_err {
        Some(e) => Err(e),
        None => Ok(manifest),
    }
}

fn write_graph(h: &BiGraph, path: PathBuf) -> Result<()> {
    io::write_graph(h, BufWriter::new(fs::File::create(path)?))
}

fn run_job(campaign: &Campaign, seed: u64, dir: &Path) -> (JobManifest, Option<Error>) {
    let mut job = JobManifest {
        seed,
        streams: BTreeMap::new(),
        host: None,
        vortex: None,
        absorption: None,
        refinement: None,
        spread: None,
        status: "ok".into(),
        error: None,
        exit_code: 0,
    };
    match job_stages(campaign, seed, dir, &mut job) {
        Ok(()) => (job, None),
        Err(e) => {
            job.status = "failed".into();
            job.error = Some(e.to_string());
            job.exit_code = e.exit_code();
            (job, Some(e))
        }
    }
}

fn job_stages(campaign: &Campaign, seed: u64, dir: &Path, job: &mut JobManifest) -> Result<()> {
    let opts = &campaign.pipeline;
    let params = crate::params::Params { seed, ..campaign.params.clone() };
    let root = RngSeed::new(seed);
    let cfg = CheckConfig::default();
    let n = params.n;
    let ell = ell_of(params.m).expect("checked by run_pipeline");
    fs::create_dir_all(dir.join("vortex"))?;
    fs::create_dir_all(dir.join("classes"))?;

    // Host.
    let host_seed = root.child(0);
    job.streams.insert("host".into(), host_seed);
    let (h, report) = match gen_quasirandom_instance(&params, &cfg, host_seed) {
        Ok(x) => x,
        Err(Error::GenerationFailed { .. }) if !opts.require_quasirandom => {
            let h = gen_regular_bipartite(n, params.dm().round() as usize, host_seed)?;
            let r = is_quasirandom(&h, params.delta, params.delta_prime, params.eta, params.dm() / n as f64, &cfg);
            (h, r)
        }
        Err(e) => return Err(e),
    };
    job.host = Some(HostRecord {
        n,
        degree: h.max_degree(),
        edges: h.num_edges(),
        quasirandom: report,
        quasirandom_holds: report.holds(),
    });
    write_graph(&h, dir.join("host.txt"))?;

    // Vortex.
    let run_opts = RunOptions { abort_rules: opts.abort_rules, ..RunOptions::default() };
    let band = DegreeBand::new(params.d, 2.0 * params.delta);
    let mut attempts = Vec::new();
    let vortex = if ell == 1 {
        Vortex::from_factorisation(&Factorisation::new(h.clone(), 1, vec![0; h.num_edges()])?, 1)?
    } else {
        let mut found = None;
        for a in 0..opts.greedy_attempts {
            let s = root.child(1).child(a as u64);
            job.streams.insert(format!("greedy.{a}"), s);
            let report = greedy::run(&h, &params, s, &run_opts)?;
            attempts.push(report.summary);
            if let Ok(f) = report.outcome {
                found = Some(f);
                break;
            }
        }
        let f = found.ok_or_else(|| Error::LevelAbort {
            level: 0,
            reason: format!(
                "all {} greedy attempts aborted, last: {}",
                attempts.len(),
                attempts.last().and_then(|s| s.abort.as_ref()).map_or(String::new(), |a| a.to_string())
            ),
        });
        match f {
            Ok(f) => Vortex::from_factorisation(&f, ell)?,
            Err(e) => {
                job.vortex = Some(VortexRecord { ell, attempts, pieces: Vec::new() });
                return Err(e);
            }
        }
    };
    let mut pieces = Vec::new();
    for ((i, j), g) in vortex.pieces() {
        write_graph(g, dir.join("vortex").join(format!("piece_{i}_{j}.txt")))?;
        pieces.push(PieceRecord {
            level: i,
            index: j,
            edges: g.num_edges(),
            min_degree: g.min_degree(),
            max_degree: g.max_degree(),
            banded: (0..g.num_vertices()).all(|v| band.contains(g.degree(v) as f64)),
        });
    }
    job.vortex = Some(VortexRecord { ell, attempts, pieces });

    // Absorption.
    let mut failures = Vec::new();
    let mut absorbed = None;
    for a in 0..opts.greedy_attempts {
        let s = root.child(2).child(a as u64);
        job.streams.insert(format!("absorb.{a}"), s);
        match absorb::vortex_absorb(&h, &vortex, &params, s, &run_opts) {
            Ok(x) => {
                absorbed = Some(x);
                break;
            }
            Err(e @ Error::LevelAbort { .. }) if a + 1 < opts.greedy_attempts => failures.push(e.to_string()),
            Err(e) => {
                failures.push(e.to_string());
                job.absorption = Some(AbsorptionRecord {
                    attempts: failures.len(),
                    failures,
                    levels: Vec::new(),
                    classes: Vec::new(),
                    partition: false,
                    all_regular: false,
                });
                return Err(e);
            }
        }
    }
    let absorbed = absorbed.expect("loop returns or breaks");
    let f = absorbed.factorisation(&h);
    let classes: Vec<ClassRecord> = absorbed
        .classes
        .iter()
        .map(|((i, j), g)| ClassRecord { level: *i, index: *j, edges: g.num_edges(), degree: g.regular_degree() })
        .collect();
    for ((i, j), g) in &absorbed.classes {
        write_graph(g, dir.join("classes").join(format!("class_{i}_{j}.txt")))?;
    }
    let all_regular = classes.iter().all(|c| c.degree.is_some());
    job.absorption = Some(AbsorptionRecord {
        attempts: failures.len() + 1,
        failures,
        levels: absorbed.levels.clone(),
        classes,
        partition: f.is_ok(),
        all_regular,
    });
    let f = f?;
    if !all_regular {
        return Err(Error::RegularityViolation("an absorbed class is not regular".into()));
    }

    // Refinement.
    let refine_seed = root.child(3);
    job.streams.insert("refine".into(), refine_seed);
    let refined = absorb::refine_to_one_factorisation(&f, refine_seed, opts.euler)?;
    let one = &refined.factorisation;
    let all_perfect = one.classes().iter().all(|c| c.regular_degree() == Some(1));
    let refines_input =
        (0..one.m()).all(|k| f.class(refined.parent[k]).contains(&one.class(k)));
    job.refinement = Some(RefinementRecord { classes: one.m(), all_perfect_matchings: all_perfect, refines_input });
    io::write_factorisation(one, BufWriter::new(fs::File::create(dir.join("one_factorisation.txt"))?))?;
    if !all_perfect || !refines_input {
        return Err(Error::Invariant("refinement is not a 1-factorisation refining the classes".into()));
    }

    // Spread of the refinement step over the fixed regular classes.
    if opts.spread_trials > 0 {
        let spread_seed = root.child(4);
        job.streams.insert("spread".into(), spread_seed);
        let probes = spread::random_probes(
            h.num_edges(),
            one.m() as u32,
            opts.spread_probes,
            opts.spread_probes / 4,
            spread_seed.child(0),
        );
        let sampler = |s: RngSeed| -> Option<ColourMap> {
            absorb::refine_to_one_factorisation(&f, s, opts.euler).ok().map(|r| r.factorisation.colour_of().to_vec())
        };
        let est = spread::estimate_spread(sampler, &probes, opts.spread_trials, spread_seed.child(1));
        job.spread = Some(SpreadRecord {
            trials: est.trials,
            failures: est.failures,
            probes: probes.len(),
            q_hat: est.q_hat,
            q_hat_upper: est.q_hat_upper,
            q_hat_n: est.q_hat * n as f64,
        });
    }
    Ok(())
}
