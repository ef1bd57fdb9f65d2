use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use factorlab::absorb;
use factorlab::config::{parse_config, Campaign};
use factorlab::gen::{gen_quasirandom_instance, gen_regular_bipartite};
use factorlab::graph::CheckConfig;
use factorlab::greedy::{self, RunOptions};
use factorlab::spread::{self, ColourMap, LatinSampler, Probe};
use factorlab::threshold::{estimate_threshold, estimate_threshold_subgraph, Budget, ModelKind};
use factorlab::{io, par, pipeline, BiGraph, Error, RngSeed};

#[derive(Parser)]
#[command(name = "factorlab", version, about = "Random greedy factorisations of regular bipartite graphs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a host graph.
    Gen {
        /// Quasirandom `round(dm)`-regular host from a config file.
        #[arg(long, conflicts_with_all = ["n", "degree"])]
        config: Option<PathBuf>,
        /// Plain random regular host: part size.
        #[arg(long, requires = "degree")]
        n: Option<usize>,
        #[arg(long)]
        degree: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the greedy process; one JSON summary line per run.
    Greedy {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        runs: u64,
        /// Factorisation of the first completed run.
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON-lines step log of the first run.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Ignore the abort rules.
        #[arg(long)]
        no_abort: bool,
        #[arg(long)]
        check_host: bool,
    },
    /// Build a vortex and absorb it into regular classes.
    Absorb {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Overrides `m` with `2^ell - 1`.
        #[arg(long)]
        ell: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        no_abort: bool,
    },
    /// Split the regular classes of a factorisation into perfect matchings.
    Refine {
        #[arg(long)]
        factorisation: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        no_euler: bool,
    },
    /// Estimate probe frequencies of a factorisation sampler.
    Spread {
        #[arg(long, value_enum)]
        sampler: SamplerKind,
        /// Part size of `K_{n,n}` for the Latin sampler.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// JSON array of probes, each a list of `[edge, class]` pairs.
        #[arg(long)]
        probes: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        no_abort: bool,
    },
    /// List edge-colouring success curves; one JSON line per grid point.
    Threshold {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum, default_value_t = Model::Binomial)]
        model: Model,
        /// Comma-separated grid: densities `p`, or `C` values with `--graph`.
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
        /// Regular host for `C log n` lists instead of `K_{n,n}`.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Solver search nodes per instance.
        #[arg(long, default_value_t = Budget::default().max_nodes)]
        budget_nodes: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Host, vortex, absorption, refinement and spread report per seed.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplerKind {
    Greedy,
    Absorb,
    Latin,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Binomial,
    Fixed,
}

fn load_config(path: &Path) -> anyhow::Result<Campaign> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_config(&text)?)
}

fn load_graph(path: &Path) -> anyhow::Result<BiGraph> {
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(io::read_graph(BufReader::new(f))?)
}

fn create(path: &Path) -> anyhow::Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn emit(out: &mut impl Write, value: &impl serde::Serialize) -> anyhow::Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Params from the config, with `n` taken from the host and optional overrides.
fn params_for(c: &Campaign, h: &BiGraph, seed: Option<u64>) -> factorlab::Params {
    let mut p = c.params.clone();
    p.n = h.n();
    if let Some(s) = seed {
        p.seed = s;
    }
    p
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<Error>().map_or(4, Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn run(cmd: Cmd) -> anyhow::Result<u8> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cmd {
        Cmd::Gen { config, n, degree, seed, out: path } => {
            let cfg = CheckConfig::default();
            let (h, report) = match (config, n, degree) {
                (Some(c), _, _) => {
                    let c = load_config(&c)?;
                    let mut p = c.params.clone();
                    if let Some(s) = seed {
                        p.seed = s;
                    }
                    let (h, r) = gen_quasirandom_instance(&p, &cfg, RngSeed::new(p.seed))?;
                    (h, Some(r))
                }
                (None, Some(n), Some(r)) => (gen_regular_bipartite(n, r, RngSeed::new(seed.unwrap_or(0)))?, None),
                _ => bail!(Error::InvalidParams("gen needs --config or --n with --degree".into())),
            };
            io::write_graph(&h, create(&path)?)?;
            emit(&mut out, &json!({ "n": h.n(), "edges": h.num_edges(), "degree": h.max_degree(), "quasirandom": report }))?;
            Ok(0)
        }
        Cmd::Greedy { graph, config, seed, runs, out: path, trace, no_abort, check_host } => {
            let h = load_graph(&graph)?;
            let c = load_config(&config)?;
            let p = params_for(&c, &h, seed);
            let base = RunOptions { check_host, abort_rules: !no_abort, ..RunOptions::default() };
            let reports = par::map_indexed(runs as usize, |k| {
                let opts = RunOptions { trace: k == 0 && trace.is_some(), ..base };
                greedy::run(&h, &p, RngSeed::new(p.seed.wrapping_add(k as u64)), &opts)
            });
            let mut saved = false;
            let mut completed = 0;
            for (k, r) in reports.into_iter().enumerate() {
                let r = r?;
                emit(&mut out, &r.summary)?;
                if let (0, Some(tpath), Some(t)) = (k, &trace, &r.trace) {
                    let mut w = create(tpath)?;
                    for step in t {
                        emit(&mut w, step)?;
                    }
                }
                if let Some(f) = r.factorisation() {
                    completed += 1;
                    if let (false, Some(path)) = (saved, &path) {
                        io::write_factorisation(f, create(path)?)?;
                        saved = true;
                    }
                }
            }
            Ok(if completed == 0 { 2 } else { 0 })
        }
        Cmd::Absorb { graph, config, ell, seed, out: dir, no_abort } => {
            let h = load_graph(&graph)?;
            let c = load_config(&config)?;
            let mut p = params_for(&c, &h, seed);
            if let Some(l) = ell {
                p.m = (1usize << l) - 1;
            }
            let opts = RunOptions { abort_rules: !no_abort, ..RunOptions::default() };
            let root = RngSeed::new(p.seed);
            let (vortex, summary) = absorb::build_vortex(&h, &p, root.child(1), &opts)?;
            let result = absorb::vortex_absorb(&h, &vortex, &p, root.child(2), &opts)?;
            fs::create_dir_all(&dir)?;
            let mut classes = Vec::new();
            for ((i, j), g) in &result.classes {
                let name = format!("class_{i}_{j}.txt");
                io::write_graph(g, create(&dir.join(&name))?)?;
                classes.push(json!({ "level": i, "index": j, "file": name, "edges": g.num_edges(), "degree": g.regular_degree() }));
            }
            let manifest = json!({
                "ell": vortex.ell(),
                "seed": p.seed,
                "streams": { "vortex": root.child(1), "absorb": root.child(2) },
                "greedy": summary,
                "levels": result.levels,
                "classes": classes,
                "partition": result.factorisation(&h).is_ok(),
            });
            serde_json::to_writer_pretty(create(&dir.join("manifest.json"))?, &manifest)?;
            emit(&mut out, &json!({ "classes": result.classes.len(), "ell": vortex.ell() }))?;
            Ok(0)
        }
        Cmd::Refine { factorisation, seed, out: path, no_euler } => {
            let f = io::read_factorisation(BufReader::new(fs::File::open(&factorisation)?))?;
            let r = absorb::refine_to_one_factorisation(&f, RngSeed::new(seed), !no_euler)?;
            io::write_factorisation(&r.factorisation, create(&path)?)?;
            emit(&mut out, &json!({ "classes": r.factorisation.m(), "parent": r.parent }))?;
            Ok(0)
        }
        Cmd::Spread { sampler, n, graph, config, probes, trials, seed, no_abort } => {
            let load_probes = |edges: usize, classes: u32| -> anyhow::Result<Vec<Probe>> {
                Ok(match &probes {
                    Some(p) => serde_json::from_reader(BufReader::new(fs::File::open(p)?))?,
                    None => spread::random_probes(edges, classes, 256, 64, RngSeed::new(seed).child(0)),
                })
            };
            let est_seed = RngSeed::new(seed).child(1);
            let est = match sampler {
                SamplerKind::Latin => {
                    let n = n.context("--sampler latin needs --n")?;
                    let latin = LatinSampler::new(n)?;
                    let probes = load_probes(n * n, n as u32)?;
                    spread::estimate_spread(|s| Some(latin.sample(&mut s.rng())), &probes, trials, est_seed)
                }
                SamplerKind::Greedy | SamplerKind::Absorb => {
                    let h = load_graph(graph.as_deref().context("--graph is required")?)?;
                    let c = load_config(config.as_deref().context("--config is required")?)?;
                    let p = params_for(&c, &h, Some(seed));
                    let opts = RunOptions { abort_rules: !no_abort, ..RunOptions::default() };
                    let classes = match sampler {
                        SamplerKind::Greedy => p.m as u32,
                        _ => h.max_degree() as u32,
                    };
                    let probes = load_probes(h.num_edges(), classes)?;
                    let absorb_mode = matches!(sampler, SamplerKind::Absorb);
                    let run_one = |s: RngSeed| -> Option<ColourMap> {
                        if absorb_mode {
                            let (v, _) = absorb::build_vortex(&h, &p, s.child(0), &opts).ok()?;
                            let a = absorb::vortex_absorb(&h, &v, &p, s.child(1), &opts).ok()?;
                            let f = a.factorisation(&h).ok()?;
                            let r = absorb::refine_to_one_factorisation(&f, s.child(2), true).ok()?;
                            Some(r.factorisation.colour_of().to_vec())
                        } else {
                            let r = greedy::run(&h, &p, s, &opts).ok()?;
                            r.factorisation().map(|f| f.colour_of().to_vec())
                        }
                    };
                    spread::estimate_spread(run_one, &probes, trials, est_seed)
                }
            };
            emit(&mut out, &est)?;
            Ok(0)
        }
        Cmd::Threshold { n, model, grid, graph, trials, budget_nodes, seed } => {
            let budget = Budget { max_nodes: budget_nodes };
            let curve = match (graph, n) {
                (Some(g), _) => estimate_threshold_subgraph(&load_graph(&g)?, &grid, trials, budget, RngSeed::new(seed))?,
                (None, Some(n)) => {
                    let kind = match model {
                        Model::Binomial => ModelKind::Binomial,
                        Model::Fixed => ModelKind::Fixed,
                    };
                    estimate_threshold(n, kind, &grid, trials, budget, RngSeed::new(seed))?
                }
                (None, None) => bail!(Error::InvalidParams("threshold needs --n or --graph".into())),
            };
            for point in &curve.points {
                emit(&mut out, &json!({ "n": curve.n, "model": curve.model, "point": point }))?;
            }
            emit(
                &mut out,
                &json!({
                    "n": curve.n,
                    "model": curve.model,
                    "trials": curve.trials,
                    "per_seed_monotone": curve.per_seed_monotone,
                    "crossing": curve.crossing,
                }),
            )?;
            Ok(0)
        }
        Cmd::Pipeline { config, out: dir } => {
            let c = load_config(&config)?;
            let m = pipeline::run_pipeline(&c, &dir)?;
            for job in &m.jobs {
                emit(&mut out, &json!({ "seed": job.seed, "status": job.status, "refinement": job.refinement, "spread": job.spread }))?;
            }
            Ok(0)
        }
    }
}
