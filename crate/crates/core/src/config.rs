//! `key = value` campaign files.
//!
//! ```text
//! # comment
//! n = 16
//! seed = 7
//! [params]
//! m = 3
//! d = 2
//! [pipeline]
//! abort_rules = false
//! ```
//!
//! A key may appear before any section header or under its own section.
//! Unknown keys, unknown sections and keys under the wrong section are
//! rejected with the offending line number.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Params;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Top,
    Params,
    Pipeline,
    Campaign,
}

const REQUIRED: [&str; 4] = ["n", "m", "d", "seed"];

fn section_of(key: &str) -> Option<Section> {
    Some(match key {
        "n" | "seed" => Section::Top,
        "m" | "d" | "K" | "C" | "L" | "theta" | "delta_prime" | "eta" | "epsilon" | "delta" => Section::Params,
        "abort_rules" | "greedy_attempts" | "require_quasirandom" | "euler" | "spread_trials" | "spread_probes" => {
            Section::Pipeline
        }
        "runs" | "threads" => Section::Campaign,
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    /// Enforce the abort rules of the greedy process.
    pub abort_rules: bool,
    /// Greedy attempts per level, each on its own child stream; the first
    /// completed run is kept.
    pub greedy_attempts: usize,
    /// Fail when no host passes the quasirandomness check; otherwise fall
    /// back to a plain regular host and record the failed check.
    pub require_quasirandom: bool,
    /// Halve even-degree classes along Euler circuits before extraction.
    pub euler: bool,
    /// Refinement samples for the spread report; 0 skips it.
    pub spread_trials: usize,
    /// Single-edge probes in the spread report (pairs get a quarter of this).
    pub spread_probes: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            abort_rules: true,
            greedy_attempts: 1,
            require_quasirandom: true,
            euler: true,
            spread_trials: 1000,
            spread_probes: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub params: Params,
    pub pipeline: PipelineOptions,
    /// Jobs use seeds `seed, seed + 1, ..., seed + runs - 1`.
    pub runs: u64,
    /// Worker threads; 0 uses the default pool.
    pub threads: usize,
}

impl Campaign {
    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.runs).map(move |i| self.params.seed.wrapping_add(i))
    }
}

fn schema(line: usize, msg: impl Into<String>) -> Error {
    Error::Schema { line, msg: msg.into() }
}

fn parse_value<T: std::str::FromStr>(raw: &str, key: &str, line: usize) -> Result<T> {
    raw.parse().map_err(|_| schema(line, format!("cannot parse {key} = {raw:?}")))
}

fn parse_bool(raw: &str, key: &str, line: usize) -> Result<bool> {
    match raw {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(schema(line, format!("{key} must be true or false, got {raw:?}"))),
    }
}

pub fn parse_config(text: &str) -> Result<Campaign> {
    let mut section = Section::Top;
    let mut seen: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = match name.trim() {
                "params" => Section::Params,
                "pipeline" => Section::Pipeline,
                "campaign" => Section::Campaign,
                other => return Err(schema(line, format!("unknown section [{other}]"))),
            };
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| schema(line, format!("expected key = value, got {body:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        let home = section_of(key).ok_or_else(|| schema(line, format!("unknown key {key:?}")))?;
        if section != Section::Top && section != home {
            return Err(schema(line, format!("key {key:?} does not belong in this section")));
        }
        if let Some((first, _)) = seen.insert(key, (line, value)) {
            return Err(schema(line, format!("duplicate key {key:?} (first set on line {first})")));
        }
    }
    let missing: Vec<&str> = REQUIRED.iter().copied().filter(|k| !seen.contains_key(k)).collect();
    if !missing.is_empty() {
        let line = text.lines().count().max(1);
        return Err(schema(line, format!("missing required keys: {}", missing.join(", "))));
    }

    let mut p = Params::preset();
    let mut opts = PipelineOptions::default();
    let mut runs = 1u64;
    let mut threads = 0usize;
    for (&key, &(line, raw)) in &seen {
        match key {
            "n" => p.n = parse_value(raw, key, line)?,
            "seed" => p.seed = parse_value(raw, key, line)?,
            "m" => p.m = parse_value(raw, key, line)?,
            "d" => p.d = parse_value(raw, key, line)?,
            "K" => p.big_k = parse_value(raw, key, line)?,
            "C" => p.big_c = parse_value(raw, key, line)?,
            "L" => p.big_l = parse_value(raw, key, line)?,
            "theta" => p.theta = parse_value(raw, key, line)?,
            "delta_prime" => p.delta_prime = parse_value(raw, key, line)?,
            "eta" => p.eta = parse_value(raw, key, line)?,
            "epsilon" => p.epsilon = parse_value(raw, key, line)?,
            "delta" => p.delta = parse_value(raw, key, line)?,
            "abort_rules" => opts.abort_rules = parse_bool(raw, key, line)?,
            "require_quasirandom" => opts.require_quasirandom = parse_bool(raw, key, line)?,
            "euler" => opts.euler = parse_bool(raw, key, line)?,
            "greedy_attempts" => opts.greedy_attempts = parse_value(raw, key, line)?,
            "spread_trials" => opts.spread_trials = parse_value(raw, key, line)?,
            "spread_probes" => opts.spread_probes = parse_value(raw, key, line)?,
            "runs" => runs = parse_value(raw, key, line)?,
            "threads" => threads = parse_value(raw, key, line)?,
            _ => unreachable!("keys were checked against the schema"),
        }
    }
    if let Err(Error::InvalidParams(msg)) = p.validate() {
        let first = msg.split_whitespace().next().unwrap_or("");
        let line = seen.get(first).map_or(0, |&(l, _)| l);
        return Err(schema(line, msg));
    }
    if opts.greedy_attempts == 0 || runs == 0 {
        let key = if runs == 0 { "runs" } else { "greedy_attempts" };
        return Err(schema(seen.get(key).map_or(0, |&(l, _)| l), format!("{key} must be at least 1")));
    }
    Ok(Campaign { params: p, pipeline: opts, runs, threads })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "n = 16\nseed = 3\nm = 3\nd = 2\n";

    #[test]
    fn empty_lists_required_keys() {
        let err = parse_config("").unwrap_err();
        let msg = err.to_string();
        for k in REQUIRED {
            assert!(msg.contains(k), "{msg}");
        }
        assert!(matches!(err, Error::Schema { .. }));
    }

    #[test]
    fn minimal_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.params.n, 16);
        assert_eq!(c.params.m, 3);
        assert_eq!(c.params.theta, Params::preset().theta);
        assert_eq!(c.pipeline, PipelineOptions::default());
        assert_eq!(c.runs, 1);
        assert_eq!(c.seeds().collect::<Vec<_>>(), vec![3]);
    }

    #[test]
    fn theta_out_of_range() {
        let text = format!("{MINIMAL}[params]\ntheta = 2\n");
        match parse_config(&text) {
            Err(Error::Schema { line, msg }) => {
                assert_eq!(line, 6);
                assert!(msg.contains("theta"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_and_misplaced_keys() {
        assert!(matches!(parse_config(&format!("{MINIMAL}colour = 1\n")), Err(Error::Schema { line: 5, .. })));
        assert!(matches!(
            parse_config(&format!("{MINIMAL}[pipeline]\ntheta = 0.1\n")),
            Err(Error::Schema { line: 6, .. })
        ));
        assert!(matches!(parse_config(&format!("{MINIMAL}[nope]\n")), Err(Error::Schema { line: 5, .. })));
        assert!(matches!(parse_config(&format!("{MINIMAL}n = 4\n")), Err(Error::Schema { line: 5, .. })));
        assert!(matches!(parse_config(&format!("{MINIMAL}abort_rules = maybe\n")), Err(Error::Schema { .. })));
    }

    #[test]
    fn sections_and_comments() {
        let text = "# smoke\nn = 16 # part size\nseed = 1\n[params]\nm = 3\nd = 2\ntheta = 0.5\n[pipeline]\nabort_rules = false\ngreedy_attempts = 5\n[campaign]\nruns = 4\nthreads = 2\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.params.theta, 0.5);
        assert!(!c.pipeline.abort_rules);
        assert_eq!(c.pipeline.greedy_attempts, 5);
        assert_eq!(c.seeds().collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        assert_eq!(c.threads, 2);
    }
}
