//! Random greedy edge-colouring of quasirandom regular bipartite graphs,
//! iterative absorption into regular factorisations, refinement into
//! 1-factorisations, and Monte-Carlo probes of spreadness and of list
//! edge-colouring thresholds.

pub mod absorb;
pub mod config;
pub mod error;
pub mod flow;
pub mod gen;
pub mod graph;
pub mod greedy;
pub mod io;
pub mod matching;
pub mod par;
pub mod params;
pub mod pipeline;
pub mod rng;
pub mod spread;
pub mod stats;
pub mod threshold;

pub use error::{Error, Result};
pub use graph::{BiGraph, DegreeBand, Factorisation};
pub use params::Params;
pub use rng::RngSeed;
