//! The constant hierarchy of the greedy process, with explicit desk-scale
//! values. The asymptotic ordering `1/K << 1/d << θ << δ' << η << 1/C << ε
//! << δ << 1/L << 1` cannot hold at small `n`; every value is set directly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Part size of the host.
    pub n: usize,
    /// Number of colours.
    pub m: usize,
    /// Target class degree; need not be an integer.
    pub d: f64,
    pub big_k: f64,
    pub big_c: f64,
    pub big_l: f64,
    pub theta: f64,
    pub delta_prime: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
}

impl Default for Params {
    fn default() -> Self {
        Params::preset()
    }
}

impl Params {
    /// Desk-scale starting point. Does NOT satisfy the asymptotic hierarchy.
    pub fn preset() -> Self {
        Params {
            n: 200,
            m: 7,
            d: 6.0,
            big_k: 1000.0,
            big_c: 4.0,
            big_l: 4.0,
            theta: 0.02,
            delta_prime: 0.01,
            eta: 0.05,
            epsilon: 0.1,
            delta: 0.2,
            seed: 0,
        }
    }

    pub fn dm(&self) -> f64 {
        self.d * self.m as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.n == 0 || self.m == 0 {
            return bad("n and m must be positive".into());
        }
        for (name, v) in [("d", self.d), ("K", self.big_k), ("C", self.big_c), ("L", self.big_l)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [
            ("theta", self.theta),
            ("delta_prime", self.delta_prime),
            ("eta", self.eta),
            ("epsilon", self.epsilon),
            ("delta", self.delta),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{name} must lie in (0,1), got {v}"));
            }
        }
        Ok(())
    }
}
