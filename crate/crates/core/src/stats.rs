//! Small Monte-Carlo helpers.

use serde::{Deserialize, Serialize};

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.575_829_303_549;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
}

impl Proportion {
    pub fn new(successes: u64, trials: u64) -> Self {
        assert!(successes <= trials);
        Proportion { successes, trials }
    }

    pub fn estimate(&self) -> f64 {
        if self.trials == 0 {
            return f64::NAN;
        }
        self.successes as f64 / self.trials as f64
    }

    /// Wilson score interval at normal quantile `z`.
    pub fn wilson(&self, z: f64) -> (f64, f64) {
        if self.trials == 0 {
            return (0.0, 1.0);
        }
        let n = self.trials as f64;
        let p = self.estimate();
        let z2 = z * z;
        let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
        let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        ((centre - half).max(0.0), (centre + half).min(1.0))
    }

    pub fn wilson_radius(&self, z: f64) -> f64 {
        let (lo, hi) = self.wilson(z);
        (hi - lo) / 2.0
    }
}

/// Standard deviation of a sample mean of `trials` Bernoulli(`p`) draws.
pub fn bernoulli_sigma(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_estimate() {
        let p = Proportion::new(30, 100);
        let (lo, hi) = p.wilson(Z99);
        assert!(lo < 0.3 && 0.3 < hi);
        assert!(lo > 0.18 && hi < 0.44);
        assert_eq!(Proportion::new(0, 0).wilson(Z99), (0.0, 1.0));
        let (lo, _) = Proportion::new(0, 50).wilson(Z99);
        assert!(lo.abs() < 1e-12);
    }

    #[test]
    fn sigma_shrinks() {
        assert!((bernoulli_sigma(0.25, 100) - 0.0433).abs() < 1e-3);
    }
}
