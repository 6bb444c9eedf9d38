//! Monte Carlo check of the Chernoff bound for sums over random permutations.

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChernoffCell {
    pub delta: f64,
    pub mu: f64,
    pub empirical: f64,
    pub bound: f64,
    pub std_err: f64,
    /// `empirical <= bound + 3·std_err`.
    pub within: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChernoffReport {
    pub mu: f64,
    pub trials: usize,
    pub cells: Vec<ChernoffCell>,
}

impl ChernoffReport {
    /// Cells with `μδ² ≥ threshold`, where the bound is informative.
    pub fn informative(&self, threshold: f64) -> impl Iterator<Item = &ChernoffCell> {
        self.cells.iter().filter(move |c| c.mu * c.delta * c.delta >= threshold)
    }
}

/// Samples `trials` uniform permutations `σ` of `n` items and measures
/// `X = Σ αᵢ·1[σ(i) ∈ I]` with `I` the first `i_size` positions, reporting
/// the empirical tail `P(|X−μ| > δμ)` against `exp(−μδ²/3)` per `δ`.
pub fn permutation_chernoff_check(
    n: usize,
    i_size: usize,
    alphas: &[f64],
    trials: usize,
    deltas: &[f64],
    seed: u64,
) -> Result<ChernoffReport> {
    if alphas.len() != n {
        return invalid("need one weight per item");
    }
    if alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return invalid("weights must lie in [0, 1]");
    }
    if i_size > n {
        return invalid("target set larger than the ground set");
    }
    if trials == 0 {
        return invalid("need at least one trial");
    }
    let mu = alphas.iter().sum::<f64>() * i_size as f64 / n as f64;
    // σ⁻¹(I) is a uniform i_size-subset, so only it needs sampling.
    let xs: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::sub_rng(seed, t);
            index::sample(&mut r, n, i_size).iter().map(|i| alphas[i]).sum()
        })
        .collect();
    let cells = deltas
        .iter()
        .map(|&delta| {
            let hits = xs.iter().filter(|&&x| (x - mu).abs() > delta * mu).count();
            let empirical = hits as f64 / trials as f64;
            let bound = (-mu * delta * delta / 3.0).exp().min(1.0);
            let std_err = (bound * (1.0 - bound) / trials as f64).sqrt();
            ChernoffCell {
                delta,
                mu,
                empirical,
                bound,
                std_err,
                within: empirical <= bound + 3.0 * std_err,
            }
        })
        .collect();
    Ok(ChernoffReport { mu, trials, cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_are_trivial() {
        let r = permutation_chernoff_check(50, 10, &[0.0; 50], 100, &[0.5, 1.0], 1).unwrap();
        assert_eq!(r.mu, 0.0);
        assert!(r.cells.iter().all(|c| c.empirical == 0.0 && c.within));
    }

    #[test]
    fn full_target_is_deterministic() {
        let r = permutation_chernoff_check(40, 40, &[1.0; 40], 50, &[0.01], 1).unwrap();
        assert_eq!(r.mu, 40.0);
        assert_eq!(r.cells[0].empirical, 0.0);
    }

    #[test]
    fn tail_within_bound() {
        let r = permutation_chernoff_check(1000, 100, &[1.0; 1000], 10_000, &[0.5], 7).unwrap();
        let c = &r.cells[0];
        assert!((c.bound - (-100.0 * 0.25 / 3.0f64).exp()).abs() < 1e-15);
        assert!(c.within, "{c:?}");
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(permutation_chernoff_check(3, 1, &[0.0, 2.0, 0.0], 5, &[1.0], 0).is_err());
        assert!(permutation_chernoff_check(3, 4, &[0.0; 3], 5, &[1.0], 0).is_err());
    }
}
