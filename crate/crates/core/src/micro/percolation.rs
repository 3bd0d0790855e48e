//! Monte Carlo estimate of the site-percolation spanning threshold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::clusters::{label_mask, spans, Axis};
use crate::error::{Error, Result};
use crate::field::GridSpec;

const BISECTION_STEPS: usize = 24;

fn site_draws(l: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..l * l).map(|_| rng.random::<f64>()).collect()
}

fn spans_at(spec: GridSpec, draws: &[f64], p: f64) -> bool {
    let mask: Vec<bool> = draws.iter().map(|&u| u < p).collect();
    spans(&label_mask(spec, &mask), Axis::X)
}

fn check_size(l: usize) -> Result<GridSpec> {
    GridSpec::square(l)
}

/// Fraction of `trials` random `l x l` maps at occupation `p` that span along x.
pub fn spanning_probability(l: usize, p: f64, trials: usize, seed: u64) -> Result<f64> {
    let spec = check_size(l)?;
    let hits = (0..trials as u64)
        .into_par_iter()
        .filter(|&t| spans_at(spec, &site_draws(l, seed.wrapping_add(t)), p))
        .count();
    Ok(hits as f64 / trials as f64)
}

/// Mean and standard error of the per-trial spanning threshold.
///
/// Each trial fixes one uniform draw per site (trial seed `seed + index`) and
/// bisects on the occupation probability for the onset of left-right spanning,
/// which is monotone in `p` for fixed draws.
pub fn percolation_threshold_mc(l: usize, trials: usize, seed: u64) -> Result<(f64, f64)> {
    if l < 32 {
        return Err(Error::InvalidInput(format!("lattice size {l} < 32")));
    }
    if trials < 50 {
        return Err(Error::InvalidInput(format!("{trials} trials < 50")));
    }
    let spec = check_size(l)?;
    let thresholds: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let draws = site_draws(l, seed.wrapping_add(t));
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                if spans_at(spec, &draws, mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect();
    let n = thresholds.len() as f64;
    let mean = thresholds.iter().sum::<f64>() / n;
    let var = thresholds.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}
