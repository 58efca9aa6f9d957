//! Probability-proportional-to-size inclusion probabilities and randomized
//! systematic selection.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-9;

/// Inclusion probabilities `π_i = n·s_i / Σs`, with every `π_i > 1` capped at
/// one and the remaining budget spread over the uncapped elements until no
/// element exceeds one. The result sums to `n`.
pub fn inclusion_probs(sizes: &[f64], n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Design("sample size must be at least one".into()));
    }
    if n > sizes.len() {
        return Err(Error::Design(format!(
            "cannot sample {n} elements from {}",
            sizes.len()
        )));
    }
    if let Some(bad) = sizes.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::Design(format!("size measures must be positive, got {bad}")));
    }

    let mut capped = vec![false; sizes.len()];
    let mut pi = vec![0.0; sizes.len()];
    loop {
        let n_capped = capped.iter().filter(|&&c| c).count();
        let budget = (n - n_capped) as f64;
        let open_total: f64 = sizes
            .iter()
            .zip(&capped)
            .filter(|(_, &c)| !c)
            .map(|(s, _)| s)
            .sum();
        let mut newly_capped = false;
        for (i, s) in sizes.iter().enumerate() {
            if capped[i] {
                pi[i] = 1.0;
                continue;
            }
            pi[i] = budget * s / open_total;
            if pi[i] >= 1.0 {
                pi[i] = 1.0;
                capped[i] = true;
                newly_capped = true;
            }
        }
        if !newly_capped {
            return Ok(pi);
        }
    }
}

/// Randomized systematic PPS selection: shuffle, lay the probabilities end to
/// end, and keep every element whose half-open interval `[lo, hi)` contains
/// one of the points `u, u + 1, …, u + n − 1`, `u ~ U(0, 1)`.
///
/// Returns the selected indices in increasing order.
pub fn systematic_pps<R: Rng + ?Sized>(pi: &[f64], rng: &mut R) -> Result<Vec<usize>> {
    if let Some(bad) = pi.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
        return Err(Error::Design(format!("inclusion probability {bad} outside (0, 1]")));
    }
    let total: f64 = pi.iter().sum();
    let n = total.round();
    if (total - n).abs() > SUM_TOLERANCE || n < 1.0 {
        return Err(Error::Design(format!(
            "inclusion probabilities sum to {total}, not a positive integer"
        )));
    }

    let mut order: Vec<usize> = (0..pi.len()).collect();
    order.shuffle(rng);
    let u: f64 = rng.random();

    // Rescale so the last cumulative bound is exactly n.
    let scale = n / total;
    let mut selected = Vec::with_capacity(n as usize);
    let mut lo = 0.0;
    let mut running = 0.0;
    for (pos, &i) in order.iter().enumerate() {
        running += pi[i];
        let hi = if pos + 1 == order.len() { n } else { running * scale };
        // integers t with lo <= u + t < hi
        if (hi - u).ceil() > (lo - u).ceil() {
            selected.push(i);
        }
        lo = hi;
    }
    selected.sort_unstable();
    Ok(selected)
}
