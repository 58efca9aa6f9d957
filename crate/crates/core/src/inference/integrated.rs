//! Adaptive random-walk Metropolis on the integrated pseudo-posterior.
//!
//! The chain moves on `θ = (μ, ln τ_a, ln τ_ε)`. During burn-in a global
//! log-scale is tuned by Robbins–Monro towards acceptance 0.234 and the
//! per-coordinate proposal SDs track the running empirical SDs; both are
//! frozen afterwards, so the kept draws come from a fixed Markov kernel.

use rand::Rng;
use rand_distr::StandardNormal;

use super::likelihood::ClusterSuff;
use super::{ChainConfig, DrawsMatrix, ParamState, PriorConfig, WeightedSample, PRECISION_CEIL, PRECISION_FLOOR};
use crate::design::{SampleDraw, WeightSet};
use crate::error::{Error, Result};
use crate::rng::{stream, streams};

const TARGET_ACCEPT: f64 = 0.234;
/// Iterations before the empirical SDs replace the initial ones.
const SD_WARMUP: usize = 200;

pub fn run_integrated_mcmc(
    sample: &SampleDraw,
    weights: &WeightSet,
    prior: &PriorConfig,
    chain: &ChainConfig,
) -> Result<DrawsMatrix> {
    let data = WeightedSample::new(sample, weights)?;
    integrated_on(&data, prior, chain)
}

/// Log target in `θ`, including the Jacobian of the log transform:
/// each variance prior contributes `α η − β e^η` for `η = ln τ`.
pub fn log_target(theta: &[f64; 3], data: &WeightedSample, prior: &PriorConfig) -> f64 {
    suff_log_target(theta, &ClusterSuff::all(data), prior)
}

fn suff_log_target(theta: &[f64; 3], suff: &[ClusterSuff], prior: &PriorConfig) -> f64 {
    let (lo, hi) = (PRECISION_FLOOR.ln(), PRECISION_CEIL.ln());
    if !(lo..=hi).contains(&theta[1]) || !(lo..=hi).contains(&theta[2]) || !theta[0].is_finite() {
        return f64::NEG_INFINITY;
    }
    let (tau_a, tau_eps) = (theta[1].exp(), theta[2].exp());
    let ll: f64 = suff.iter().map(|c| c.loglik(theta[0], tau_a, tau_eps)).sum();
    ll + prior.alpha1 * theta[1] - prior.beta1 * tau_a + prior.alpha2 * theta[2] - prior.beta2 * tau_eps
}

pub(crate) fn integrated_on(data: &WeightedSample, prior: &PriorConfig, chain: &ChainConfig) -> Result<DrawsMatrix> {
    let suff = ClusterSuff::all(data);
    integrated_with(data, chain, |t| suff_log_target(t, &suff, prior), prior)
}

/// Sampler core, generic in the target so it can be checked on known densities.
fn integrated_with<F: Fn(&[f64; 3]) -> f64>(
    data: &WeightedSample,
    chain: &ChainConfig,
    target: F,
    prior: &PriorConfig,
) -> Result<DrawsMatrix> {
    prior.validate()?;
    chain.validate()?;
    let mut rng = stream(chain.seed, streams::CHAIN);
    let start = data.initial_state(&chain.init)?;
    let mut theta = [start.mu, start.tau_a.ln(), start.tau_eps.ln()];
    let mut current = target(&theta);
    if !current.is_finite() {
        return Err(Error::Divergence {
            iteration: 0,
            detail: format!("log target is not finite at the start {theta:?}"),
        });
    }

    let m_hat: f64 = data.w_k().iter().sum();
    let n_hat = data.total_weight();
    let mut sd = [
        (1.0 / (start.tau_a * m_hat) + 1.0 / (start.tau_eps * n_hat)).sqrt(),
        (2.0 / data.m() as f64).sqrt(),
        (2.0 / data.n() as f64).sqrt(),
    ];
    let mut log_lambda = (2.38 / 3f64.sqrt()).ln();

    // Welford accumulators over burn-in states
    let mut count = 0.0;
    let mut mean = [0.0; 3];
    let mut m2 = [0.0; 3];

    let mut accepted = 0usize;
    let mut draws = Vec::with_capacity((chain.n_iterations - chain.n_burnin).div_ceil(chain.thin));
    for it in 0..chain.n_iterations {
        let lambda = log_lambda.exp();
        let mut proposal = theta;
        for i in 0..3 {
            let z: f64 = rng.sample(StandardNormal);
            proposal[i] += lambda * sd[i] * z;
        }
        let cand = target(&proposal);
        let log_alpha = if cand.is_nan() { f64::NEG_INFINITY } else { (cand - current).min(0.0) };
        let u: f64 = rng.random();
        let accept = u.ln() < log_alpha;
        if accept {
            theta = proposal;
            current = cand;
        }

        if it < chain.n_burnin {
            let gamma = 1.0 / ((it + 1) as f64).powf(0.6);
            log_lambda += gamma * (log_alpha.exp() - TARGET_ACCEPT);
            count += 1.0;
            for i in 0..3 {
                let d = theta[i] - mean[i];
                mean[i] += d / count;
                m2[i] += d * (theta[i] - mean[i]);
            }
            if it + 1 >= SD_WARMUP {
                for i in 0..3 {
                    let s = (m2[i] / (count - 1.0)).sqrt();
                    if s.is_finite() && s > 1e-8 {
                        sd[i] = s;
                    }
                }
            }
        } else if accept {
            accepted += 1;
        }

        if !current.is_finite() {
            return Err(Error::Divergence {
                iteration: it,
                detail: format!("log target became non-finite at {theta:?}"),
            });
        }
        if chain.keeps(it) {
            draws.push(ParamState::new(theta[0], theta[1].exp(), theta[2].exp()));
        }
    }
    Ok(DrawsMatrix {
        draws,
        acceptance_rate: Some(accepted as f64 / (chain.n_iterations - chain.n_burnin) as f64),
    })
}
