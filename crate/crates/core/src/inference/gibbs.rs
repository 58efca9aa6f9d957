//! Gibbs sampler over the augmented pseudo-posterior.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::conditionals::{a_k_conditional, mu_conditional, tau_a_conditional, tau_eps_conditional, InvGamma};
use super::{clamp_precision, ChainConfig, DrawsMatrix, PriorConfig, WeightedSample};
use crate::design::{SampleDraw, WeightSet};
use crate::error::{Error, Result};
use crate::rng::{stream, streams};

/// Runs the sampler with scan order `a_1..a_m, μ, τ_a, τ_ε`. Weight mode
/// enters only through `weights`.
pub fn run_gibbs(
    sample: &SampleDraw,
    weights: &WeightSet,
    prior: &PriorConfig,
    chain: &ChainConfig,
) -> Result<DrawsMatrix> {
    let data = WeightedSample::new(sample, weights)?;
    gibbs_on(&data, prior, chain)
}

/// Precision draw: if `1/τ ~ IG(shape, scale)` then `τ ~ Gamma(shape, rate = scale)`.
pub fn draw_precision<R: Rng>(ig: InvGamma, rng: &mut R) -> Result<f64> {
    let g = Gamma::new(ig.shape, 1.0 / ig.scale)
        .map_err(|e| Error::Domain(format!("invalid gamma parameters {ig:?}: {e}")))?;
    Ok(g.sample(rng))
}

pub(crate) fn gibbs_on(data: &WeightedSample, prior: &PriorConfig, chain: &ChainConfig) -> Result<DrawsMatrix> {
    prior.validate()?;
    chain.validate()?;
    let mut rng = stream(chain.seed, streams::CHAIN);
    let mut state = data.initial_state(&chain.init)?;
    let w_k = data.w_k();
    let mut draws = Vec::with_capacity((chain.n_iterations - chain.n_burnin).div_ceil(chain.thin));

    for it in 0..chain.n_iterations {
        for k in 0..data.m() {
            let p = a_k_conditional(k, state.mu, state.tau_a, state.tau_eps, data);
            let z: f64 = rng.sample(StandardNormal);
            state.a[k] = p.mean + z / p.precision.sqrt();
        }
        let p = mu_conditional(&state.a, state.tau_eps, data);
        let z: f64 = rng.sample(StandardNormal);
        state.mu = p.mean + z / p.precision.sqrt();

        let tau_a = draw_precision(tau_a_conditional(&state.a, &w_k, prior), &mut rng)?;
        state.tau_a = clamp_precision(tau_a, "tau_a");
        let tau_eps = draw_precision(tau_eps_conditional(state.mu, &state.a, data, prior), &mut rng)?;
        state.tau_eps = clamp_precision(tau_eps, "tau_eps");

        if !(state.mu.is_finite() && state.tau_a.is_finite() && state.tau_eps.is_finite())
            || state.a.iter().any(|a| !a.is_finite())
        {
            return Err(Error::Divergence {
                iteration: it,
                detail: format!("non-finite state: mu = {}, tau_a = {}, tau_eps = {}", state.mu, state.tau_a, state.tau_eps),
            });
        }
        if chain.keeps(it) {
            draws.push(state.clone());
        }
    }
    Ok(DrawsMatrix {
        draws,
        acceptance_rate: None,
    })
}
