//! Posterior mode of the integrated pseudo-posterior.

use serde::{Deserialize, Serialize};

use super::likelihood::{integrated_loglik, log_prior, ClusterSuff};
use super::nelder_mead::{minimize, NelderMeadOptions};
use super::{Init, ParamState, PriorConfig, WeightedSample, PRECISION_CEIL, PRECISION_FLOOR};
use crate::design::{SampleDraw, WeightSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapOptions {
    pub nelder_mead: NelderMeadOptions,
    /// Number of deterministic starts (1–3): the initial point, then two
    /// opposite perturbations of it.
    pub starts: usize,
}

impl Default for MapOptions {
    fn default() -> Self {
        MapOptions {
            nelder_mead: NelderMeadOptions::default(),
            starts: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapEstimate {
    pub state: ParamState,
    /// Integrated log-likelihood plus variance log-priors at the mode.
    pub log_posterior: f64,
    pub loglik: f64,
    pub converged: bool,
    pub evals: usize,
}

/// Maximizes integrated log-likelihood + inverse-gamma log-priors on the
/// variances over `(μ, ln τ_a, ln τ_ε)`. The log scale is a
/// reparameterization only; no Jacobian is added, so the optimum is the mode
/// of the density over the variances.
pub fn map_estimate(
    sample: &SampleDraw,
    weights: &WeightSet,
    prior: &PriorConfig,
    init: &Init,
    opts: &MapOptions,
) -> Result<MapEstimate> {
    let data = WeightedSample::new(sample, weights)?;
    map_on(&data, prior, init, opts)
}

pub fn objective(theta: &[f64], data: &WeightedSample, prior: &PriorConfig) -> f64 {
    suff_objective(theta, &ClusterSuff::all(data), prior)
}

fn suff_objective(theta: &[f64], suff: &[ClusterSuff], prior: &PriorConfig) -> f64 {
    let (lo, hi) = (PRECISION_FLOOR.ln(), PRECISION_CEIL.ln());
    if !(lo..=hi).contains(&theta[1]) || !(lo..=hi).contains(&theta[2]) || !theta[0].is_finite() {
        return f64::INFINITY;
    }
    let (tau_a, tau_eps) = (theta[1].exp(), theta[2].exp());
    let ll: f64 = suff.iter().map(|c| c.loglik(theta[0], tau_a, tau_eps)).sum();
    -(ll + log_prior(tau_a, tau_eps, prior))
}

pub(crate) fn map_on(data: &WeightedSample, prior: &PriorConfig, init: &Init, opts: &MapOptions) -> Result<MapEstimate> {
    prior.validate()?;
    if !(1..=3).contains(&opts.starts) {
        return Err(Error::Config(format!("MAP starts must be 1..=3, got {}", opts.starts)));
    }
    let start = data.initial_state(init)?;
    let m_hat: f64 = data.w_k().iter().sum();
    let mu_sd = (1.0 / (start.tau_a * m_hat) + 1.0 / (start.tau_eps * data.total_weight())).sqrt();
    let base = [start.mu, start.tau_a.ln(), start.tau_eps.ln()];
    let starts = [
        base,
        [base[0] + 0.1 * mu_sd, base[1] + 0.5, base[2] - 0.5],
        [base[0] - 0.1 * mu_sd, base[1] - 0.5, base[2] + 0.5],
    ];

    let suff = ClusterSuff::all(data);
    let mut best: Option<super::nelder_mead::NelderMeadResult> = None;
    let mut evals = 0;
    for x0 in starts.iter().take(opts.starts) {
        let r = minimize(|t| suff_objective(t, &suff, prior), x0, &opts.nelder_mead);
        evals += r.evals;
        if best.as_ref().is_none_or(|b| r.f < b.f) {
            best = Some(r);
        }
    }
    let best = best.expect("at least one start");
    if !best.f.is_finite() {
        return Err(Error::Divergence {
            iteration: evals,
            detail: "MAP objective is not finite at any simplex vertex".into(),
        });
    }
    let state = ParamState::new(best.x[0], best.x[1].exp(), best.x[2].exp());
    let loglik = integrated_loglik(&state, data)?;
    Ok(MapEstimate {
        log_posterior: -best.f,
        loglik,
        state,
        converged: best.converged,
        evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{build_weights, draw_two_stage_sample, ClusterDesignKind, TwoStageDesign, UnitDesignKind, WeightMode};
    use crate::inference::testutil::random_data;
    use crate::popgen::{generate_population, PopulationConfig};
    use rand::SeedableRng;

    #[test]
    fn mode_improves_on_start() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let data = random_data(&mut rng, 12, 6, 0.5, 2.0);
        let prior = PriorConfig::default();
        let start = data.moment_start();
        let f0 = -objective(&[start.mu, start.tau_a.ln(), start.tau_eps.ln()], &data, &prior);
        let est = map_on(&data, &prior, &Init::Auto, &MapOptions::default()).unwrap();
        assert!(est.log_posterior >= f0);
        assert!(est.converged);
        // local optimality along each axis
        let x = [est.state.mu, est.state.tau_a.ln(), est.state.tau_eps.ln()];
        for i in 0..3 {
            for d in [-1e-3, 1e-3] {
                let mut y = x;
                y[i] += d;
                assert!(-objective(&y, &data, &prior) <= est.log_posterior + 1e-8);
            }
        }
    }

    #[test]
    fn census_mode_near_moments() {
        let pop = generate_population(&PopulationConfig::balanced(200, 20, 1.0, 2.0, 3.0, 21)).unwrap();
        let design = TwoStageDesign {
            cluster_kind: ClusterDesignKind::Srs,
            unit_kind: UnitDesignKind::Srs,
            m: 200,
            n_k: 20,
            seed: 1,
        };
        let s = draw_two_stage_sample(&pop, &design).unwrap();
        let w = build_weights(&s, WeightMode::Double, true).unwrap();
        let est = map_estimate(&s, &w, &PriorConfig::default(), &Init::Auto, &MapOptions::default()).unwrap();
        let all: Vec<f64> = pop.y.iter().flatten().copied().collect();
        assert!((est.state.mu - crate::stats::mean(&all)).abs() < 1e-3);
        assert!((est.state.sigma_a() - 2.0).abs() < 0.35, "{}", est.state.sigma_a());
        assert!((est.state.sigma_eps() - 3.0).abs() < 0.1, "{}", est.state.sigma_eps());
    }

    #[test]
    fn bad_options() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let data = random_data(&mut rng, 3, 3, 1.0, 1.0);
        let opts = MapOptions {
            starts: 0,
            ..MapOptions::default()
        };
        assert!(map_on(&data, &PriorConfig::default(), &Init::Auto, &opts).is_err());
    }
}
