//! Augmented and integrated weighted log-likelihoods.
//!
//! All densities are proper normal densities raised to the weights, so the
//! integrated form is exactly the log of `∫ Π_j N(y_jk | μ + a, 1/τ_ε)^w_jk ·
//! N(a | 0, 1/τ_a)^w_k da`. Priors are densities of the variances `1/τ`.

use std::f64::consts::PI;

use super::conditionals::InvGamma;
use super::{ParamState, PriorConfig, WeightedCluster, WeightedSample};
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn check_precisions(tau_a: f64, tau_eps: f64) -> Result<()> {
    if tau_a > 0.0 && tau_eps > 0.0 && tau_a.is_finite() && tau_eps.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "precisions must be positive and finite (tau_a = {tau_a}, tau_eps = {tau_eps})"
        )))
    }
}

/// Log of cluster `k`'s weighted likelihood with `a_k` integrated out.
///
/// With `S = Σ_j w_jk`, `φ = τ_ε S + τ_a w_k`, `ȳ` the weighted mean of
/// `y − μ` and `SS` the weighted sum of squares about it:
///
/// ```text
/// ½ln2π − ½lnφ + (S/2)ln(τ_ε/2π) + (w_k/2)ln(τ_a/2π) − ½τ_ε SS − ½ ȳ² τ_ε S τ_a w_k / φ
/// ```
///
/// which equals `−ln N(h_k | 0, 1/φ) − ½τ_ε Σ w_jk (y_jk − μ)² + …` with the
/// cancellation between the two quadratic terms done analytically.
pub fn integrated_cluster_loglik(k: usize, mu: f64, tau_a: f64, tau_eps: f64, data: &WeightedSample) -> f64 {
    ClusterSuff::of(&data.clusters[k]).loglik(mu, tau_a, tau_eps)
}

/// θ-free summaries of one cluster: `S`, weighted mean of `y`, `SS`, `w_k`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ClusterSuff {
    s: f64,
    centre: f64,
    ss: f64,
    w_k: f64,
}

impl ClusterSuff {
    pub(crate) fn of(c: &WeightedCluster) -> Self {
        let s = c.sum_w;
        let centre = c.y.iter().zip(&c.w_jk).map(|(y, w)| w * y).sum::<f64>() / s;
        let ss = c.y.iter().zip(&c.w_jk).map(|(y, w)| w * (y - centre).powi(2)).sum();
        ClusterSuff { s, centre, ss, w_k: c.w_k }
    }

    pub(crate) fn all(data: &WeightedSample) -> Vec<Self> {
        data.clusters.iter().map(Self::of).collect()
    }

    pub(crate) fn loglik(&self, mu: f64, tau_a: f64, tau_eps: f64) -> f64 {
        let ClusterSuff { s, centre, ss, w_k } = *self;
        let ybar = centre - mu;
        let phi = tau_eps * s + tau_a * w_k;
        0.5 * LN_2PI - 0.5 * phi.ln() + 0.5 * s * (tau_eps.ln() - LN_2PI) + 0.5 * w_k * (tau_a.ln() - LN_2PI)
            - 0.5 * tau_eps * ss
            - 0.5 * ybar * ybar * tau_eps * s * tau_a * w_k / phi
    }
}

/// Sum of [`integrated_cluster_loglik`] over sampled clusters. Only `mu`,
/// `tau_a` and `tau_eps` of `theta` are read.
pub fn integrated_loglik(theta: &ParamState, data: &WeightedSample) -> Result<f64> {
    check_precisions(theta.tau_a, theta.tau_eps)?;
    Ok((0..data.m())
        .map(|k| integrated_cluster_loglik(k, theta.mu, theta.tau_a, theta.tau_eps, data))
        .sum())
}

fn unit_loglik(y: f64, mean: f64, tau_eps: f64) -> f64 {
    0.5 * (tau_eps / (2.0 * PI)).ln() - 0.5 * tau_eps * (y - mean).powi(2)
}

fn effect_loglik(a: f64, tau_a: f64) -> f64 {
    0.5 * (tau_a / (2.0 * PI)).ln() - 0.5 * tau_a * a * a
}

fn check_state(state: &ParamState, data: &WeightedSample) -> Result<()> {
    check_precisions(state.tau_a, state.tau_eps)?;
    if state.a.len() != data.m() {
        return Err(Error::Domain(format!(
            "state has {} cluster effects, sample has {} clusters",
            state.a.len(),
            data.m()
        )));
    }
    Ok(())
}

/// `Σ_jk w_jk ℓ(y_jk | a_k, μ, τ_ε) + Σ_k w_k ℓ(a_k | τ_a)`.
pub fn augmented_loglik(state: &ParamState, data: &WeightedSample) -> Result<f64> {
    check_state(state, data)?;
    Ok(data
        .clusters
        .iter()
        .zip(&state.a)
        .map(|(c, &a)| {
            let units: f64 = c
                .y
                .iter()
                .zip(&c.w_jk)
                .map(|(&y, w)| w * unit_loglik(y, state.mu + a, state.tau_eps))
                .sum();
            units + c.w_k * effect_loglik(a, state.tau_a)
        })
        .sum())
}

/// `Σ_k w_k [Σ_j w_{j|k} ℓ(y_jk | a_k, θ) + ℓ(a_k | τ_a)]`: the cluster-nested
/// form, which equals [`augmented_loglik`] whenever `w_jk = w_k · w_{j|k}`.
pub fn collapsed_loglik(state: &ParamState, data: &WeightedSample) -> Result<f64> {
    check_state(state, data)?;
    Ok(data
        .clusters
        .iter()
        .zip(&state.a)
        .map(|(c, &a)| {
            let units: f64 = c
                .y
                .iter()
                .zip(&c.w_j_given_k)
                .map(|(&y, w)| w * unit_loglik(y, state.mu + a, state.tau_eps))
                .sum();
            c.w_k * (units + effect_loglik(a, state.tau_a))
        })
        .sum())
}

/// Inverse-gamma log-densities of `1/τ_a` and `1/τ_ε`.
pub fn log_prior(tau_a: f64, tau_eps: f64, prior: &PriorConfig) -> f64 {
    InvGamma {
        shape: prior.alpha1,
        scale: prior.beta1,
    }
    .ln_pdf(1.0 / tau_a)
        + InvGamma {
            shape: prior.alpha2,
            scale: prior.beta2,
        }
        .ln_pdf(1.0 / tau_eps)
}

/// Augmented log pseudo-posterior (up to the flat prior on `μ`), as a
/// density over `(μ, a, 1/τ_a, 1/τ_ε)`.
pub fn augmented_logpseudoposterior(state: &ParamState, data: &WeightedSample, prior: &PriorConfig) -> Result<f64> {
    Ok(augmented_loglik(state, data)? + log_prior(state.tau_a, state.tau_eps, prior))
}
