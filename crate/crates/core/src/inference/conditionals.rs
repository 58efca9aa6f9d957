//! Closed-form full conditionals of the augmented pseudo-posterior.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::{PriorConfig, WeightedSample};

/// Normal distribution by mean and precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalParams {
    pub mean: f64,
    pub precision: f64,
}

impl NormalParams {
    pub fn ln_pdf(&self, x: f64) -> f64 {
        0.5 * (self.precision / (2.0 * PI)).ln() - 0.5 * self.precision * (x - self.mean).powi(2)
    }
}

/// Inverse-gamma distribution of a variance, `IG(shape, scale)`:
/// density `scale^shape / Γ(shape) · v^(−shape−1) · exp(−scale / v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvGamma {
    pub shape: f64,
    pub scale: f64,
}

impl InvGamma {
    pub fn ln_pdf(&self, v: f64) -> f64 {
        self.shape * self.scale.ln() - ln_gamma(self.shape) - (self.shape + 1.0) * v.ln() - self.scale / v
    }

    /// Mean of the variance; infinite for `shape <= 1`.
    pub fn mean(&self) -> f64 {
        if self.shape > 1.0 {
            self.scale / (self.shape - 1.0)
        } else {
            f64::INFINITY
        }
    }
}

/// `a_k | μ, τ_a, τ_ε ~ N(h_k, 1/φ_k)` with `φ_k = τ_ε Σ_j w_jk + τ_a w_k` and
/// `h_k = τ_ε Σ_j w_jk (y_jk − μ) / φ_k`.
pub fn a_k_conditional(k: usize, mu: f64, tau_a: f64, tau_eps: f64, data: &WeightedSample) -> NormalParams {
    let c = &data.clusters[k];
    let phi = tau_eps * c.sum_w + tau_a * c.w_k;
    let e = tau_eps * c.y.iter().zip(&c.w_jk).map(|(y, w)| w * (y - mu)).sum::<f64>();
    NormalParams {
        mean: e / phi,
        precision: phi,
    }
}

/// `μ | a, τ_ε ~ N(Σ w_jk (y_jk − a_k) / Σ w_jk, 1/(τ_ε Σ w_jk))`.
pub fn mu_conditional(a: &[f64], tau_eps: f64, data: &WeightedSample) -> NormalParams {
    let weighted: f64 = data
        .clusters
        .iter()
        .zip(a)
        .map(|(c, a_k)| c.y.iter().zip(&c.w_jk).map(|(y, w)| w * (y - a_k)).sum::<f64>())
        .sum();
    NormalParams {
        mean: weighted / data.total_weight(),
        precision: tau_eps * data.total_weight(),
    }
}

/// `1/τ_a | a ~ IG(½ Σ w_k + α₁, ½ Σ w_k a_k² + β₁)`.
pub fn tau_a_conditional(a: &[f64], w_k: &[f64], prior: &PriorConfig) -> InvGamma {
    let (sw, swa2) = a
        .iter()
        .zip(w_k)
        .fold((0.0, 0.0), |(s, q), (a, w)| (s + w, q + w * a * a));
    InvGamma {
        shape: 0.5 * sw + prior.alpha1,
        scale: 0.5 * swa2 + prior.beta1,
    }
}

/// `1/τ_ε | μ, a ~ IG(½ Σ w_jk + α₂, ½ Σ w_jk (y_jk − μ − a_k)² + β₂)`.
pub fn tau_eps_conditional(mu: f64, a: &[f64], data: &WeightedSample, prior: &PriorConfig) -> InvGamma {
    let ss: f64 = data
        .clusters
        .iter()
        .zip(a)
        .map(|(c, a_k)| {
            c.y.iter()
                .zip(&c.w_jk)
                .map(|(y, w)| w * (y - mu - a_k).powi(2))
                .sum::<f64>()
        })
        .sum();
    InvGamma {
        shape: 0.5 * data.total_weight() + prior.alpha2,
        scale: 0.5 * ss + prior.beta2,
    }
}
