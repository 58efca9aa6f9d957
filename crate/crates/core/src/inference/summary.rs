//! JSON-ready summaries of a fit.

use serde::{Deserialize, Serialize};

use super::map::MapEstimate;
use super::{DrawsMatrix, Param, ParamState};
use crate::design::WeightMode;

/// One value per reported parameter, keyed as in the output files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamTriple {
    pub b0: f64,
    pub sigma_a: f64,
    pub sigma_eps: f64,
}

impl ParamTriple {
    pub fn from_fn(mut f: impl FnMut(Param) -> f64) -> Self {
        ParamTriple {
            b0: f(Param::Mu),
            sigma_a: f(Param::SigmaA),
            sigma_eps: f(Param::SigmaEps),
        }
    }

    pub fn from_state(s: &ParamState) -> Self {
        Self::from_fn(|p| s.get(p))
    }

    pub fn get(&self, p: Param) -> f64 {
        match p {
            Param::Mu => self.b0,
            Param::SigmaA => self.sigma_a,
            Param::SigmaEps => self.sigma_eps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub q05: ParamTriple,
    pub q50: ParamTriple,
    pub q95: ParamTriple,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub mode: WeightMode,
    /// `gibbs`, `integrated` or `map`.
    pub method: String,
    pub point_estimates: ParamTriple,
    pub posterior_sd: Option<ParamTriple>,
    pub quantiles: Option<Quantiles>,
    pub acceptance_rate: Option<f64>,
    pub converged: Option<bool>,
}

impl EstimatorSummary {
    /// Posterior means as point estimates; `σ = τ^{−1/2}` is applied per draw.
    pub fn from_draws(mode: WeightMode, method: &str, draws: &DrawsMatrix) -> Self {
        EstimatorSummary {
            mode,
            method: method.to_string(),
            point_estimates: ParamTriple::from_fn(|p| draws.mean(p)),
            posterior_sd: Some(ParamTriple::from_fn(|p| draws.sd(p))),
            quantiles: Some(Quantiles {
                q05: ParamTriple::from_fn(|p| draws.quantile(p, 0.05)),
                q50: ParamTriple::from_fn(|p| draws.quantile(p, 0.5)),
                q95: ParamTriple::from_fn(|p| draws.quantile(p, 0.95)),
            }),
            acceptance_rate: draws.acceptance_rate,
            converged: None,
        }
    }

    pub fn from_map(mode: WeightMode, est: &MapEstimate) -> Self {
        EstimatorSummary {
            mode,
            method: "map".into(),
            point_estimates: ParamTriple::from_state(&est.state),
            posterior_sd: None,
            quantiles: None,
            acceptance_rate: None,
            converged: Some(est.converged),
        }
    }
}
