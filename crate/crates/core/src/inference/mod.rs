//! Estimation of `(μ, σ_a, σ_ε)` from a weighted two-stage sample.
//!
//! Three routes share one weighted data view:
//!
//! * [`run_gibbs`]: Gibbs scan over the augmented pseudo-posterior, co-sampling
//!   the cluster effects `a_k` from their conjugate full conditionals;
//! * [`run_integrated_mcmc`]: adaptive random-walk Metropolis on the
//!   pseudo-posterior with every `a_k` integrated out analytically;
//! * [`map_estimate`]: Nelder–Mead maximization of that integrated
//!   pseudo-posterior.
//!
//! Model, per sampled unit `j` in sampled cluster `k`:
//!
//! ```text
//! y_jk | μ, a_k, τ_ε  ~  N(μ + a_k, 1/τ_ε) ^ w_jk
//! a_k  | τ_a          ~  N(0, 1/τ_a) ^ w_k
//! μ ~ flat,  1/τ_a ~ IG(α₁, β₁),  1/τ_ε ~ IG(α₂, β₂)
//! ```

mod conditionals;
mod gibbs;
mod integrated;
mod likelihood;
mod map;
mod nelder_mead;
mod summary;

use serde::{Deserialize, Serialize};

use crate::design::{SampleDraw, WeightSet};
use crate::error::{Error, Result};

pub use conditionals::{
    a_k_conditional, mu_conditional, tau_a_conditional, tau_eps_conditional, InvGamma, NormalParams,
};
pub use gibbs::run_gibbs;
pub use integrated::run_integrated_mcmc;
pub use likelihood::{
    augmented_loglik, augmented_logpseudoposterior, collapsed_loglik, integrated_cluster_loglik,
    integrated_loglik, log_prior,
};
pub use map::{map_estimate, MapEstimate, MapOptions};
pub use nelder_mead::{minimize, NelderMeadOptions, NelderMeadResult};
pub use summary::{EstimatorSummary, ParamTriple, Quantiles};
pub use gibbs::draw_precision;
pub use integrated::log_target as integrated_log_target;
pub use map::objective as map_objective;

pub(crate) const PRECISION_FLOOR: f64 = 1e-12;
pub(crate) const PRECISION_CEIL: f64 = 1e12;

/// Inverse-gamma hyperparameters for the two variances. `μ` has a flat prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    pub alpha1: f64,
    pub beta1: f64,
    pub alpha2: f64,
    pub beta2: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig {
            alpha1: 0.1,
            beta1: 0.1,
            alpha2: 0.1,
            beta2: 0.1,
        }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x > 0.0 && x.is_finite();
        if ok(self.alpha1) && ok(self.beta1) && ok(self.alpha2) && ok(self.beta2) {
            Ok(())
        } else {
            Err(Error::Config(format!("prior hyperparameters must be positive: {self:?}")))
        }
    }
}

/// One state of the chain. `a` holds the sampled-cluster effects, or is empty
/// for the integrated routes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamState {
    pub mu: f64,
    pub tau_a: f64,
    pub tau_eps: f64,
    pub a: Vec<f64>,
}

impl ParamState {
    pub fn new(mu: f64, tau_a: f64, tau_eps: f64) -> Self {
        ParamState {
            mu,
            tau_a,
            tau_eps,
            a: Vec::new(),
        }
    }

    pub fn sigma_a(&self) -> f64 {
        self.tau_a.powf(-0.5)
    }

    pub fn sigma_eps(&self) -> f64 {
        self.tau_eps.powf(-0.5)
    }

    pub fn get(&self, param: Param) -> f64 {
        match param {
            Param::Mu => self.mu,
            Param::SigmaA => self.sigma_a(),
            Param::SigmaEps => self.sigma_eps(),
        }
    }

    pub(crate) fn check_precisions(&self) -> Result<()> {
        for (name, v) in [("tau_a", self.tau_a), ("tau_eps", self.tau_eps)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !self.mu.is_finite() {
            return Err(Error::Domain(format!("mu must be finite, got {}", self.mu)));
        }
        Ok(())
    }
}

/// Reported parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    Mu,
    SigmaA,
    SigmaEps,
}

impl Param {
    pub const ALL: [Param; 3] = [Param::Mu, Param::SigmaA, Param::SigmaEps];

    pub fn label(self) -> &'static str {
        match self {
            Param::Mu => "b0",
            Param::SigmaA => "sigma_a",
            Param::SigmaEps => "sigma_eps",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Moment-based start computed from the weighted data.
    Auto,
    Given(ParamState),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub n_iterations: usize,
    pub n_burnin: usize,
    pub thin: usize,
    pub seed: u64,
    pub init: Init,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            n_iterations: 4000,
            n_burnin: 2000,
            thin: 1,
            seed: 0,
            init: Init::Auto,
        }
    }
}

impl ChainConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_burnin >= self.n_iterations {
            return Err(Error::Config(format!(
                "burn-in ({}) must be shorter than the chain ({})",
                self.n_burnin, self.n_iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        Ok(())
    }

    pub(crate) fn keeps(&self, iteration: usize) -> bool {
        iteration >= self.n_burnin && (iteration - self.n_burnin).is_multiple_of(self.thin)
    }
}

/// Stored post-burn-in, thinned chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawsMatrix {
    pub draws: Vec<ParamState>,
    /// Post-adaptation acceptance rate (Metropolis routes only).
    pub acceptance_rate: Option<f64>,
}

impl DrawsMatrix {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn values(&self, param: Param) -> Vec<f64> {
        self.draws.iter().map(|d| d.get(param)).collect()
    }

    pub fn mean(&self, param: Param) -> f64 {
        crate::stats::mean(&self.values(param))
    }

    pub fn median(&self, param: Param) -> f64 {
        crate::stats::quantile(&self.values(param), 0.5)
    }

    pub fn sd(&self, param: Param) -> f64 {
        crate::stats::std_dev(&self.values(param))
    }

    pub fn quantile(&self, param: Param, p: f64) -> f64 {
        crate::stats::quantile(&self.values(param), p)
    }

    pub fn has_effects(&self) -> bool {
        self.draws.first().is_some_and(|d| !d.a.is_empty())
    }

    /// Writes `iteration,mu,sigma_a,sigma_eps[,a_1..a_m]`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W, include_effects: bool) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let m = if include_effects {
            self.draws.first().map_or(0, |d| d.a.len())
        } else {
            0
        };
        let mut header: Vec<String> = ["iteration", "mu", "sigma_a", "sigma_eps"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend((1..=m).map(|k| format!("a_{k}")));
        out.write_record(&header)?;
        for (i, d) in self.draws.iter().enumerate() {
            let mut row = vec![
                i.to_string(),
                d.mu.to_string(),
                d.sigma_a().to_string(),
                d.sigma_eps().to_string(),
            ];
            row.extend(d.a.iter().take(m).map(f64::to_string));
            out.write_record(&row)?;
        }
        out.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

/// Cluster-major view of a sample and its weights.
#[derive(Debug, Clone)]
pub struct WeightedSample {
    pub(crate) clusters: Vec<WeightedCluster>,
    sum_w: f64,
}

/// One sampled cluster's responses and weights.
#[derive(Debug, Clone)]
pub struct WeightedCluster {
    pub y: Vec<f64>,
    pub w_jk: Vec<f64>,
    pub w_j_given_k: Vec<f64>,
    pub w_k: f64,
    /// `Σ_j w_jk`
    pub sum_w: f64,
}

impl WeightedCluster {
    /// Builds a cluster with `w_jk = w_k · w_{j|k}`.
    pub fn new(y: Vec<f64>, w_j_given_k: Vec<f64>, w_k: f64) -> Self {
        let w_jk: Vec<f64> = w_j_given_k.iter().map(|w| w_k * w).collect();
        WeightedCluster {
            sum_w: w_jk.iter().sum(),
            y,
            w_jk,
            w_j_given_k,
            w_k,
        }
    }
}

impl WeightedSample {
    pub fn new(sample: &SampleDraw, weights: &WeightSet) -> Result<Self> {
        if sample.m() != weights.clusters.len() {
            return Err(Error::Design(format!(
                "sample has {} clusters but weights have {}",
                sample.m(),
                weights.clusters.len()
            )));
        }
        let clusters = sample
            .clusters
            .iter()
            .zip(&weights.clusters)
            .map(|(c, w)| {
                if c.units.len() != w.w_jk.len() {
                    return Err(Error::Design(format!(
                        "cluster {} has {} units but {} weights",
                        c.cluster_id,
                        c.units.len(),
                        w.w_jk.len()
                    )));
                }
                Ok(WeightedCluster {
                    y: c.units.iter().map(|u| u.y).collect(),
                    w_jk: w.w_jk.clone(),
                    w_j_given_k: w.w_j_given_k.clone(),
                    w_k: w.w_k,
                    sum_w: w.w_jk.iter().sum(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_clusters(clusters))
    }

    pub fn from_clusters(clusters: Vec<WeightedCluster>) -> Self {
        let sum_w = clusters.iter().map(|c| c.sum_w).sum();
        WeightedSample { clusters, sum_w }
    }

    pub fn clusters(&self) -> &[WeightedCluster] {
        &self.clusters
    }

    pub fn m(&self) -> usize {
        self.clusters.len()
    }

    pub fn n(&self) -> usize {
        self.clusters.iter().map(|c| c.y.len()).sum()
    }

    /// `Σ_jk w_jk`
    pub fn total_weight(&self) -> f64 {
        self.sum_w
    }

    pub fn w_k(&self) -> Vec<f64> {
        self.clusters.iter().map(|c| c.w_k).collect()
    }

    /// Moment-based starting point: weighted mean, inverse weighted
    /// within-cluster variance, inverse variance of weighted cluster means.
    pub fn moment_start(&self) -> ParamState {
        const VAR_FLOOR: f64 = 1e-4;
        let mu = self
            .clusters
            .iter()
            .flat_map(|c| c.y.iter().zip(&c.w_jk).map(|(y, w)| w * y))
            .sum::<f64>()
            / self.sum_w;
        let cluster_means: Vec<f64> = self
            .clusters
            .iter()
            .map(|c| c.y.iter().zip(&c.w_jk).map(|(y, w)| w * y).sum::<f64>() / c.sum_w)
            .collect();
        let within = self
            .clusters
            .iter()
            .zip(&cluster_means)
            .flat_map(|(c, m)| c.y.iter().zip(&c.w_jk).map(move |(y, w)| w * (y - m).powi(2)))
            .sum::<f64>()
            / self.sum_w;
        let between = if cluster_means.len() > 1 {
            let total_wk: f64 = self.clusters.iter().map(|c| c.w_k).sum();
            let centre = self
                .clusters
                .iter()
                .zip(&cluster_means)
                .map(|(c, m)| c.w_k * m)
                .sum::<f64>()
                / total_wk;
            self.clusters
                .iter()
                .zip(&cluster_means)
                .map(|(c, m)| c.w_k * (m - centre).powi(2))
                .sum::<f64>()
                / total_wk
        } else {
            0.0
        };
        let a = cluster_means.iter().map(|m| m - mu).collect();
        ParamState {
            mu,
            tau_a: 1.0 / between.max(VAR_FLOOR),
            tau_eps: 1.0 / within.max(VAR_FLOOR),
            a,
        }
    }

    pub(crate) fn initial_state(&self, init: &Init) -> Result<ParamState> {
        match init {
            Init::Auto => Ok(self.moment_start()),
            Init::Given(state) => {
                state.check_precisions()?;
                let mut s = state.clone();
                if s.a.len() != self.m() {
                    s.a = self.moment_start().a;
                }
                Ok(s)
            }
        }
    }
}

pub(crate) fn clamp_precision(value: f64, name: &str) -> f64 {
    if value.is_nan() {
        return value;
    }
    if !(PRECISION_FLOOR..=PRECISION_CEIL).contains(&value) {
        log::warn!("{name} = {value:e} clamped to [{PRECISION_FLOOR:e}, {PRECISION_CEIL:e}]");
        value.clamp(PRECISION_FLOOR, PRECISION_CEIL)
    } else {
        value
    }
}
