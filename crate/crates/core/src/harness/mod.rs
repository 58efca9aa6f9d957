//! Replication driver: for each replicate, a fresh population, one two-stage
//! sample and every requested estimator; then cross-replicate quantiles.
//!
//! Seeding: replicate `r` (1-based) uses `rs = split(base_seed, r)`, and
//! derives the population, sample and chain seeds as `split(rs, 0|1|2)`.
//! Replicates are therefore independent of each other and of execution order.

mod config;
mod output;

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::design::{build_weights, draw_two_stage_sample, SampleDraw, TwoStageDesign, WeightMode, WeightSet};
use crate::error::{Error, Result};
use crate::inference::{
    map_estimate, run_gibbs, run_integrated_mcmc, ChainConfig, DrawsMatrix, Init, MapOptions, Param, ParamTriple,
    PriorConfig, Quantiles,
};
use crate::popgen::{generate_population, Population, PopulationConfig};
use crate::rng::split;
use crate::stats;

pub use config::{load_scenarios, DeskScaling, GridSpec, ScenarioFile};
pub use output::{emit_plot_data, read_estimates_csv, EmittedFiles, EstimateRow, MAP_PLOT_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    EqualGibbs,
    SingleGibbs,
    DoubleGibbs,
    #[serde(rename = "double_integrated_mcmc")]
    DoubleIntegratedMcmc,
    DoubleMap,
}

impl Estimator {
    pub const ALL: [Estimator; 5] = [
        Estimator::EqualGibbs,
        Estimator::SingleGibbs,
        Estimator::DoubleGibbs,
        Estimator::DoubleIntegratedMcmc,
        Estimator::DoubleMap,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Estimator::EqualGibbs => "EqualGibbs",
            Estimator::SingleGibbs => "SingleGibbs",
            Estimator::DoubleGibbs => "DoubleGibbs",
            Estimator::DoubleIntegratedMcmc => "DoubleIntegratedMCMC",
            Estimator::DoubleMap => "DoubleMAP",
        }
    }

    pub fn weight_mode(self) -> WeightMode {
        match self {
            Estimator::EqualGibbs => WeightMode::Equal,
            Estimator::SingleGibbs => WeightMode::Single,
            _ => WeightMode::Double,
        }
    }
}

/// Functional of the posterior draws reported as the point estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointEstimate {
    #[default]
    Mean,
    Median,
}

impl PointEstimate {
    fn of(self, draws: &DrawsMatrix) -> ParamTriple {
        ParamTriple::from_fn(|p| match self {
            PointEstimate::Mean => draws.mean(p),
            PointEstimate::Median => draws.median(p),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    /// Template; its seed is replaced per replicate.
    pub population: PopulationConfig,
    /// Template; its seed is replaced per replicate.
    pub design: TwoStageDesign,
    pub estimators: Vec<Estimator>,
    pub replicates: usize,
    pub base_seed: u64,
    pub chain: ChainConfig,
    pub prior: PriorConfig,
    pub normalize_weights: bool,
    pub point_estimate: PointEstimate,
    pub map: MapOptions,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config(format!("{}: replicates must be at least 1", self.id)));
        }
        if self.estimators.is_empty() {
            return Err(Error::Config(format!("{}: no estimators requested", self.id)));
        }
        self.population.validate()?;
        self.chain.validate()?;
        self.prior.validate()?;
        let clusters = self.population.clusters();
        if self.design.m == 0 || self.design.m > clusters {
            return Err(Error::Config(format!("{}: m = {} must lie in 1..={clusters}", self.id, self.design.m)));
        }
        let smallest = self.population.units_per_cluster.iter().copied().min().unwrap_or(0);
        if self.design.n_k == 0 || self.design.n_k > smallest {
            return Err(Error::Config(format!(
                "{}: n_k = {} must lie in 1..={smallest}",
                self.id, self.design.n_k
            )));
        }
        Ok(())
    }

    /// `(population seed, sample seed, chain seed)` of replicate `r` (1-based).
    pub fn replicate_seeds(&self, r: usize) -> (u64, u64, u64) {
        let rs = split(self.base_seed, r as u64);
        (split(rs, 0), split(rs, 1), split(rs, 2))
    }

    /// Population and sample of replicate `r` (1-based).
    pub fn realize(&self, r: usize) -> Result<(Population, SampleDraw)> {
        let (pop_seed, sample_seed, _) = self.replicate_seeds(r);
        let population = generate_population(&PopulationConfig {
            seed: pop_seed,
            ..self.population.clone()
        })?;
        let sample = draw_two_stage_sample(
            &population,
            &TwoStageDesign {
                seed: sample_seed,
                ..self.design
            },
        )?;
        Ok((population, sample))
    }

    /// Generating values, keyed by parameter label.
    pub fn reference(&self) -> ParamTriple {
        ParamTriple {
            b0: self.population.mu0,
            sigma_a: self.population.sigma_a0,
            sigma_eps: self.population.sigma_eps0,
        }
    }
}

/// One estimator on one replicate. Exactly one of `estimate` / `error` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub estimate: Option<ParamTriple>,
    pub acceptance_rate: Option<f64>,
    pub converged: Option<bool>,
    pub error: Option<String>,
}

impl ReplicateResult {
    pub fn is_ok(&self) -> bool {
        self.estimate.is_some()
    }

    fn failed(replicate: usize, error: &Error) -> Self {
        ReplicateResult {
            replicate,
            estimate: None,
            acceptance_rate: None,
            converged: None,
            error: Some(error.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub estimator: Estimator,
    /// One entry per replicate, in replicate order; failures are kept.
    pub replicates: Vec<ReplicateResult>,
    /// Type-7 quantiles over successful replicates; `None` if all failed.
    pub quantiles: Option<Quantiles>,
    pub n_failed: usize,
}

impl CellReport {
    pub fn estimates(&self, param: Param) -> Vec<f64> {
        self.replicates
            .iter()
            .filter_map(|r| r.estimate.map(|e| e.get(param)))
            .collect()
    }

    pub fn median(&self, param: Param) -> f64 {
        stats::quantile(&self.estimates(param), 0.5)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationReport {
    pub scenario: Scenario,
    pub cells: Vec<CellReport>,
    /// Not written to any CSV, so reruns compare byte-for-byte.
    pub wall_time_secs: f64,
}

impl ReplicationReport {
    pub fn cell(&self, estimator: Estimator) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.estimator == estimator)
    }
}

pub(crate) fn quantiles_of(values: &[Vec<f64>; 3]) -> Option<Quantiles> {
    if values[0].is_empty() {
        return None;
    }
    let q = |p: f64| ParamTriple {
        b0: stats::quantile(&values[0], p),
        sigma_a: stats::quantile(&values[1], p),
        sigma_eps: stats::quantile(&values[2], p),
    };
    Some(Quantiles {
        q05: q(0.05),
        q50: q(0.5),
        q95: q(0.95),
    })
}

fn run_estimator(
    scenario: &Scenario,
    estimator: Estimator,
    sample: &SampleDraw,
    weights: &WeightSet,
    chain_seed: u64,
) -> Result<(ParamTriple, Option<f64>, Option<bool>)> {
    let chain = scenario.chain.clone().with_seed(chain_seed);
    match estimator {
        Estimator::EqualGibbs | Estimator::SingleGibbs | Estimator::DoubleGibbs => {
            let d = run_gibbs(sample, weights, &scenario.prior, &chain)?;
            Ok((scenario.point_estimate.of(&d), None, None))
        }
        Estimator::DoubleIntegratedMcmc => {
            let d = run_integrated_mcmc(sample, weights, &scenario.prior, &chain)?;
            Ok((scenario.point_estimate.of(&d), d.acceptance_rate, None))
        }
        Estimator::DoubleMap => {
            let m = map_estimate(sample, weights, &scenario.prior, &Init::Auto, &scenario.map)?;
            Ok((ParamTriple::from_state(&m.state), None, Some(m.converged)))
        }
    }
}

/// All estimators on replicate `r`, in `scenario.estimators` order. Every
/// estimator sees the same sample and, per weight mode, the same weights.
fn run_replicate(scenario: &Scenario, r: usize) -> Vec<ReplicateResult> {
    let (sample, chain_seed) = match scenario.realize(r) {
        Ok((_, s)) => (s, scenario.replicate_seeds(r).2),
        Err(e) => return scenario.estimators.iter().map(|_| ReplicateResult::failed(r, &e)).collect(),
    };
    let mut weights: BTreeMap<WeightMode, Result<WeightSet>> = BTreeMap::new();
    scenario
        .estimators
        .iter()
        .map(|&est| {
            let w = weights
                .entry(est.weight_mode())
                .or_insert_with(|| build_weights(&sample, est.weight_mode(), scenario.normalize_weights));
            let w = match w {
                Ok(w) => w,
                Err(e) => return ReplicateResult::failed(r, e),
            };
            match run_estimator(scenario, est, &sample, w, chain_seed) {
                Ok((estimate, acceptance_rate, converged)) => ReplicateResult {
                    replicate: r,
                    estimate: Some(estimate),
                    acceptance_rate,
                    converged,
                    error: None,
                },
                Err(e) => {
                    log::warn!("{} replicate {r} {}: {e}", scenario.id, est.label());
                    ReplicateResult::failed(r, &e)
                }
            }
        })
        .collect()
}

/// Runs every replicate (in parallel when enabled) and aggregates. Fails only
/// if the scenario is invalid or every replicate of every estimator failed.
pub fn run_scenario(scenario: &Scenario) -> Result<ReplicationReport> {
    scenario.validate()?;
    let started = Instant::now();
    let per_replicate = crate::par::map_indexed(scenario.replicates, |i| run_replicate(scenario, i + 1));

    let cells: Vec<CellReport> = scenario
        .estimators
        .iter()
        .enumerate()
        .map(|(e, &estimator)| {
            let replicates: Vec<ReplicateResult> = per_replicate.iter().map(|rep| rep[e].clone()).collect();
            let mut values: [Vec<f64>; 3] = Default::default();
            for est in replicates.iter().filter_map(|r| r.estimate) {
                for (i, p) in Param::ALL.iter().enumerate() {
                    values[i].push(est.get(*p));
                }
            }
            CellReport {
                estimator,
                n_failed: replicates.iter().filter(|r| !r.is_ok()).count(),
                quantiles: quantiles_of(&values),
                replicates,
            }
        })
        .collect();

    if cells.iter().all(|c| c.quantiles.is_none()) {
        let first = cells
            .iter()
            .flat_map(|c| &c.replicates)
            .find_map(|r| r.error.clone())
            .unwrap_or_default();
        return Err(Error::ScenarioFailed {
            scenario: scenario.id.clone(),
            first,
        });
    }
    Ok(ReplicationReport {
        scenario: scenario.clone(),
        cells,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

/// Runs scenarios in order; one failing scenario does not stop the others.
pub fn run_grid(scenarios: &[Scenario]) -> Vec<Result<ReplicationReport>> {
    scenarios
        .iter()
        .map(|s| {
            log::info!("scenario {} ({} replicates)", s.id, s.replicates);
            run_scenario(s)
        })
        .collect()
}

/// Runs `f` on a pool of `workers` threads (`None`: the global pool).
#[cfg(feature = "parallel")]
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_workers<T: Send>(_workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    Ok(f())
}

/// Per-scenario diagnostics on replicate 1's population and sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub scenario_id: String,
    pub informativeness: crate::diagnostics::InformativenessSummary,
    pub bounds: crate::diagnostics::BoundsReport,
    pub balance: crate::diagnostics::BalanceReport,
}

pub fn run_diagnostics(scenario: &Scenario, balance_replicates: usize) -> Result<DiagnosticsReport> {
    scenario.validate()?;
    let (population, sample) = scenario.realize(1)?;
    let (_, sample_seed, _) = scenario.replicate_seeds(1);
    Ok(DiagnosticsReport {
        scenario_id: scenario.id.clone(),
        informativeness: crate::diagnostics::informativeness_summary(&population, &sample)?,
        bounds: crate::diagnostics::bounds_report(
            &population,
            &sample,
            crate::diagnostics::DEFAULT_FRACTION_THRESHOLD,
        )?,
        balance: crate::diagnostics::weighted_residual_balance(
            &population,
            &TwoStageDesign {
                seed: sample_seed,
                ..scenario.design
            },
            balance_replicates,
        )?,
    })
}
