//! Scenario files: TOML documents expanded into a grid of [`Scenario`]s.
//!
//! ```toml
//! name = "example"
//! replicates = 100
//! base_seed = 7
//! estimators = ["equal_gibbs", "double_gibbs"]
//!
//! [population]
//! units_per_cluster = 40
//! mu0 = 1.0
//! sigma_a0 = 2.0
//! sigma_eps0 = 3.0
//!
//! [grid]
//! sizes = [[1000, 50], [2000, 200]]   # (M, m) pairs
//! n_k = [5]
//! cluster_designs = ["quadratic_symmetric"]
//! unit_designs = ["symmetric_quadratic"]
//!
//! [desk]                               # applied by --desk
//! cluster_scale = 0.5
//! replicates = 20
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Estimator, PointEstimate, Scenario};
use crate::design::{ClusterDesignKind, TwoStageDesign, UnitDesignKind};
use crate::error::{Error, Result};
use crate::inference::{ChainConfig, Init, MapOptions, PriorConfig};
use crate::popgen::PopulationConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSpec {
    pub units_per_cluster: usize,
    pub mu0: f64,
    pub sigma_a0: f64,
    pub sigma_eps0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// `(M, m)` pairs: population clusters and sampled clusters.
    pub sizes: Vec<[usize; 2]>,
    pub n_k: Vec<usize>,
    pub cluster_designs: Vec<ClusterDesignKind>,
    pub unit_designs: Vec<UnitDesignKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainSpec {
    pub n_iterations: usize,
    pub n_burnin: usize,
    pub thin: usize,
}

impl Default for ChainSpec {
    fn default() -> Self {
        let c = ChainConfig::default();
        ChainSpec {
            n_iterations: c.n_iterations,
            n_burnin: c.n_burnin,
            thin: c.thin,
        }
    }
}

/// Reduced-scale settings: `M` and `m` are multiplied by `cluster_scale`
/// (rounded, at least 1) and the replicate count is replaced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeskScaling {
    pub cluster_scale: f64,
    pub replicates: usize,
}

fn default_replicates() -> usize {
    100
}
fn default_estimators() -> Vec<Estimator> {
    Estimator::ALL.to_vec()
}
fn default_true() -> bool {
    true
}
fn default_balance_replicates() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<Estimator>,
    #[serde(default)]
    pub point_estimate: PointEstimate,
    #[serde(default = "default_true")]
    pub normalize_weights: bool,
    /// Within-cluster replicate draws for the balance diagnostic.
    #[serde(default = "default_balance_replicates")]
    pub balance_replicates: usize,
    pub population: PopulationSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub chain: ChainSpec,
    #[serde(default)]
    pub prior: PriorConfig,
    #[serde(default)]
    pub desk: Option<DeskScaling>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    /// Expands the grid (sizes × cluster designs × unit designs × n_k, in that
    /// nesting order). All scenarios share `base_seed`, so scenarios with the
    /// same `M` see the same populations replicate-by-replicate.
    pub fn expand(&self, desk: bool, seed_override: Option<u64>) -> Result<Vec<Scenario>> {
        let scaling = if desk {
            Some(self.desk.ok_or_else(|| {
                Error::Config(format!("{}: --desk requested but the file has no [desk] section", self.name))
            })?)
        } else {
            None
        };
        if let Some(d) = scaling {
            if !(d.cluster_scale > 0.0 && d.cluster_scale.is_finite()) {
                return Err(Error::Config(format!("desk cluster_scale must be positive, got {}", d.cluster_scale)));
            }
        }
        let scale = |x: usize| match scaling {
            Some(d) => ((x as f64 * d.cluster_scale).round() as usize).max(1),
            None => x,
        };
        let replicates = scaling.map_or(self.replicates, |d| d.replicates);
        let chain = ChainConfig {
            n_iterations: self.chain.n_iterations,
            n_burnin: self.chain.n_burnin,
            thin: self.chain.thin,
            seed: 0,
            init: Init::Auto,
        };

        let mut out = Vec::new();
        for &[big_m, m] in &self.grid.sizes {
            let (big_m, m) = (scale(big_m), scale(m));
            for &cluster_kind in &self.grid.cluster_designs {
                for &unit_kind in &self.grid.unit_designs {
                    for &n_k in &self.grid.n_k {
                        let scenario = Scenario {
                            id: format!(
                                "{}-M{big_m}-m{m}-{}-{}-n{n_k}",
                                self.name,
                                cluster_kind.label(),
                                unit_kind.label()
                            ),
                            population: PopulationConfig::balanced(
                                big_m,
                                self.population.units_per_cluster,
                                self.population.mu0,
                                self.population.sigma_a0,
                                self.population.sigma_eps0,
                                0,
                            ),
                            design: TwoStageDesign {
                                cluster_kind,
                                unit_kind,
                                m,
                                n_k,
                                seed: 0,
                            },
                            estimators: self.estimators.clone(),
                            replicates,
                            base_seed: seed_override.unwrap_or(self.base_seed),
                            chain: chain.clone(),
                            prior: self.prior,
                            normalize_weights: self.normalize_weights,
                            point_estimate: self.point_estimate,
                            map: MapOptions::default(),
                        };
                        scenario.validate()?;
                        out.push(scenario);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Reads and expands a scenario file.
pub fn load_scenarios(path: &Path, desk: bool, seed_override: Option<u64>) -> Result<Vec<Scenario>> {
    ScenarioFile::load(path)?.expand(desk, seed_override)
}
