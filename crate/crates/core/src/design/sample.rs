use serde::{Deserialize, Serialize};

use super::pps::{inclusion_probs, systematic_pps};
use super::size::{ClusterDesignKind, UnitDesignKind};
use crate::error::{Error, Result};
use crate::popgen::Population;
use crate::rng::{self, streams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoStageDesign {
    pub cluster_kind: ClusterDesignKind,
    pub unit_kind: UnitDesignKind,
    /// Clusters to sample.
    pub m: usize,
    /// Units to sample in each selected cluster.
    pub n_k: usize,
    pub seed: u64,
}

impl TwoStageDesign {
    pub fn validate(&self, population: &Population) -> Result<()> {
        let clusters = population.clusters();
        if self.m == 0 || self.m > clusters {
            return Err(Error::Design(format!(
                "m = {} must lie in 1..={clusters}",
                self.m
            )));
        }
        let smallest = population.eps0.iter().map(Vec::len).min().unwrap_or(0);
        if self.n_k == 0 || self.n_k > smallest {
            return Err(Error::Design(format!(
                "n_k = {} must lie in 1..={smallest}",
                self.n_k
            )));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        format!("{}/{}", self.cluster_kind.label(), self.unit_kind.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledUnit {
    pub unit_id: usize,
    pub y: f64,
    /// Conditional inclusion probability given the cluster was selected.
    pub pi_given_cluster: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledCluster {
    pub cluster_id: usize,
    /// Marginal cluster inclusion probability.
    pub pi: f64,
    pub units: Vec<SampledUnit>,
}

/// A realized two-stage sample. Clusters and units are in increasing id order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDraw {
    pub clusters: Vec<SampledCluster>,
    /// Marginal inclusion probabilities of every population cluster. Empty for
    /// samples read from a file, where only selected clusters are known.
    pub pi_h: Vec<f64>,
    pub design: Option<TwoStageDesign>,
}

impl SampleDraw {
    pub fn m(&self) -> usize {
        self.clusters.len()
    }

    pub fn n(&self) -> usize {
        self.clusters.iter().map(|c| c.units.len()).sum()
    }

    pub fn cluster_ids(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c.cluster_id).collect()
    }

    pub fn unit_ids(&self) -> Vec<Vec<usize>> {
        self.clusters
            .iter()
            .map(|c| c.units.iter().map(|u| u.unit_id).collect())
            .collect()
    }

    pub fn y(&self) -> impl Iterator<Item = f64> + '_ {
        self.clusters.iter().flat_map(|c| c.units.iter().map(|u| u.y))
    }

    /// Checks ordering and probability ranges.
    pub fn validate(&self) -> Result<()> {
        if self.clusters.is_empty() {
            return Err(Error::Design("sample has no clusters".into()));
        }
        let in_range = |p: f64| p > 0.0 && p <= 1.0;
        for pair in self.clusters.windows(2) {
            if pair[0].cluster_id >= pair[1].cluster_id {
                return Err(Error::Design("cluster ids must be strictly increasing".into()));
            }
        }
        for c in &self.clusters {
            if !in_range(c.pi) {
                return Err(Error::Design(format!(
                    "cluster {} has inclusion probability {}",
                    c.cluster_id, c.pi
                )));
            }
            if c.units.is_empty() {
                return Err(Error::Design(format!("cluster {} has no units", c.cluster_id)));
            }
            for pair in c.units.windows(2) {
                if pair[0].unit_id >= pair[1].unit_id {
                    return Err(Error::Design(format!(
                        "unit ids in cluster {} must be strictly increasing",
                        c.cluster_id
                    )));
                }
            }
            if let Some(u) = c.units.iter().find(|u| !in_range(u.pi_given_cluster)) {
                return Err(Error::Design(format!(
                    "unit {} of cluster {} has inclusion probability {}",
                    u.unit_id, c.cluster_id, u.pi_given_cluster
                )));
            }
            if let Some(u) = c.units.iter().find(|u| !u.y.is_finite()) {
                return Err(Error::Design(format!("unit {} has non-finite y", u.unit_id)));
            }
        }
        Ok(())
    }
}

/// Two-stage sample: systematic PPS over clusters, then independently within
/// each selected cluster (its own random stream keyed by cluster id).
pub fn draw_two_stage_sample(population: &Population, design: &TwoStageDesign) -> Result<SampleDraw> {
    design.validate(population)?;

    let cluster_sizes = design.cluster_kind.sizes(&population.a0);
    let pi_h = inclusion_probs(&cluster_sizes, design.m)?;
    let mut stage1 = rng::stream(design.seed, streams::CLUSTER_STAGE);
    let selected = systematic_pps(&pi_h, &mut stage1)?;

    let unit_seed = rng::split(design.seed, streams::UNIT_STAGE);
    let eps_min = population.min_eps();
    let clusters = selected
        .into_iter()
        .map(|h| {
            let sizes = design.unit_kind.sizes(&population.eps0[h], eps_min);
            let pi_l = inclusion_probs(&sizes, design.n_k)?;
            let mut stage2 = rng::stream(unit_seed, h as u64);
            let units = systematic_pps(&pi_l, &mut stage2)?
                .into_iter()
                .map(|l| SampledUnit {
                    unit_id: l,
                    y: population.y[h][l],
                    pi_given_cluster: pi_l[l],
                })
                .collect();
            Ok(SampledCluster {
                cluster_id: h,
                pi: pi_h[h],
                units,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SampleDraw {
        clusters,
        pi_h,
        design: Some(*design),
    })
}
