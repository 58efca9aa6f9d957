use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::sample::SampleDraw;
use crate::error::{Error, Result};

/// How sampling weights enter the pseudo-likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// Every weight is one (the unweighted model).
    Equal,
    /// Unit weights `∝ 1/(π_k π_{j|k})` on the data; random-effect prior unweighted.
    Single,
    /// Unit weights on the data and cluster weights `∝ 1/π_k` on the random-effect prior.
    Double,
}

impl WeightMode {
    pub const ALL: [WeightMode; 3] = [WeightMode::Equal, WeightMode::Single, WeightMode::Double];

    pub fn label(self) -> &'static str {
        match self {
            WeightMode::Equal => "equal",
            WeightMode::Single => "single",
            WeightMode::Double => "double",
        }
    }
}

impl fmt::Display for WeightMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "equal" => Ok(WeightMode::Equal),
            "single" => Ok(WeightMode::Single),
            "double" => Ok(WeightMode::Double),
            other => Err(Error::Parse(format!("unknown weights mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterWeights {
    pub w_k: f64,
    pub w_j_given_k: Vec<f64>,
    pub w_jk: Vec<f64>,
    /// `Σ_j w_{j|k}`
    pub n_hat_k: f64,
}

/// Multipliers applied to the raw inverse probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub cluster_scale: f64,
    pub unit_scales: Vec<f64>,
    /// Single mode only: scale on `1/(π_k π_{j|k})`.
    pub marginal_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSet {
    pub mode: WeightMode,
    pub normalized: bool,
    pub clusters: Vec<ClusterWeights>,
    /// `Σ_k w_k`
    pub m_hat: f64,
    /// `Σ_jk w_jk`
    pub n_hat: f64,
    pub normalization: Normalization,
}

impl WeightSet {
    pub fn w_k(&self) -> Vec<f64> {
        self.clusters.iter().map(|c| c.w_k).collect()
    }

    /// The cluster weight before normalization (`1/π_k` for Double).
    pub fn raw_w_k(&self, k: usize) -> f64 {
        self.clusters[k].w_k / self.normalization.cluster_scale
    }

    pub fn raw_w_j_given_k(&self, k: usize, j: usize) -> f64 {
        self.clusters[k].w_j_given_k[j] / self.normalization.unit_scales[k]
    }
}

/// Builds weights for `sample` under `mode`. With `normalize`, cluster weights
/// sum to `m` and each cluster's conditional weights to its `n_k`; Single-mode
/// marginal weights sum to `n`.
pub fn build_weights(sample: &SampleDraw, mode: WeightMode, normalize: bool) -> Result<WeightSet> {
    sample.validate()?;
    let m = sample.m() as f64;

    let inv_pi_k: Vec<f64> = sample.clusters.iter().map(|c| 1.0 / c.pi).collect();
    let inv_pi_j: Vec<Vec<f64>> = sample
        .clusters
        .iter()
        .map(|c| c.units.iter().map(|u| 1.0 / u.pi_given_cluster).collect())
        .collect();

    let cluster_scale = if normalize && mode == WeightMode::Double {
        m / inv_pi_k.iter().sum::<f64>()
    } else {
        1.0
    };
    let unit_scales: Vec<f64> = inv_pi_j
        .iter()
        .map(|w| {
            if normalize && mode != WeightMode::Equal {
                w.len() as f64 / w.iter().sum::<f64>()
            } else {
                1.0
            }
        })
        .collect();
    let marginal_scale = if normalize && mode == WeightMode::Single {
        let total: f64 = inv_pi_k
            .iter()
            .zip(&inv_pi_j)
            .map(|(wk, wj)| wk * wj.iter().sum::<f64>())
            .sum();
        sample.n() as f64 / total
    } else {
        1.0
    };

    let clusters: Vec<ClusterWeights> = inv_pi_k
        .iter()
        .zip(&inv_pi_j)
        .zip(&unit_scales)
        .map(|((&wk_raw, wj_raw), &c2)| {
            let (w_k, w_j_given_k, w_jk) = match mode {
                WeightMode::Equal => (1.0, vec![1.0; wj_raw.len()], vec![1.0; wj_raw.len()]),
                WeightMode::Double => {
                    let w_k = cluster_scale * wk_raw;
                    let wj: Vec<f64> = wj_raw.iter().map(|w| c2 * w).collect();
                    let wjk = wj.iter().map(|w| w_k * w).collect();
                    (w_k, wj, wjk)
                }
                WeightMode::Single => {
                    let wj: Vec<f64> = wj_raw.iter().map(|w| c2 * w).collect();
                    let wjk = wj_raw.iter().map(|w| marginal_scale * wk_raw * w).collect();
                    (1.0, wj, wjk)
                }
            };
            let n_hat_k = w_j_given_k.iter().sum();
            ClusterWeights {
                w_k,
                w_j_given_k,
                w_jk,
                n_hat_k,
            }
        })
        .collect();

    let m_hat = clusters.iter().map(|c| c.w_k).sum();
    let n_hat = clusters.iter().flat_map(|c| &c.w_jk).sum();
    let weights = WeightSet {
        mode,
        normalized: normalize,
        clusters,
        m_hat,
        n_hat,
        normalization: Normalization {
            cluster_scale,
            unit_scales,
            marginal_scale,
        },
    };
    if weights
        .clusters
        .iter()
        .any(|c| !(c.w_k > 0.0 && c.w_k.is_finite()) || c.w_jk.iter().any(|w| !(*w > 0.0 && w.is_finite())))
    {
        return Err(Error::Design("weights must be positive and finite".into()));
    }
    Ok(weights)
}
