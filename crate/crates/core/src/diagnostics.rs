//! Checkable statistics behind the consistency conditions: within-cluster
//! residual balance, contraction of the weighted random-effect average,
//! informativeness quantiles and empirical weight bounds.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::design::{inclusion_probs, systematic_pps, SampleDraw, TwoStageDesign, WeightSet};
use crate::error::{Error, Result};
use crate::inference::DrawsMatrix;
use crate::popgen::Population;
use crate::rng::{self, streams};
use crate::stats;

/// Default `m/M` below which [`bounds_report`] raises a flag.
pub const DEFAULT_FRACTION_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub design: String,
    pub n_k: usize,
    pub n_replicates: usize,
    /// Per population cluster: the weighted residual mean
    /// `Σ_j w_{j|h} ε_jh / Σ_j w_{j|h}`, averaged over replicates.
    pub per_cluster: Vec<f64>,
    /// `f_h = n_h / N_h`
    pub sampling_fraction: Vec<f64>,
    /// Per replicate: the statistic averaged over clusters.
    pub replicate_means: Vec<f64>,
    pub overall_mean: f64,
    /// Monte Carlo SE of `overall_mean`, from the spread across clusters.
    pub standard_error: f64,
}

impl BalanceReport {
    /// `overall_mean / standard_error`
    pub fn z_score(&self) -> f64 {
        self.overall_mean / self.standard_error
    }
}

/// Draws a fresh within-cluster sample from every population cluster in each
/// replicate (weights `1/π_{j|h}`) and averages the weighted residual mean.
/// Replicate `r` uses its own stream, so two designs sharing a seed are
/// paired replicate-by-replicate.
pub fn weighted_residual_balance(
    population: &Population,
    design: &TwoStageDesign,
    n_replicates: usize,
) -> Result<BalanceReport> {
    if n_replicates == 0 {
        return Err(Error::Config("n_replicates must be at least 1".into()));
    }
    let smallest = population.eps0.iter().map(Vec::len).min().unwrap_or(0);
    if design.n_k == 0 || design.n_k > smallest {
        return Err(Error::Design(format!("n_k = {} must lie in 1..={smallest}", design.n_k)));
    }
    let eps_min = population.min_eps();
    let pis: Vec<Vec<f64>> = population
        .eps0
        .iter()
        .map(|eps| inclusion_probs(&design.unit_kind.sizes(eps, eps_min), design.n_k))
        .collect::<Result<_>>()?;
    let base = rng::split(design.seed, streams::BALANCE);

    let per_replicate: Vec<Result<Vec<f64>>> = crate::par::map_indexed(n_replicates, |r| {
        let mut rng = rng::stream(base, r as u64);
        population
            .eps0
            .iter()
            .zip(&pis)
            .map(|(eps, pi)| {
                let picked = systematic_pps(pi, &mut rng)?;
                let (num, den) = picked
                    .iter()
                    .fold((0.0, 0.0), |(n, d), &l| (n + eps[l] / pi[l], d + 1.0 / pi[l]));
                Ok(num / den)
            })
            .collect()
    });
    let per_replicate = per_replicate.into_iter().collect::<Result<Vec<_>>>()?;

    let m = population.clusters();
    let per_cluster: Vec<f64> = (0..m)
        .map(|h| per_replicate.iter().map(|rep| rep[h]).sum::<f64>() / n_replicates as f64)
        .collect();
    let replicate_means = per_replicate.iter().map(|rep| stats::mean(rep)).collect();
    let standard_error = if m > 1 {
        stats::std_dev(&per_cluster) / (m as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(BalanceReport {
        design: design.unit_kind.label().to_string(),
        n_k: design.n_k,
        n_replicates,
        sampling_fraction: population.eps0.iter().map(|e| design.n_k as f64 / e.len() as f64).collect(),
        overall_mean: stats::mean(&per_cluster),
        per_cluster,
        replicate_means,
        standard_error,
    })
}

/// Posterior summary of `M̂⁻¹ Σ_k w_k a_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReAverageSummary {
    pub posterior_mean: f64,
    pub posterior_sd: f64,
    pub n_draws: usize,
}

pub fn weighted_re_average(draws: &DrawsMatrix, weights: &WeightSet) -> Result<ReAverageSummary> {
    if !draws.has_effects() {
        return Err(Error::Unsupported(
            "draws carry no cluster effects (integrated chains marginalize them out)".into(),
        ));
    }
    let w_k = weights.w_k();
    let m_hat: f64 = w_k.iter().sum();
    let values = draws
        .draws
        .iter()
        .map(|d| {
            if d.a.len() != w_k.len() {
                return Err(Error::Domain(format!("draw has {} effects, weights {}", d.a.len(), w_k.len())));
            }
            Ok(d.a.iter().zip(&w_k).map(|(a, w)| a * w).sum::<f64>() / m_hat)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ReAverageSummary {
        posterior_mean: stats::mean(&values),
        posterior_sd: if values.len() > 1 { stats::std_dev(&values) } else { 0.0 },
        n_draws: values.len(),
    })
}

/// 5/50/95% quantiles of cluster effects and residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariableQuantiles {
    pub a: [f64; 3],
    pub eps: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InformativenessSummary {
    pub design: String,
    pub population: VariableQuantiles,
    pub sample: VariableQuantiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileRow {
    pub design: String,
    pub source: String,
    pub variable: String,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

impl InformativenessSummary {
    pub fn rows(&self) -> Vec<QuantileRow> {
        let mut out = Vec::with_capacity(4);
        for (source, q) in [("population", &self.population), ("sample", &self.sample)] {
            for (variable, v) in [("a", q.a), ("eps", q.eps)] {
                out.push(QuantileRow {
                    design: self.design.clone(),
                    source: source.into(),
                    variable: variable.into(),
                    q05: v[0],
                    q50: v[1],
                    q95: v[2],
                });
            }
        }
        out
    }
}

/// Population vs sample quantiles of the generating `a0` and `eps0` values.
pub fn informativeness_summary(population: &Population, sample: &SampleDraw) -> Result<InformativenessSummary> {
    let mut a = Vec::with_capacity(sample.m());
    let mut eps = Vec::with_capacity(sample.n());
    for c in &sample.clusters {
        let cluster_eps = population
            .eps0
            .get(c.cluster_id)
            .ok_or_else(|| Error::Design(format!("cluster {} not in population", c.cluster_id)))?;
        a.push(population.a0[c.cluster_id]);
        for u in &c.units {
            eps.push(
                *cluster_eps
                    .get(u.unit_id)
                    .ok_or_else(|| Error::Design(format!("unit {} not in cluster {}", u.unit_id, c.cluster_id)))?,
            );
        }
    }
    let all_eps: Vec<f64> = population.all_eps().collect();
    Ok(InformativenessSummary {
        design: sample.design.map_or_else(|| "imported".to_string(), |d| d.label()),
        population: VariableQuantiles {
            a: stats::q05_q50_q95(&population.a0),
            eps: stats::q05_q50_q95(&all_eps),
        },
        sample: VariableQuantiles {
            a: stats::q05_q50_q95(&a),
            eps: stats::q05_q50_q95(&eps),
        },
    })
}

/// CSV: `design,source,variable,q05,q50,q95`.
pub fn write_quantile_csv<W: Write>(summaries: &[InformativenessSummary], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    for s in summaries {
        for row in s.rows() {
            out.serialize(row)?;
        }
    }
    out.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

/// Empirical analogues of the design bound constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    /// `max_k (1/π_k) · m / M`
    pub max_cluster_weight_ratio: f64,
    /// `max_{j,k} (1/π_{j|k}) · n_k / N_k`
    pub max_unit_weight_ratio: f64,
    /// `m / M`
    pub cluster_fraction: f64,
    pub threshold: f64,
    /// `cluster_fraction < threshold`
    pub flagged: bool,
}

/// Uses the raw inverse inclusion probabilities, independent of the weight
/// mode used for estimation.
pub fn bounds_report(population: &Population, sample: &SampleDraw, threshold: f64) -> Result<BoundsReport> {
    sample.validate()?;
    let (m, big_m) = (sample.m() as f64, population.clusters() as f64);
    let mut max_cluster: f64 = 0.0;
    let mut max_unit: f64 = 0.0;
    for c in &sample.clusters {
        let size = population
            .eps0
            .get(c.cluster_id)
            .ok_or_else(|| Error::Design(format!("cluster {} not in population", c.cluster_id)))?
            .len() as f64;
        max_cluster = max_cluster.max(m / (c.pi * big_m));
        let n_k = c.units.len() as f64;
        for u in &c.units {
            max_unit = max_unit.max(n_k / (u.pi_given_cluster * size));
        }
    }
    let cluster_fraction = m / big_m;
    Ok(BoundsReport {
        max_cluster_weight_ratio: max_cluster,
        max_unit_weight_ratio: max_unit,
        cluster_fraction,
        threshold,
        flagged: cluster_fraction < threshold,
    })
}
