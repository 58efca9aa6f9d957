//! Browser bindings. Each exported function returns a JSON string; the
//! `*_json` twins hold the logic and run natively in tests.

use serde::{de::DeserializeOwned, Serialize};
use wasm_bindgen::prelude::*;

use svyanova::design::{build_weights, draw_two_stage_sample, ClusterDesignKind, TwoStageDesign, UnitDesignKind, WeightMode};
use svyanova::diagnostics::{informativeness_summary, weighted_residual_balance};
use svyanova::inference::{run_gibbs, ChainConfig, EstimatorSummary, PriorConfig};
use svyanova::popgen::{generate_population, Population, PopulationConfig};
use svyanova::stats;

const UNITS_PER_CLUSTER: usize = 40;

fn kind<T: DeserializeOwned>(name: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(name.into())).map_err(|_| format!("unknown design `{name}`"))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

fn population(clusters: usize, seed: u64) -> Result<Population, String> {
    generate_population(&PopulationConfig::balanced(clusters, UNITS_PER_CLUSTER, 1.0, 2.0, 3.0, seed))
        .map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Histogram {
    edges: Vec<f64>,
    population: Vec<f64>,
    sample: Vec<f64>,
}

/// Density histograms of two samples on shared bins.
fn histogram(population: &[f64], sample: &[f64], bins: usize) -> Histogram {
    let lo = population.iter().chain(sample).cloned().fold(f64::INFINITY, f64::min);
    let hi = population.iter().chain(sample).cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = ((hi - lo) / bins as f64).max(1e-12);
    let density = |xs: &[f64]| {
        let mut counts = vec![0.0; bins];
        for x in xs {
            counts[(((x - lo) / width) as usize).min(bins - 1)] += 1.0;
        }
        counts.iter().map(|c| c / (xs.len() as f64 * width)).collect()
    };
    Histogram {
        edges: (0..=bins).map(|i| lo + i as f64 * width).collect(),
        population: density(population),
        sample: density(sample),
    }
}

#[derive(Serialize)]
struct Informativeness {
    a: Histogram,
    eps: Histogram,
    summary: svyanova::diagnostics::InformativenessSummary,
}

pub fn informativeness_json(
    clusters: usize,
    m: usize,
    n_k: usize,
    cluster_design: &str,
    unit_design: &str,
    seed: u64,
) -> Result<String, String> {
    let pop = population(clusters, seed)?;
    let design = TwoStageDesign {
        cluster_kind: kind(cluster_design)?,
        unit_kind: kind(unit_design)?,
        m,
        n_k,
        seed: seed.wrapping_add(1),
    };
    let sample = draw_two_stage_sample(&pop, &design).map_err(|e| e.to_string())?;
    let a: Vec<f64> = sample.clusters.iter().map(|c| pop.a0[c.cluster_id]).collect();
    let eps: Vec<f64> = sample
        .clusters
        .iter()
        .flat_map(|c| c.units.iter().map(|u| pop.eps0[c.cluster_id][u.unit_id]))
        .collect();
    let all_eps: Vec<f64> = pop.all_eps().collect();
    to_json(&Informativeness {
        a: histogram(&pop.a0, &a, 30),
        eps: histogram(&all_eps, &eps, 30),
        summary: informativeness_summary(&pop, &sample).map_err(|e| e.to_string())?,
    })
}

#[derive(Serialize)]
struct Comparison {
    truth: [f64; 3],
    fits: Vec<EstimatorSummary>,
}

pub fn compare_weights_json(
    clusters: usize,
    m: usize,
    n_k: usize,
    cluster_design: &str,
    unit_design: &str,
    iterations: usize,
    seed: u64,
) -> Result<String, String> {
    let pop = population(clusters, seed)?;
    let design = TwoStageDesign {
        cluster_kind: kind(cluster_design)?,
        unit_kind: kind(unit_design)?,
        m,
        n_k,
        seed: seed.wrapping_add(1),
    };
    let sample = draw_two_stage_sample(&pop, &design).map_err(|e| e.to_string())?;
    let chain = ChainConfig {
        n_iterations: iterations,
        n_burnin: iterations / 2,
        ..ChainConfig::default()
    }
    .with_seed(seed.wrapping_add(2));
    let prior = PriorConfig::default();
    let fits = WeightMode::ALL
        .iter()
        .map(|&mode| {
            let w = build_weights(&sample, mode, true).map_err(|e| e.to_string())?;
            let draws = run_gibbs(&sample, &w, &prior, &chain).map_err(|e| e.to_string())?;
            Ok(EstimatorSummary::from_draws(mode, "gibbs", &draws))
        })
        .collect::<Result<Vec<_>, String>>()?;
    to_json(&Comparison {
        truth: [1.0, 2.0, 3.0],
        fits,
    })
}

#[derive(Serialize)]
struct BalancePoint {
    n_k: usize,
    overall_mean: f64,
    standard_error: f64,
}

pub fn balance_curve_json(clusters: usize, unit_design: &str, n_ks: &[usize], replicates: usize, seed: u64) -> Result<String, String> {
    let pop = population(clusters, seed)?;
    let unit_kind: UnitDesignKind = kind(unit_design)?;
    let points = n_ks
        .iter()
        .map(|&n_k| {
            let design = TwoStageDesign {
                cluster_kind: ClusterDesignKind::Srs,
                unit_kind,
                m: clusters,
                n_k,
                seed: seed.wrapping_add(1),
            };
            let r = weighted_residual_balance(&pop, &design, replicates).map_err(|e| e.to_string())?;
            Ok(BalancePoint {
                n_k,
                overall_mean: r.overall_mean,
                standard_error: r.standard_error,
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    let eps: Vec<f64> = pop.all_eps().collect();
    to_json(&serde_json::json!({ "population_mean_eps": stats::mean(&eps), "points": points }))
}

/// Population vs sample histograms of cluster effects and residuals.
#[wasm_bindgen]
pub fn informativeness(clusters: usize, m: usize, n_k: usize, cluster_design: &str, unit_design: &str, seed: u32) -> Result<String, JsError> {
    informativeness_json(clusters, m, n_k, cluster_design, unit_design, seed.into()).map_err(|e| JsError::new(&e))
}

/// Equal / Single / Double Gibbs fits on one sample.
#[wasm_bindgen]
pub fn compare_weights(
    clusters: usize,
    m: usize,
    n_k: usize,
    cluster_design: &str,
    unit_design: &str,
    iterations: usize,
    seed: u32,
) -> Result<String, JsError> {
    compare_weights_json(clusters, m, n_k, cluster_design, unit_design, iterations, seed.into()).map_err(|e| JsError::new(&e))
}

/// Weighted residual balance against the within-cluster sample size.
#[wasm_bindgen]
pub fn balance_curve(clusters: usize, unit_design: &str, n_ks: Vec<u32>, replicates: usize, seed: u32) -> Result<String, JsError> {
    let n_ks: Vec<usize> = n_ks.into_iter().map(|n| n as usize).collect();
    balance_curve_json(clusters, unit_design, &n_ks, replicates, seed.into()).map_err(|e| JsError::new(&e))
}
