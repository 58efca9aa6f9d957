//! Finite populations from the one-way ANOVA generating model
//! `y[h][l] = mu0 + a0[h] + eps0[h][l]`, with `a0 ~ N(0, sigma_a0²)` and
//! `eps0 ~ N(0, sigma_eps0²)`.
//!
//! The latent effects and noise are kept alongside `y` because the sampling
//! designs are functions of them.

use std::io::Write;
use std::path::Path;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationConfig {
    /// Units in each cluster; its length is the number of clusters `M`.
    pub units_per_cluster: Vec<usize>,
    pub mu0: f64,
    pub sigma_a0: f64,
    pub sigma_eps0: f64,
    pub seed: u64,
}

impl PopulationConfig {
    /// `clusters` clusters of `units` units each.
    pub fn balanced(
        clusters: usize,
        units: usize,
        mu0: f64,
        sigma_a0: f64,
        sigma_eps0: f64,
        seed: u64,
    ) -> Self {
        PopulationConfig {
            units_per_cluster: vec![units; clusters],
            mu0,
            sigma_a0,
            sigma_eps0,
            seed,
        }
    }

    pub fn clusters(&self) -> usize {
        self.units_per_cluster.len()
    }

    pub fn total_units(&self) -> usize {
        self.units_per_cluster.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.units_per_cluster.is_empty() {
            return Err(Error::Config("population needs at least one cluster".into()));
        }
        if self.units_per_cluster.contains(&0) {
            return Err(Error::Config("every cluster needs at least one unit".into()));
        }
        if !(self.sigma_a0 > 0.0 && self.sigma_a0.is_finite()) {
            return Err(Error::Config(format!("sigma_a0 must be positive, got {}", self.sigma_a0)));
        }
        if !(self.sigma_eps0 > 0.0 && self.sigma_eps0.is_finite()) {
            return Err(Error::Config(format!(
                "sigma_eps0 must be positive, got {}",
                self.sigma_eps0
            )));
        }
        if !self.mu0.is_finite() {
            return Err(Error::Config("mu0 must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub config: PopulationConfig,
    pub a0: Vec<f64>,
    pub eps0: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
}

impl Population {
    pub fn clusters(&self) -> usize {
        self.a0.len()
    }

    pub fn cluster_size(&self, h: usize) -> usize {
        self.eps0[h].len()
    }

    pub fn total_units(&self) -> usize {
        self.eps0.iter().map(Vec::len).sum()
    }

    /// Smallest unit residual over the whole population.
    pub fn min_eps(&self) -> f64 {
        self.eps0
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn all_eps(&self) -> impl Iterator<Item = f64> + '_ {
        self.eps0.iter().flatten().copied()
    }

    /// Writes `cluster_id,unit_id,a0,eps0,y` rows. Floats use Rust's shortest
    /// round-trip representation.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["cluster_id", "unit_id", "a0", "eps0", "y"])?;
        for (h, (eps, ys)) in self.eps0.iter().zip(&self.y).enumerate() {
            for (l, (e, y)) in eps.iter().zip(ys).enumerate() {
                out.write_record([
                    h.to_string(),
                    l.to_string(),
                    self.a0[h].to_string(),
                    e.to_string(),
                    y.to_string(),
                ])?;
            }
        }
        out.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Draws a population. Equal configs (seed included) give identical output.
pub fn generate_population(config: &PopulationConfig) -> Result<Population> {
    config.validate()?;
    let mut rng = rng::stream(config.seed, rng::streams::POPULATION);
    let effect = Normal::new(0.0, config.sigma_a0).map_err(|e| Error::Config(e.to_string()))?;
    let noise = Normal::new(0.0, config.sigma_eps0).map_err(|e| Error::Config(e.to_string()))?;

    let a0: Vec<f64> = (0..config.clusters()).map(|_| effect.sample(&mut rng)).collect();
    let eps0: Vec<Vec<f64>> = config
        .units_per_cluster
        .iter()
        .map(|&n| (0..n).map(|_| noise.sample(&mut rng)).collect())
        .collect();
    let y = eps0
        .iter()
        .zip(&a0)
        .map(|(eps, &a)| eps.iter().map(|&e| config.mu0 + a + e).collect())
        .collect();

    Ok(Population {
        config: config.clone(),
        a0,
        eps0,
        y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    fn study_config(clusters: usize, seed: u64) -> PopulationConfig {
        PopulationConfig::balanced(clusters, 40, 1.0, 2.0, 3.0, seed)
    }

    #[test]
    fn study_sized_population() {
        let pop = generate_population(&study_config(2000, 1)).unwrap();
        assert_eq!(pop.clusters(), 2000);
        assert_eq!(pop.total_units(), 80_000);
    }

    #[test]
    fn reconstruction_is_exact() {
        let pop = generate_population(&study_config(50, 3)).unwrap();
        for h in 0..pop.clusters() {
            for l in 0..pop.cluster_size(h) {
                assert_eq!(pop.y[h][l], pop.config.mu0 + pop.a0[h] + pop.eps0[h][l]);
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = generate_population(&study_config(30, 11)).unwrap();
        let b = generate_population(&study_config(30, 11)).unwrap();
        let c = generate_population(&study_config(30, 12)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.a0, c.a0);
    }

    #[test]
    fn degenerate_effect_scale() {
        let cfg = PopulationConfig::balanced(3, 2, 1.0, 1e-12, 3.0, 5);
        let pop = generate_population(&cfg).unwrap();
        for h in 0..3 {
            assert!(pop.a0[h].abs() < 1e-10);
            for l in 0..2 {
                assert!((pop.y[h][l] - (1.0 + pop.eps0[h][l])).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn effect_variance_band() {
        // Var of s² with 3999 df is 2σ⁴/3999, sd ≈ 0.0894 for σ² = 4; the band
        // [3.65, 4.35] is about ±3.9 sd wide.
        for seed in 0..20 {
            let pop = generate_population(&study_config(4000, seed)).unwrap();
            let v = stats::variance(&pop.a0);
            assert!((3.65..=4.35).contains(&v), "seed {seed}: {v}");
        }
    }

    #[test]
    fn moment_sanity() {
        let pop = generate_population(&study_config(4000, 77)).unwrap();
        let m = pop.clusters() as f64;
        let n = pop.total_units() as f64;
        assert!(stats::mean(&pop.a0).abs() < 4.0 * 2.0 / m.sqrt());
        let eps: Vec<f64> = pop.all_eps().collect();
        assert!(stats::mean(&eps).abs() < 4.0 * 3.0 / n.sqrt());
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = study_config(3, 0);
        cfg.sigma_a0 = 0.0;
        assert!(matches!(generate_population(&cfg), Err(Error::Config(_))));
        let mut cfg = study_config(3, 0);
        cfg.sigma_eps0 = -1.0;
        assert!(generate_population(&cfg).is_err());
        let cfg = PopulationConfig::balanced(0, 40, 1.0, 2.0, 3.0, 0);
        assert!(generate_population(&cfg).is_err());
        let mut cfg = study_config(3, 0);
        cfg.units_per_cluster[1] = 0;
        assert!(generate_population(&cfg).is_err());
    }

    #[test]
    fn unequal_cluster_sizes() {
        let cfg = PopulationConfig {
            units_per_cluster: vec![1, 4, 2],
            mu0: 0.0,
            sigma_a0: 1.0,
            sigma_eps0: 1.0,
            seed: 2,
        };
        let pop = generate_population(&cfg).unwrap();
        assert_eq!(pop.total_units(), 7);
        assert_eq!(pop.cluster_size(1), 4);
    }

    #[test]
    fn csv_dump_round_trips_floats() {
        let pop = generate_population(&study_config(2, 8)).unwrap();
        let mut buf = Vec::new();
        pop.write_csv(&mut buf).unwrap();
        let mut rdr = csv::Reader::from_reader(buf.as_slice());
        assert_eq!(
            rdr.headers().unwrap(),
            vec!["cluster_id", "unit_id", "a0", "eps0", "y"]
        );
        let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 80);
        let row = &rows[41];
        let (h, l): (usize, usize) = (row[0].parse().unwrap(), row[1].parse().unwrap());
        assert_eq!(row[3].parse::<f64>().unwrap(), pop.eps0[h][l]);
        assert_eq!(row[4].parse::<f64>().unwrap(), pop.y[h][l]);
    }
}
