use serde::{Deserialize, Serialize};

use crate::popgen::Population;

/// First-stage (cluster) size measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterDesignKind {
    /// `a² + 1`
    QuadraticSymmetric,
    /// `a − min(a) + 1`
    LinearAsymmetric,
    Srs,
}

/// Second-stage (unit within cluster) size measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitDesignKind {
    /// `max(0, ε)² + 1`
    Quadratic,
    /// `0.3·max(0, ε)² + 1`
    WeakQuadratic,
    /// `ε − min(ε) + 1`, minimum over the whole population
    Linear,
    /// `0.3·(ε − min(ε)) + 1`
    WeakLinear,
    /// `ε² + 1`
    SymmetricQuadratic,
    Srs,
}

impl ClusterDesignKind {
    pub const ALL: [ClusterDesignKind; 3] = [
        ClusterDesignKind::QuadraticSymmetric,
        ClusterDesignKind::LinearAsymmetric,
        ClusterDesignKind::Srs,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ClusterDesignKind::QuadraticSymmetric => "quadratic_symmetric",
            ClusterDesignKind::LinearAsymmetric => "linear_asymmetric",
            ClusterDesignKind::Srs => "srs",
        }
    }

    /// Sizes for the given cluster effects.
    pub fn sizes(self, effects: &[f64]) -> Vec<f64> {
        match self {
            ClusterDesignKind::QuadraticSymmetric => effects.iter().map(|a| a * a + 1.0).collect(),
            ClusterDesignKind::LinearAsymmetric => {
                let min = effects.iter().copied().fold(f64::INFINITY, f64::min);
                effects.iter().map(|a| a - min + 1.0).collect()
            }
            ClusterDesignKind::Srs => vec![1.0; effects.len()],
        }
    }
}

impl UnitDesignKind {
    pub const ALL: [UnitDesignKind; 6] = [
        UnitDesignKind::Quadratic,
        UnitDesignKind::WeakQuadratic,
        UnitDesignKind::Linear,
        UnitDesignKind::WeakLinear,
        UnitDesignKind::SymmetricQuadratic,
        UnitDesignKind::Srs,
    ];

    pub fn label(self) -> &'static str {
        match self {
            UnitDesignKind::Quadratic => "quadratic",
            UnitDesignKind::WeakQuadratic => "weak_quadratic",
            UnitDesignKind::Linear => "linear",
            UnitDesignKind::WeakLinear => "weak_linear",
            UnitDesignKind::SymmetricQuadratic => "symmetric_quadratic",
            UnitDesignKind::Srs => "srs",
        }
    }

    /// Sizes for one cluster's residuals; `eps_min` is the population-wide
    /// minimum residual used by the linear designs.
    pub fn sizes(self, eps: &[f64], eps_min: f64) -> Vec<f64> {
        let f: fn(f64, f64) -> f64 = match self {
            UnitDesignKind::Quadratic => |e, _| e.max(0.0).powi(2) + 1.0,
            UnitDesignKind::WeakQuadratic => |e, _| 0.3 * e.max(0.0).powi(2) + 1.0,
            UnitDesignKind::Linear => |e, min| e - min + 1.0,
            UnitDesignKind::WeakLinear => |e, min| 0.3 * (e - min) + 1.0,
            UnitDesignKind::SymmetricQuadratic => |e, _| e * e + 1.0,
            UnitDesignKind::Srs => |_, _| 1.0,
        };
        eps.iter().map(|&e| f(e, eps_min)).collect()
    }
}

/// Which size measure to evaluate against a population.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeMeasure {
    Cluster(ClusterDesignKind),
    /// Unit sizes within the given population cluster.
    Unit(UnitDesignKind, usize),
}

/// Size measures over the population's clusters, or over one cluster's units.
pub fn size_measures(population: &Population, measure: SizeMeasure) -> Vec<f64> {
    match measure {
        SizeMeasure::Cluster(kind) => kind.sizes(&population.a0),
        SizeMeasure::Unit(kind, h) => kind.sizes(&population.eps0[h], population.min_eps()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cluster_sizes_by_formula() {
        let a = [0.0, 2.0, -2.0];
        assert_eq!(ClusterDesignKind::QuadraticSymmetric.sizes(&a), vec![1.0, 5.0, 5.0]);
        assert_eq!(ClusterDesignKind::LinearAsymmetric.sizes(&a), vec![3.0, 5.0, 1.0]);
        assert_eq!(ClusterDesignKind::Srs.sizes(&a), vec![1.0; 3]);
    }

    #[test]
    fn unit_sizes_by_formula() {
        let e = [-1.0, 0.0, 2.0];
        let wq = UnitDesignKind::WeakQuadratic.sizes(&e, -1.0);
        assert_eq!(wq[0], 1.0);
        assert_eq!(wq[1], 1.0);
        assert!((wq[2] - 2.2).abs() < 1e-15);
        assert_eq!(UnitDesignKind::Quadratic.sizes(&e, -1.0), vec![1.0, 1.0, 5.0]);
        assert_eq!(UnitDesignKind::SymmetricQuadratic.sizes(&e, -1.0), vec![2.0, 1.0, 5.0]);
        // population minimum below this cluster's minimum
        assert_eq!(UnitDesignKind::Linear.sizes(&e, -3.0), vec![3.0, 4.0, 6.0]);
        let wl = UnitDesignKind::WeakLinear.sizes(&e, -3.0);
        for (got, want) in wl.iter().zip([1.6, 1.9, 2.5]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(UnitDesignKind::Srs.sizes(&e, -3.0), vec![1.0; 3]);
    }

    #[test]
    fn all_sizes_positive() {
        let e: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.7).collect();
        let min = e.iter().copied().fold(f64::INFINITY, f64::min);
        for kind in UnitDesignKind::ALL {
            assert!(kind.sizes(&e, min).iter().all(|&s| s >= 1.0), "{kind:?}");
        }
        for kind in ClusterDesignKind::ALL {
            assert!(kind.sizes(&e).iter().all(|&s| s >= 1.0), "{kind:?}");
        }
    }
}
