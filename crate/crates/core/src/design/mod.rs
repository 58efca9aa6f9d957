//! Two-stage informative sampling: size measures, PPS inclusion
//! probabilities, systematic selection and sampling weights.

mod io;
mod pps;
mod sample;
mod size;
mod weights;

pub use io::{load_sample_csv, read_sample_csv, save_sample_csv, write_sample_csv};
pub use pps::{inclusion_probs, systematic_pps};
pub use sample::{draw_two_stage_sample, SampleDraw, SampledCluster, SampledUnit, TwoStageDesign};
pub use size::{size_measures, ClusterDesignKind, SizeMeasure, UnitDesignKind};
pub use weights::{build_weights, ClusterWeights, Normalization, WeightMode, WeightSet};
