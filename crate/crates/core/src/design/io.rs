//! Sample export/import: `cluster_id,unit_id,y,pi_h,pi_l_given_h,w_k,w_j_given_k,w_jk`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sample::{SampleDraw, SampledCluster, SampledUnit};
use super::weights::WeightSet;
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct SampleRow {
    cluster_id: usize,
    unit_id: usize,
    y: f64,
    pi_h: f64,
    pi_l_given_h: f64,
    w_k: Option<f64>,
    w_j_given_k: Option<f64>,
    w_jk: Option<f64>,
}

pub fn write_sample_csv<W: Write>(sample: &SampleDraw, weights: &WeightSet, writer: W) -> Result<()> {
    if weights.clusters.len() != sample.m() {
        return Err(Error::Design("weights do not match the sample".into()));
    }
    let mut out = csv::Writer::from_writer(writer);
    for (c, w) in sample.clusters.iter().zip(&weights.clusters) {
        for (j, u) in c.units.iter().enumerate() {
            out.serialize(SampleRow {
                cluster_id: c.cluster_id,
                unit_id: u.unit_id,
                y: u.y,
                pi_h: c.pi,
                pi_l_given_h: u.pi_given_cluster,
                w_k: Some(w.w_k),
                w_j_given_k: Some(w.w_j_given_k[j]),
                w_jk: Some(w.w_jk[j]),
            })?;
        }
    }
    out.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn save_sample_csv(sample: &SampleDraw, weights: &WeightSet, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_sample_csv(sample, weights, std::io::BufWriter::new(file))
}

/// Reads a sample in the export schema. Weight columns may be blank; weights
/// are rebuilt from the probabilities by the caller.
pub fn read_sample_csv<R: Read>(reader: R) -> Result<SampleDraw> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut rows: Vec<SampleRow> = rdr.deserialize().collect::<Result<_, _>>()?;
    if rows.is_empty() {
        return Err(Error::Parse("sample file has no rows".into()));
    }
    rows.sort_by_key(|r| (r.cluster_id, r.unit_id));

    let mut clusters: Vec<SampledCluster> = Vec::new();
    for row in rows {
        let unit = SampledUnit {
            unit_id: row.unit_id,
            y: row.y,
            pi_given_cluster: row.pi_l_given_h,
        };
        match clusters.last_mut() {
            Some(c) if c.cluster_id == row.cluster_id => {
                if c.pi != row.pi_h {
                    return Err(Error::Parse(format!(
                        "cluster {} has conflicting pi_h values",
                        row.cluster_id
                    )));
                }
                c.units.push(unit);
            }
            _ => clusters.push(SampledCluster {
                cluster_id: row.cluster_id,
                pi: row.pi_h,
                units: vec![unit],
            }),
        }
    }
    let sample = SampleDraw {
        clusters,
        pi_h: Vec::new(),
        design: None,
    };
    sample.validate()?;
    Ok(sample)
}

pub fn load_sample_csv(path: &Path) -> Result<SampleDraw> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_sample_csv(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{build_weights, draw_two_stage_sample, ClusterDesignKind, TwoStageDesign, UnitDesignKind, WeightMode};
    use crate::popgen::{generate_population, PopulationConfig};

    #[test]
    fn export_then_import_preserves_sample() {
        let pop = generate_population(&PopulationConfig::balanced(60, 10, 1.0, 2.0, 3.0, 4)).unwrap();
        let design = TwoStageDesign {
            cluster_kind: ClusterDesignKind::QuadraticSymmetric,
            unit_kind: UnitDesignKind::Quadratic,
            m: 8,
            n_k: 3,
            seed: 2,
        };
        let sample = draw_two_stage_sample(&pop, &design).unwrap();
        let weights = build_weights(&sample, WeightMode::Double, true).unwrap();
        let mut buf = Vec::new();
        write_sample_csv(&sample, &weights, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("cluster_id,unit_id,y,pi_h,pi_l_given_h,w_k,w_j_given_k,w_jk\n"));

        let back = read_sample_csv(buf.as_slice()).unwrap();
        assert_eq!(back.clusters, sample.clusters);
        assert_eq!(build_weights(&back, WeightMode::Double, true).unwrap(), weights);
    }

    #[test]
    fn blank_weight_columns_are_accepted() {
        let text = "cluster_id,unit_id,y,pi_h,pi_l_given_h,w_k,w_j_given_k,w_jk\n\
                    3,1,2.5,0.5,0.25,,,\n3,0,1.5,0.5,0.5,,,\n1,2,0.0,1,1,,,\n";
        let s = read_sample_csv(text.as_bytes()).unwrap();
        assert_eq!(s.cluster_ids(), vec![1, 3]);
        assert_eq!(s.unit_ids()[1], vec![0, 1]);
    }

    #[test]
    fn conflicting_cluster_probability() {
        let text = "cluster_id,unit_id,y,pi_h,pi_l_given_h,w_k,w_j_given_k,w_jk\n\
                    3,1,2.5,0.5,0.25,,,\n3,0,1.5,0.4,0.5,,,\n";
        assert!(read_sample_csv(text.as_bytes()).is_err());
    }
}
