//! Long-format CSV output for external plotting.
//!
//! * `estimates.csv` — `scenario_id,estimator,parameter,replicate,estimate,plot_estimate,status,error`
//! * `quantiles.csv` — `scenario_id,estimator,parameter,q05,q50,q95,n_ok,n_failed`
//! * `reference.csv` — `scenario_id,parameter,value` (generating values)
//! * `replicates.csv` — per-replicate acceptance rate / convergence flag
//! * `reports.json` — full reports, including wall time
//!
//! Only `reports.json` carries wall time, so the CSVs of a rerun are
//! byte-identical.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Estimator, ReplicationReport};
use crate::error::{Error, Result};
use crate::inference::Param;

/// MAP estimates are clipped to `±MAP_PLOT_LIMIT` in `plot_estimate` only.
pub const MAP_PLOT_LIMIT: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub scenario_id: String,
    pub estimator: String,
    pub parameter: String,
    pub replicate: usize,
    pub estimate: Option<f64>,
    pub plot_estimate: Option<f64>,
    pub status: String,
    pub error: String,
}

#[derive(Debug, Serialize)]
struct QuantileRow<'a> {
    scenario_id: &'a str,
    estimator: &'a str,
    parameter: &'a str,
    q05: Option<f64>,
    q50: Option<f64>,
    q95: Option<f64>,
    n_ok: usize,
    n_failed: usize,
}

#[derive(Debug, Serialize)]
struct ReferenceRow<'a> {
    scenario_id: &'a str,
    parameter: &'a str,
    value: f64,
}

#[derive(Debug, Serialize)]
struct ReplicateRow<'a> {
    scenario_id: &'a str,
    estimator: &'a str,
    replicate: usize,
    status: &'a str,
    acceptance_rate: Option<f64>,
    converged: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedFiles {
    pub estimates: PathBuf,
    pub quantiles: PathBuf,
    pub reference: PathBuf,
    pub replicates: PathBuf,
    pub reports: PathBuf,
}

fn status(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "failed"
    }
}

pub fn write_estimates_csv<W: Write>(reports: &[ReplicationReport], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    for rep in reports {
        for cell in &rep.cells {
            for p in Param::ALL {
                for r in &cell.replicates {
                    let estimate = r.estimate.map(|e| e.get(p));
                    let plot_estimate = match cell.estimator {
                        Estimator::DoubleMap => estimate.map(|v| v.clamp(-MAP_PLOT_LIMIT, MAP_PLOT_LIMIT)),
                        _ => estimate,
                    };
                    out.serialize(EstimateRow {
                        scenario_id: rep.scenario.id.clone(),
                        estimator: cell.estimator.label().into(),
                        parameter: p.label().into(),
                        replicate: r.replicate,
                        estimate,
                        plot_estimate,
                        status: status(r.is_ok()).into(),
                        error: r.error.clone().unwrap_or_default(),
                    })?;
                }
            }
        }
    }
    out.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn read_estimates_csv<R: Read>(reader: R) -> Result<Vec<EstimateRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    Ok(rdr.deserialize().collect::<Result<_, _>>()?)
}

pub fn write_quantiles_csv<W: Write>(reports: &[ReplicationReport], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    for rep in reports {
        for cell in &rep.cells {
            for p in Param::ALL {
                let q = cell.quantiles;
                out.serialize(QuantileRow {
                    scenario_id: &rep.scenario.id,
                    estimator: cell.estimator.label(),
                    parameter: p.label(),
                    q05: q.map(|q| q.q05.get(p)),
                    q50: q.map(|q| q.q50.get(p)),
                    q95: q.map(|q| q.q95.get(p)),
                    n_ok: cell.replicates.len() - cell.n_failed,
                    n_failed: cell.n_failed,
                })?;
            }
        }
    }
    out.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

fn write_reference_csv<W: Write>(reports: &[ReplicationReport], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    for rep in reports {
        let truth = rep.scenario.reference();
        for p in Param::ALL {
            out.serialize(ReferenceRow {
                scenario_id: &rep.scenario.id,
                parameter: p.label(),
                value: truth.get(p),
            })?;
        }
    }
    out.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

fn write_replicates_csv<W: Write>(reports: &[ReplicationReport], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    for rep in reports {
        for cell in &rep.cells {
            for r in &cell.replicates {
                out.serialize(ReplicateRow {
                    scenario_id: &rep.scenario.id,
                    estimator: cell.estimator.label(),
                    replicate: r.replicate,
                    status: status(r.is_ok()),
                    acceptance_rate: r.acceptance_rate,
                    converged: r.converged,
                })?;
            }
        }
    }
    out.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Writes all output files into `out_dir` (created if missing).
pub fn emit_plot_data(reports: &[ReplicationReport], out_dir: &Path) -> Result<EmittedFiles> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let files = EmittedFiles {
        estimates: out_dir.join("estimates.csv"),
        quantiles: out_dir.join("quantiles.csv"),
        reference: out_dir.join("reference.csv"),
        replicates: out_dir.join("replicates.csv"),
        reports: out_dir.join("reports.json"),
    };
    // csv errors carry no path; attach it
    let with_path = |path: &Path, r: Result<()>| r.map_err(|e| Error::Parse(format!("{}: {e}", path.display())));
    with_path(&files.estimates, write_estimates_csv(reports, create(&files.estimates)?))?;
    with_path(&files.quantiles, write_quantiles_csv(reports, create(&files.quantiles)?))?;
    with_path(&files.reference, write_reference_csv(reports, create(&files.reference)?))?;
    with_path(&files.replicates, write_replicates_csv(reports, create(&files.replicates)?))?;
    let mut json = create(&files.reports)?;
    serde_json::to_writer_pretty(&mut json, reports)?;
    json.flush().map_err(|e| Error::io(&files.reports, e))?;
    Ok(files)
}
