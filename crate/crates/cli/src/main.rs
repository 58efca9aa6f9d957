use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use svyanova::design::{build_weights, load_sample_csv, WeightMode};
use svyanova::diagnostics::write_quantile_csv;
use svyanova::harness::{emit_plot_data, run_diagnostics, run_grid, with_workers, ScenarioFile};
use svyanova::inference::{
    map_estimate, run_gibbs, run_integrated_mcmc, ChainConfig, EstimatorSummary, Init, MapOptions, PriorConfig,
};

#[derive(Parser)]
#[command(name = "svyanova", version, about = "Survey-weighted one-way ANOVA estimation under informative sampling")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the replication study for every scenario in a scenario file.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// Use the file's reduced [desk] settings.
        #[arg(long)]
        desk: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides the file's base_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: one per core).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Informativeness, bound and residual-balance diagnostics per scenario.
    Diagnose {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        desk: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit one estimator to a sample CSV.
    Estimate {
        /// Sample CSV (`cluster_id,unit_id,y,pi_h,pi_l_given_h[,w_k,w_j_given_k,w_jk]`).
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        weights_mode: ModeArg,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long, default_value_t = 4000)]
        iterations: usize,
        /// Default: half the iterations.
        #[arg(long)]
        burnin: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep the weights unnormalized.
        #[arg(long)]
        raw_weights: bool,
        /// Write the posterior draws here (MCMC methods only).
        #[arg(long)]
        draws_out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Equal,
    Single,
    Double,
}

impl From<ModeArg> for WeightMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Equal => WeightMode::Equal,
            ModeArg::Single => WeightMode::Single,
            ModeArg::Double => WeightMode::Double,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Gibbs,
    Integrated,
    Map,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Simulate {
            scenario,
            desk,
            out,
            seed,
            workers,
        } => simulate(&scenario, desk, &out, seed, workers),
        Command::Diagnose {
            scenario,
            out,
            desk,
            seed,
        } => diagnose(&scenario, &out, desk, seed),
        Command::Estimate {
            data,
            weights_mode,
            method,
            iterations,
            burnin,
            seed,
            raw_weights,
            draws_out,
        } => estimate(
            &data,
            weights_mode.into(),
            method,
            ChainConfig {
                n_iterations: iterations,
                n_burnin: burnin.unwrap_or(iterations / 2),
                thin: 1,
                seed,
                init: Init::Auto,
            },
            !raw_weights,
            draws_out.as_deref(),
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn simulate(path: &Path, desk: bool, out: &Path, seed: Option<u64>, workers: Option<usize>) -> Result<()> {
    let scenarios = ScenarioFile::load(path)?.expand(desk, seed)?;
    let results = with_workers(workers, || run_grid(&scenarios))?;

    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (s, r) in scenarios.iter().zip(results) {
        match r {
            Ok(report) => {
                let failed: usize = report.cells.iter().map(|c| c.n_failed).sum();
                println!(
                    "{}: {} replicates x {} estimators, {failed} failed fits, {:.1}s",
                    s.id,
                    s.replicates,
                    s.estimators.len(),
                    report.wall_time_secs
                );
                reports.push(report);
            }
            Err(e) => {
                eprintln!("{}: {e}", s.id);
                failures.push(s.id.clone());
            }
        }
    }
    if !reports.is_empty() {
        let files = emit_plot_data(&reports, out)?;
        println!("wrote {} and {}", files.estimates.display(), files.quantiles.display());
    }
    if !failures.is_empty() {
        bail!("{} of {} scenarios failed: {}", failures.len(), scenarios.len(), failures.join(", "));
    }
    Ok(())
}

#[derive(Serialize)]
struct BalanceRow<'a> {
    scenario_id: &'a str,
    design: &'a str,
    n_k: usize,
    cluster: usize,
    sampling_fraction: f64,
    weighted_residual_mean: f64,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn diagnose(path: &Path, out: &Path, desk: bool, seed: Option<u64>) -> Result<()> {
    let file = ScenarioFile::load(path)?;
    let scenarios = file.expand(desk, seed)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let mut reports = Vec::new();
    for s in &scenarios {
        let d = run_diagnostics(s, file.balance_replicates)?;
        println!(
            "{}: balance {:+.4} (z {:+.2}), m/M {:.4}{}",
            s.id,
            d.balance.overall_mean,
            d.balance.z_score(),
            d.bounds.cluster_fraction,
            if d.bounds.flagged { " [below threshold]" } else { "" }
        );
        reports.push(d);
    }

    let summaries: Vec<_> = reports.iter().map(|d| d.informativeness.clone()).collect();
    write_quantile_csv(&summaries, create(&out.join("informativeness.csv"))?)?;

    let mut balance = csv::Writer::from_writer(create(&out.join("balance.csv"))?);
    for d in &reports {
        let b = &d.balance;
        for (h, (&f, &r)) in b.sampling_fraction.iter().zip(&b.per_cluster).enumerate() {
            balance.serialize(BalanceRow {
                scenario_id: &d.scenario_id,
                design: &b.design,
                n_k: b.n_k,
                cluster: h,
                sampling_fraction: f,
                weighted_residual_mean: r,
            })?;
        }
    }
    balance.flush()?;

    let mut json = create(&out.join("diagnostics.json"))?;
    serde_json::to_writer_pretty(&mut json, &reports)?;
    json.flush()?;
    Ok(())
}

fn estimate(
    data: &Path,
    mode: WeightMode,
    method: Method,
    chain: ChainConfig,
    normalize: bool,
    draws_out: Option<&Path>,
) -> Result<()> {
    let sample = load_sample_csv(data)?;
    let weights = build_weights(&sample, mode, normalize)?;
    let prior = PriorConfig::default();
    let summary = match method {
        Method::Map => {
            if draws_out.is_some() {
                bail!("--draws-out needs an MCMC method");
            }
            let est = map_estimate(&sample, &weights, &prior, &Init::Auto, &MapOptions::default())?;
            EstimatorSummary::from_map(mode, &est)
        }
        Method::Gibbs | Method::Integrated => {
            let draws = if method == Method::Gibbs {
                run_gibbs(&sample, &weights, &prior, &chain)?
            } else {
                run_integrated_mcmc(&sample, &weights, &prior, &chain)?
            };
            if let Some(p) = draws_out {
                draws.write_csv(create(p)?, true)?;
            }
            let name = if method == Method::Gibbs { "gibbs" } else { "integrated" };
            EstimatorSummary::from_draws(mode, name, &draws)
        }
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
