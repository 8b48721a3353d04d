//! Monte Carlo replication engine: average bias, variance of point
//! estimates, and empirical coverage over DGP x method x sample-size grids.
//!
//! Per-replication seeds derive from (master seed, n, replication index), so
//! every method sees the same synthetic dataset within a replication and
//! method comparisons are paired. Replications are the unit of parallelism
//! and results assemble in replication order, so output is deterministic for
//! any worker count.

use crate::dgp::DGPSpec;
use crate::domain::{BoundaryPoint, Dataset, EstimateReport, ScorePoint};
use crate::error::{Error, Result};
use crate::estimator::{estimate_at, fit_rd, RDMethodConfig};
use crate::numeric::{mean, sample_variance};
use crate::seeding::derive_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::time::Instant;

/// A named estimator entry in a study grid.
#[derive(Clone, Debug)]
pub struct MethodEntry {
    pub name: String,
    pub config: RDMethodConfig,
}

impl MethodEntry {
    pub fn new(name: impl Into<String>, config: RDMethodConfig) -> Self {
        Self { name: name.into(), config }
    }
}

/// Full study grid.
#[derive(Clone, Debug)]
pub struct MCConfig {
    pub dgp: DGPSpec,
    pub boundary_point: ScorePoint,
    pub methods: Vec<MethodEntry>,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub master_seed: u64,
    pub level: f64,
    /// When false (the default), reported wall times are zero so that output
    /// files are byte-identical across runs and thread counts. Enable to
    /// record measured seconds instead.
    pub record_timing: bool,
}

impl MCConfig {
    fn validate_grid(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(Error::Config(format!(
                "need at least 2 replications, got {}",
                self.replications
            )));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.contains(&0) {
            return Err(Error::Config("sample sizes must be positive and non-empty".into()));
        }
        if !self.level.is_finite() || self.level <= 0.0 || self.level >= 1.0 {
            return Err(Error::Config(format!("level must lie in (0,1), got {}", self.level)));
        }
        self.dgp.validate()
    }
}

/// Anything that can produce a point estimate with an interval from a
/// simulated dataset. `seed` is the method's randomness budget for this
/// replication.
pub trait PointEstimator: Sync {
    fn estimate(
        &self,
        data: &Dataset,
        x_c: &BoundaryPoint,
        level: f64,
        seed: u64,
    ) -> Result<EstimateReport>;
}

/// The production estimator: fit the configured method on the replication's
/// dataset and evaluate at the boundary point.
struct ConfiguredMethod {
    config: RDMethodConfig,
}

impl PointEstimator for ConfiguredMethod {
    fn estimate(
        &self,
        data: &Dataset,
        x_c: &BoundaryPoint,
        level: f64,
        seed: u64,
    ) -> Result<EstimateReport> {
        let mut config = self.config.with_seed(seed);
        config.level = level;
        let fitted = fit_rd(data, x_c.rule(), &config)?;
        estimate_at(&fitted, x_c)
    }
}

/// One aggregated result row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCRow {
    pub method: String,
    pub n: usize,
    pub mean_bias: f64,
    /// Sample variance of the point estimates across successful
    /// replications (not the mean squared standard error).
    pub variance: f64,
    pub coverage: f64,
    pub mean_ci_length: f64,
    pub failures: usize,
    pub wall_time: f64,
}

/// Aggregated study output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCResult {
    pub truth: f64,
    pub rows: Vec<MCRow>,
}

/// Runs the study over its (method, n) grid.
pub fn run_mc(config: &MCConfig) -> Result<MCResult> {
    if config.methods.is_empty() {
        return Err(Error::Config("study needs at least one method".into()));
    }
    for entry in &config.methods {
        entry.config.validate()?;
    }
    let estimators: Vec<(String, Box<dyn PointEstimator>)> = config
        .methods
        .iter()
        .map(|entry| {
            (
                entry.name.clone(),
                Box::new(ConfiguredMethod { config: entry.config.clone() })
                    as Box<dyn PointEstimator>,
            )
        })
        .collect();
    let refs: Vec<(&str, &dyn PointEstimator)> =
        estimators.iter().map(|(name, est)| (name.as_str(), est.as_ref())).collect();
    run_mc_with(config, &refs)
}

/// Runs the study grid with externally supplied estimators (the `methods`
/// field of the config is ignored). This is the hook the calibration tests
/// use to inject oracle estimators.
pub fn run_mc_with(config: &MCConfig, estimators: &[(&str, &dyn PointEstimator)]) -> Result<MCResult> {
    config.validate_grid()?;
    if estimators.is_empty() {
        return Err(Error::Config("study needs at least one estimator".into()));
    }
    let truth = config.dgp.true_effect(&config.boundary_point)?;
    let x_c = BoundaryPoint::new(config.boundary_point.clone(), config.dgp.rule.clone())?;

    let mut rows: Vec<Vec<MCRow>> = vec![Vec::new(); estimators.len()];
    for &n in &config.sample_sizes {
        // One dataset per replication, shared across methods (paired design).
        let outcomes: Vec<Vec<(Result<EstimateReport>, f64)>> = (0..config.replications)
            .into_par_iter()
            .map(|r| {
                let rep_seed = derive_seed(config.master_seed, &[n as u64, r as u64]);
                let data = config.dgp.simulate(n, rep_seed);
                estimators
                    .iter()
                    .enumerate()
                    .map(|(m, (_, estimator))| {
                        let est_seed = derive_seed(rep_seed, &[m as u64]);
                        let started = Instant::now();
                        let outcome = match &data {
                            Ok(data) => estimator.estimate(data, &x_c, config.level, est_seed),
                            Err(e) => Err(Error::Harness(format!("simulation failed: {e}"))),
                        };
                        let elapsed = started.elapsed().as_secs_f64();
                        (outcome, elapsed)
                    })
                    .collect()
            })
            .collect();

        for (m, (name, _)) in estimators.iter().enumerate() {
            let mut estimates = Vec::with_capacity(config.replications);
            let mut lengths = Vec::with_capacity(config.replications);
            let mut covered = 0usize;
            let mut failures = 0usize;
            let mut seconds = 0.0;
            for rep in &outcomes {
                let (outcome, elapsed) = &rep[m];
                seconds += elapsed;
                match outcome {
                    Ok(report) => {
                        estimates.push(report.estimate);
                        lengths.push(report.ci_length());
                        if report.covers(truth) {
                            covered += 1;
                        }
                    }
                    Err(_) => failures += 1,
                }
            }
            if estimates.is_empty() {
                return Err(Error::Harness(format!(
                    "every replication failed for method '{name}' at n={n}"
                )));
            }
            rows[m].push(MCRow {
                method: name.to_string(),
                n,
                mean_bias: mean(&estimates) - truth,
                variance: sample_variance(&estimates),
                coverage: covered as f64 / estimates.len() as f64,
                mean_ci_length: mean(&lengths),
                failures,
                wall_time: if config.record_timing { seconds } else { 0.0 },
            });
        }
    }
    Ok(MCResult { truth, rows: rows.into_iter().flatten().collect() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
}

/// Writes the result table. CSV emits one row per (method, n) with the fixed
/// column order `method,n,mean_bias,variance,coverage,mean_ci_length,
/// failures,wall_time`, '.' decimal separators, and round-trippable float
/// formatting. JSON serializes the whole [`MCResult`].
pub fn emit_table<W: Write>(result: &MCResult, format: TableFormat, writer: &mut W) -> Result<()> {
    if result.rows.is_empty() {
        return Err(Error::Config("result table is empty".into()));
    }
    match format {
        TableFormat::Csv => {
            let mut out = csv::Writer::from_writer(writer);
            out.write_record([
                "method",
                "n",
                "mean_bias",
                "variance",
                "coverage",
                "mean_ci_length",
                "failures",
                "wall_time",
            ])?;
            for row in &result.rows {
                out.write_record([
                    row.method.clone(),
                    row.n.to_string(),
                    row.mean_bias.to_string(),
                    row.variance.to_string(),
                    row.coverage.to_string(),
                    row.mean_ci_length.to_string(),
                    row.failures.to_string(),
                    row.wall_time.to_string(),
                ])?;
            }
            out.flush()?;
        }
        TableFormat::Json => {
            serde_json::to_writer_pretty(&mut *writer, result)?;
            writer.write_all(b"\n")?;
        }
    }
    Ok(())
}
