//! Monte Carlo coverage and bias experiments.
//!
//! Each cell (N, T, tau) simulates `n_mc` independent panels, runs the
//! two-step estimator plus both bootstrap schemes on every panel, and scores
//! each scheme's symmetric p-value against the true target. Coverage is the
//! share of replications with p > alpha, the exact dual of the symmetric
//! interval containing the truth.
//!
//! Replications parallelize across a work pool; every replication's streams
//! are derived from (master seed, cell coordinates, replication index), so a
//! cell rerun in isolation reproduces its numbers exactly.

use std::fs::File;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{replicate_pair, symmetric_p_value, BootstrapConfig, BootstrapDesign};
use crate::error::{Error, Result};
use crate::ols::{fit_all, OlsFitOptions};
use crate::quantile::{aggregate, QuantileTarget};
use crate::rng::{splitmix64, stream_rng, Stream};
use crate::sim::dgp::{gen_theta, simulate_panel, DgpSpec};
use crate::sim::presets::SimulationSpec;

/// One (N, T, tau) cell of an experiment grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub n: usize,
    pub t: usize,
    pub tau: f64,
}

/// One Monte Carlo replication's scored outcome.
#[derive(Debug, Clone, Copy)]
pub struct RepOutcome {
    pub theta_hat: f64,
    pub sqb_p: f64,
    pub dqb_p: f64,
}

/// All replications of one cell, plus the target they were scored against.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub cell: CellSpec,
    pub truth: f64,
    pub alpha: f64,
    pub n_replicates: usize,
    pub reps: Vec<RepOutcome>,
}

impl CellOutcome {
    pub fn bias(&self) -> f64 {
        self.reps
            .iter()
            .map(|r| r.theta_hat - self.truth)
            .sum::<f64>()
            / self.reps.len() as f64
    }

    pub fn coverage(&self, method: BootstrapDesign) -> f64 {
        let covered = self
            .reps
            .iter()
            .filter(|r| self.p_value(r, method) > self.alpha)
            .count();
        covered as f64 / self.reps.len() as f64
    }

    pub fn mc_stderr(&self, method: BootstrapDesign) -> f64 {
        let c = self.coverage(method);
        (c * (1.0 - c) / self.reps.len() as f64).sqrt()
    }

    /// Monte Carlo standard deviation of the point estimator.
    pub fn estimate_sd(&self) -> f64 {
        let n = self.reps.len() as f64;
        let mean = self.reps.iter().map(|r| r.theta_hat).sum::<f64>() / n;
        (self
            .reps
            .iter()
            .map(|r| (r.theta_hat - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0))
            .sqrt()
    }

    pub fn p_values(&self, method: BootstrapDesign) -> Vec<f64> {
        self.reps.iter().map(|r| self.p_value(r, method)).collect()
    }

    fn p_value(&self, rep: &RepOutcome, method: BootstrapDesign) -> f64 {
        match method {
            BootstrapDesign::Stochastic => rep.sqb_p,
            BootstrapDesign::Deterministic => rep.dqb_p,
        }
    }
}

/// Seed namespace for one cell, a pure function of the cell coordinates so
/// any cell can be reproduced standalone.
fn cell_seed(master: u64, spec: &DgpSpec, tau: f64) -> u64 {
    let mut h = splitmix64(master ^ 0x10c0_ffee);
    h = splitmix64(h ^ spec.n_units as u64);
    h = splitmix64(h ^ spec.n_periods as u64);
    splitmix64(h ^ tau.to_bits())
}

fn mc_error(spec: &DgpSpec, tau: f64, replication: usize, source: Error) -> Error {
    Error::InMcReplication {
        cell: format!(
            "N={} T={} tau={tau} {}",
            spec.n_units,
            spec.n_periods,
            spec.heterogeneity.design_label()
        ),
        replication,
        source: Box::new(source),
    }
}

/// Run every replication of one cell, scoring both bootstrap schemes against
/// the cell's true target. The schemes share the first bootstrap layer, so
/// running both costs little more than one.
pub fn run_cell(
    spec: &DgpSpec,
    tau: f64,
    opts: &OlsFitOptions,
    n_mc: usize,
    n_replicates: usize,
    alpha: f64,
    master_seed: u64,
) -> Result<CellOutcome> {
    spec.validate()?;
    opts.validate()?;
    if n_mc == 0 {
        return Err(Error::InvalidParameter("n_mc must be positive".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let target = QuantileTarget::new(tau, spec.target_coef())?;
    let truth = spec.true_quantile(tau)?;
    let seed = cell_seed(master_seed, spec, tau);

    let outcomes: Vec<Result<RepOutcome>> = (0..n_mc)
        .into_par_iter()
        .map(|rep| {
            let mut panel_rng = stream_rng(seed, Stream::McPanel, rep as u64, 0);
            let theta = gen_theta(spec.heterogeneity, spec.n_units, &mut panel_rng);
            let panel = simulate_panel(spec, &theta, &mut panel_rng)?;
            let est = fit_all(&panel, opts)?;
            let point = aggregate(&est, target)?;

            let boot_cfg = BootstrapConfig {
                design: BootstrapDesign::Stochastic,
                n_replicates,
                alpha,
                seed: crate::rng::derive_seed(seed, Stream::McBootstrap, rep as u64, 0),
                max_redraws: 10,
            };
            let mut sqb = Vec::with_capacity(n_replicates);
            let mut dqb = Vec::with_capacity(n_replicates);
            for b in 0..n_replicates {
                let (s, d) = replicate_pair(&panel, opts, &boot_cfg, b, target)?;
                sqb.push(s);
                dqb.push(d);
            }
            Ok(RepOutcome {
                theta_hat: point.value,
                sqb_p: symmetric_p_value(&sqb, point.value, truth),
                dqb_p: symmetric_p_value(&dqb, point.value, truth),
            })
        })
        .collect();

    let mut reps = Vec::with_capacity(n_mc);
    for (r, o) in outcomes.into_iter().enumerate() {
        reps.push(o.map_err(|e| mc_error(spec, tau, r, e))?);
    }
    Ok(CellOutcome {
        cell: CellSpec {
            n: spec.n_units,
            t: spec.n_periods,
            tau,
        },
        truth,
        alpha,
        n_replicates,
        reps,
    })
}

/// Point estimates only: one theta_hat per replication, no bootstrap. Used
/// for sampling-distribution diagnostics (rate and oracle checks). Panel
/// streams match `run_cell`'s, so the estimates agree replication for
/// replication.
pub fn simulate_estimates(
    spec: &DgpSpec,
    tau: f64,
    opts: &OlsFitOptions,
    n_mc: usize,
    master_seed: u64,
) -> Result<Vec<f64>> {
    spec.validate()?;
    let target = QuantileTarget::new(tau, spec.target_coef())?;
    let seed = cell_seed(master_seed, spec, tau);
    let outcomes: Vec<Result<f64>> = (0..n_mc)
        .into_par_iter()
        .map(|rep| {
            let mut panel_rng = stream_rng(seed, Stream::McPanel, rep as u64, 0);
            let theta = gen_theta(spec.heterogeneity, spec.n_units, &mut panel_rng);
            let panel = simulate_panel(spec, &theta, &mut panel_rng)?;
            let est = fit_all(&panel, opts)?;
            Ok(aggregate(&est, target)?.value)
        })
        .collect();
    let mut values = Vec::with_capacity(n_mc);
    for (r, o) in outcomes.into_iter().enumerate() {
        values.push(o.map_err(|e| mc_error(spec, tau, r, e))?);
    }
    Ok(values)
}

/// One row of a coverage report: a (cell, method) pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageRow {
    pub n: usize,
    pub t: usize,
    pub tau: f64,
    /// "stochastic" or "deterministic" (the DGP design, not the method).
    pub design: String,
    /// "sqb" or "dqb".
    pub method: String,
    pub bias: f64,
    pub coverage: f64,
    pub n_mc: usize,
    pub b: usize,
    pub mc_stderr: f64,
}

/// Bias/coverage table over an experiment grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageReport {
    pub rows: Vec<CoverageRow>,
}

impl CoverageReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,t,tau,design,method,bias,coverage,n_mc,b,mc_stderr\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.n, r.t, r.tau, r.design, r.method, r.bias, r.coverage, r.n_mc, r.b, r.mc_stderr
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = File::create(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        f.write_all(self.to_csv().as_bytes()).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Run a whole experiment: every cell of the spec's grid, one report row per
/// (cell, method).
pub fn run_coverage_experiment(
    spec: &SimulationSpec,
    opts: &OlsFitOptions,
) -> Result<CoverageReport> {
    spec.validate()?;
    let mut rows = Vec::new();
    for cell in &spec.cells {
        let dgp = spec.dgp_for_cell(cell);
        let outcome = run_cell(
            &dgp,
            cell.tau,
            opts,
            spec.n_mc,
            spec.b,
            spec.alpha,
            spec.seed,
        )?;
        for method in &spec.methods {
            rows.push(CoverageRow {
                n: cell.n,
                t: cell.t,
                tau: cell.tau,
                design: dgp.heterogeneity.design_label().to_string(),
                method: method.label().to_string(),
                bias: outcome.bias(),
                coverage: outcome.coverage(*method),
                n_mc: spec.n_mc,
                b: spec.b,
                mc_stderr: outcome.mc_stderr(*method),
            });
        }
    }
    Ok(CoverageReport { rows })
}
