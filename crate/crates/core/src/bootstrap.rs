//! Bootstrap inference for the cross-sectional quantile estimator.
//!
//! Two schemes share a first layer that resamples time rows with replacement
//! within every unit and refits the per-unit OLS:
//!
//! * SQB (stochastic design): additionally resamples units with replacement
//!   and re-aggregates, capturing both cross-sectional and time-series
//!   randomness. Rate sqrt(N).
//! * DQB (deterministic design): aggregates the refitted estimates directly,
//!   conditioning on the realized heterogeneity. Rate sqrt(N sqrt(T)).
//!
//! Inference objects are the symmetric-tail p-value and its dual interval
//! `theta_hat +/- q_{1-alpha}(|theta_b - theta_hat|)`. The rate factors
//! cancel in that construction and are kept as metadata only.
//!
//! Every replicate draws from streams derived by coordinates
//! (seed, purpose, replicate, unit), so runs are bit-identical for any
//! thread count.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ols::{fit_all, fit_unit, OlsFitOptions};
use crate::panel::{PanelData, UnitEstimates};
use crate::quantile::{aggregate, sample_quantile, validate_tau_grid, QuantileTarget};
use crate::rng::{stream_rng, Stream};

/// Which randomness layers the bootstrap replays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BootstrapDesign {
    /// SQB: time resampling plus cross-sectional unit resampling.
    #[serde(rename = "sqb")]
    Stochastic,
    /// DQB: time resampling only.
    #[serde(rename = "dqb")]
    Deterministic,
}

impl BootstrapDesign {
    pub fn label(self) -> &'static str {
        match self {
            BootstrapDesign::Stochastic => "sqb",
            BootstrapDesign::Deterministic => "dqb",
        }
    }

    /// Convergence-rate scaling of the design (diagnostic metadata).
    pub fn rate(self, n_units: usize, n_periods: usize) -> f64 {
        match self {
            BootstrapDesign::Stochastic => (n_units as f64).sqrt(),
            BootstrapDesign::Deterministic => {
                (n_units as f64 * (n_periods as f64).sqrt()).sqrt()
            }
        }
    }
}

impl std::str::FromStr for BootstrapDesign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sqb" | "stochastic" => Ok(BootstrapDesign::Stochastic),
            "dqb" | "deterministic" => Ok(BootstrapDesign::Deterministic),
            other => Err(Error::InvalidParameter(format!(
                "unknown bootstrap design `{other}` (expected sqb or dqb)"
            ))),
        }
    }
}

/// Bootstrap tuning knobs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub design: BootstrapDesign,
    /// Number of replicates B.
    pub n_replicates: usize,
    /// Nominal level for the confidence interval.
    pub alpha: f64,
    /// Master seed; every internal stream is derived from it.
    pub seed: u64,
    /// Redraw budget per unit when a time resample is rank-deficient.
    pub max_redraws: usize,
}

impl BootstrapConfig {
    pub fn new(design: BootstrapDesign, seed: u64) -> Self {
        BootstrapConfig {
            design,
            n_replicates: 299,
            alpha: 0.05,
            seed,
            max_redraws: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_replicates == 0 {
            return Err(Error::InvalidParameter(
                "n_replicates must be at least 1".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Output of a full bootstrap run for one (tau, coefficient) target.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapRun {
    pub point_estimate: f64,
    /// theta*_b (DQB) or theta**_b (SQB), indexed by replicate.
    pub replicates: Vec<f64>,
    pub target: QuantileTarget,
    pub design: BootstrapDesign,
    /// sqrt(N) or sqrt(N sqrt(T)); cancels in the interval, kept as metadata.
    pub rate: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct BootstrapRunWire {
    design: BootstrapDesign,
    tau: f64,
    coef_index: usize,
    #[serde(rename = "B")]
    b: usize,
    seed: u64,
    point_estimate: f64,
    ci: [f64; 2],
    rate: f64,
    replicates: Vec<f64>,
}

impl BootstrapRun {
    /// Serialize in the documented wire layout:
    /// `{design, tau, coef_index, B, seed, point_estimate, ci, rate, replicates}`.
    pub fn to_json(&self) -> String {
        let wire = BootstrapRunWire {
            design: self.design,
            tau: self.target.tau,
            coef_index: self.target.coef_index,
            b: self.replicates.len(),
            seed: self.seed,
            point_estimate: self.point_estimate,
            ci: [self.ci_lower, self.ci_upper],
            rate: self.rate,
            replicates: self.replicates.clone(),
        };
        serde_json::to_string_pretty(&wire).expect("bootstrap run serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let wire: BootstrapRunWire = serde_json::from_str(text)
            .map_err(|e| Error::InvalidParameter(format!("bad bootstrap json: {e}")))?;
        Ok(BootstrapRun {
            point_estimate: wire.point_estimate,
            replicates: wire.replicates,
            target: QuantileTarget::new(wire.tau, wire.coef_index)?,
            design: wire.design,
            rate: wire.rate,
            ci_lower: wire.ci[0],
            ci_upper: wire.ci[1],
            seed: wire.seed,
        })
    }
}

/// Draw T rows (y, Z) with replacement from one unit's observed rows,
/// preserving the pairing within each row.
pub fn resample_unit_time(
    panel: &PanelData,
    unit: usize,
    rng: &mut impl Rng,
) -> (DVector<f64>, DMatrix<f64>) {
    let t = panel.n_periods();
    let k = panel.n_regressors();
    let mut draws = Vec::with_capacity(t);
    for _ in 0..t {
        draws.push(rng.random_range(0..t));
    }
    let y = DVector::from_fn(t, |row, _| panel.outcome(unit, draws[row]));
    let z = DMatrix::from_fn(t, k, |row, col| panel.regressor(unit, draws[row], col));
    (y, z)
}

/// First bootstrap layer: independently per unit, resample time rows and
/// refit, redrawing (up to `max_redraws` extra attempts) when the resampled
/// design is rank-deficient.
pub fn first_step_bootstrap(
    panel: &PanelData,
    opts: &OlsFitOptions,
    cfg: &BootstrapConfig,
    replicate_index: usize,
) -> Result<UnitEstimates> {
    cfg.validate()?;
    let n = panel.n_units();
    let k = panel.n_regressors();
    let mut estimates = DMatrix::zeros(n, k);
    for unit in 0..n {
        let mut rng = stream_rng(
            cfg.seed,
            Stream::TimeResample,
            replicate_index as u64,
            unit as u64,
        );
        let mut fitted = None;
        for _attempt in 0..=cfg.max_redraws {
            let (y, z) = resample_unit_time(panel, unit, &mut rng);
            match fit_unit(&y, &z, opts) {
                Ok(theta) => {
                    fitted = Some(theta);
                    break;
                }
                Err(Error::RankDeficient { .. }) => continue,
                Err(e) => return Err(e.in_unit(unit)),
            }
        }
        match fitted {
            Some(theta) => {
                for c in 0..k {
                    estimates[(unit, c)] = theta[c];
                }
            }
            None => {
                return Err(Error::DegenerateResample {
                    unit,
                    replicate: replicate_index,
                    redraws: cfg.max_redraws,
                })
            }
        }
    }
    UnitEstimates::new(estimates, panel.n_periods())
}

fn unit_resample_indices(cfg: &BootstrapConfig, replicate_index: usize, n: usize) -> Vec<usize> {
    let mut rng = stream_rng(cfg.seed, Stream::UnitResample, replicate_index as u64, 0);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// One SQB replicate: refit under time resampling, redraw the cross-section
/// with replacement from the refitted estimates, and re-aggregate.
pub fn sqb_replicate(
    panel: &PanelData,
    opts: &OlsFitOptions,
    cfg: &BootstrapConfig,
    replicate_index: usize,
    target: QuantileTarget,
) -> Result<f64> {
    let est = first_step_bootstrap(panel, opts, cfg, replicate_index)?;
    let column = est.coefficient_column(target.coef_index)?;
    let indices = unit_resample_indices(cfg, replicate_index, panel.n_units());
    let resampled: Vec<f64> = indices.iter().map(|&i| column[i]).collect();
    sample_quantile(&resampled, target.tau)
}

/// One DQB replicate: refit under time resampling and re-aggregate directly,
/// with no cross-sectional resampling.
pub fn dqb_replicate(
    panel: &PanelData,
    opts: &OlsFitOptions,
    cfg: &BootstrapConfig,
    replicate_index: usize,
    target: QuantileTarget,
) -> Result<f64> {
    let est = first_step_bootstrap(panel, opts, cfg, replicate_index)?;
    let column = est.coefficient_column(target.coef_index)?;
    sample_quantile(column, target.tau)
}

/// Both designs' replicate values from one shared first-layer refit. Values
/// are identical to `sqb_replicate` / `dqb_replicate` because the unit
/// resampling stream is derived independently of the time streams.
pub fn replicate_pair(
    panel: &PanelData,
    opts: &OlsFitOptions,
    cfg: &BootstrapConfig,
    replicate_index: usize,
    target: QuantileTarget,
) -> Result<(f64, f64)> {
    let est = first_step_bootstrap(panel, opts, cfg, replicate_index)?;
    let column = est.coefficient_column(target.coef_index)?;
    let dqb = sample_quantile(column, target.tau)?;
    let indices = unit_resample_indices(cfg, replicate_index, panel.n_units());
    let resampled: Vec<f64> = indices.iter().map(|&i| column[i]).collect();
    let sqb = sample_quantile(&resampled, target.tau)?;
    Ok((sqb, dqb))
}

/// Symmetric confidence interval: `point_estimate +/- q` where q is the
/// lower (1-alpha) empirical quantile of the absolute deviations
/// |replicate - point_estimate| (same order-statistic convention as
/// `sample_quantile`).
pub fn confidence_interval(
    replicates: &[f64],
    point_estimate: f64,
    alpha: f64,
) -> Result<(f64, f64)> {
    if replicates.is_empty() {
        return Err(Error::EmptyReplicates);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let deviations: Vec<f64> = replicates
        .iter()
        .map(|r| (r - point_estimate).abs())
        .collect();
    let q = sample_quantile(&deviations, 1.0 - alpha)?;
    Ok((point_estimate - q, point_estimate + q))
}

/// Symmetric-tail p-value from raw replicates: the share of replicates at
/// least as far from the point estimate as the null is.
pub fn symmetric_p_value(replicates: &[f64], point_estimate: f64, theta_null: f64) -> f64 {
    let delta = (point_estimate - theta_null).abs();
    let hits = replicates
        .iter()
        .filter(|r| (**r - point_estimate).abs() >= delta)
        .count();
    hits as f64 / replicates.len() as f64
}

/// Symmetric-tail bootstrap p-value of H0: theta = theta_null.
pub fn p_value_symmetric(run: &BootstrapRun, theta_null: f64) -> f64 {
    symmetric_p_value(&run.replicates, run.point_estimate, theta_null)
}

/// Full bootstrap: point estimate from the original panel, B replicates of
/// the configured design (evaluated in parallel, collected by index), and
/// the symmetric interval.
pub fn run_bootstrap(
    panel: &PanelData,
    opts: &OlsFitOptions,
    cfg: &BootstrapConfig,
    target: QuantileTarget,
) -> Result<BootstrapRun> {
    cfg.validate()?;
    let original = fit_all(panel, opts)?;
    let point = aggregate(&original, target)?;

    let results: Vec<Result<f64>> = (0..cfg.n_replicates)
        .into_par_iter()
        .map(|b| match cfg.design {
            BootstrapDesign::Stochastic => sqb_replicate(panel, opts, cfg, b, target),
            BootstrapDesign::Deterministic => dqb_replicate(panel, opts, cfg, b, target),
        })
        .collect();
    let mut replicates = Vec::with_capacity(cfg.n_replicates);
    for (b, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => replicates.push(v),
            Err(e @ Error::DegenerateResample { .. }) => return Err(e),
            Err(e) => return Err(e.in_replicate(b)),
        }
    }

    let (ci_lower, ci_upper) = confidence_interval(&replicates, point.value, cfg.alpha)?;
    Ok(BootstrapRun {
        point_estimate: point.value,
        replicates,
        target,
        design: cfg.design,
        rate: cfg.design.rate(panel.n_units(), panel.n_periods()),
        ci_lower,
        ci_upper,
        seed: cfg.seed,
    })
}

/// One row of a quantile curve with both designs' confidence bands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveBand {
    pub tau: f64,
    pub estimate: f64,
    pub sqb_lower: f64,
    pub sqb_upper: f64,
    pub dqb_lower: f64,
    pub dqb_upper: f64,
}

/// Quantile curve over a tau grid with SQB and DQB bands at every tau.
///
/// All taus share the replicate-level resampling streams, so each band is
/// bit-identical to `run_bootstrap` at that tau with the same seed; the first
/// bootstrap layer is computed once per replicate rather than once per
/// (replicate, tau).
pub fn bootstrap_curve(
    panel: &PanelData,
    opts: &OlsFitOptions,
    cfg: &BootstrapConfig,
    coef_index: usize,
    taus: &[f64],
) -> Result<Vec<CurveBand>> {
    cfg.validate()?;
    validate_tau_grid(taus)?;
    let original = fit_all(panel, opts)?;
    let estimates = crate::quantile::quantile_curve(&original, coef_index, taus)?;

    // per replicate: (sqb values per tau, dqb values per tau)
    let per_replicate: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..cfg.n_replicates)
        .into_par_iter()
        .map(|b| {
            let est = first_step_bootstrap(panel, opts, cfg, b)?;
            let column = est.coefficient_column(coef_index)?;
            let dqb: Vec<f64> = taus
                .iter()
                .map(|&tau| sample_quantile(column, tau))
                .collect::<Result<_>>()?;
            let indices = unit_resample_indices(cfg, b, panel.n_units());
            let resampled: Vec<f64> = indices.iter().map(|&i| column[i]).collect();
            let sqb: Vec<f64> = taus
                .iter()
                .map(|&tau| sample_quantile(&resampled, tau))
                .collect::<Result<_>>()?;
            Ok((sqb, dqb))
        })
        .collect();

    let mut sqb_by_tau = vec![Vec::with_capacity(cfg.n_replicates); taus.len()];
    let mut dqb_by_tau = vec![Vec::with_capacity(cfg.n_replicates); taus.len()];
    for (b, r) in per_replicate.into_iter().enumerate() {
        match r {
            Ok((sqb, dqb)) => {
                for (j, (s, d)) in sqb.into_iter().zip(dqb).enumerate() {
                    sqb_by_tau[j].push(s);
                    dqb_by_tau[j].push(d);
                }
            }
            Err(e @ Error::DegenerateResample { .. }) => return Err(e),
            Err(e) => return Err(e.in_replicate(b)),
        }
    }

    let mut bands = Vec::with_capacity(taus.len());
    for (j, est) in estimates.iter().enumerate() {
        let (sqb_lower, sqb_upper) = confidence_interval(&sqb_by_tau[j], est.value, cfg.alpha)?;
        let (dqb_lower, dqb_upper) = confidence_interval(&dqb_by_tau[j], est.value, cfg.alpha)?;
        bands.push(CurveBand {
            tau: taus[j],
            estimate: est.value,
            sqb_lower,
            sqb_upper,
            dqb_lower,
            dqb_upper,
        });
    }
    Ok(bands)
}
