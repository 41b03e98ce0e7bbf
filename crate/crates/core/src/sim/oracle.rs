//! Closed-form asymptotic standard deviations of the two-step estimator,
//! used as independent checks on the Monte Carlo output.
//!
//! Stochastic design: sd = sqrt(tau (1 - tau)) / (f_S(theta_tau) sqrt(N)) --
//! the infeasible-benchmark variance; first-step noise does not enter at
//! first order.
//!
//! Deterministic design: sd = sqrt(sigma(theta_tau) / (sqrt(pi) f_D(theta_tau)))
//! / sqrt(N sqrt(T)) -- the per-unit scale sigma enters linearly, not
//! squared.

use crate::error::{Error, Result};
use crate::sim::dgp::{DgpFamily, DgpSpec, HeterogeneityMode, ScaleMode};
use crate::sim::dist::{chi_sq1_pdf, chi_sq1_quantile, normal_pdf, normal_quantile};

/// Density of the heterogeneity law at its tau-quantile.
fn density_at_quantile(mode: HeterogeneityMode, tau: f64) -> (f64, f64) {
    match mode {
        HeterogeneityMode::StochasticChiSq1 | HeterogeneityMode::DeterministicChiSq1Grid => {
            let q = chi_sq1_quantile(tau);
            (q, chi_sq1_pdf(q))
        }
        HeterogeneityMode::StochasticStdNormal
        | HeterogeneityMode::DeterministicStdNormalGrid => {
            let q = normal_quantile(tau);
            (q, normal_pdf(q))
        }
    }
}

/// Asymptotic sd of sqrt(T) theta_hat_Ti at theta_i0 = theta_tau, where a
/// closed form exists.
fn per_unit_sd(spec: &DgpSpec, tau: f64) -> Result<f64> {
    match spec.family {
        // sample mean: sd of sqrt(T) X-bar is sigma_i0
        DgpFamily::SampleMeanLognormal => match spec.scale {
            ScaleMode::Homogeneous => Ok(spec.noise_scale),
            // sigma and theta share the grid index, so sigma(theta_tau) is
            // the chi-squared(1) tau-quantile
            ScaleMode::HeteroChiSq1Grid => Ok(spec.noise_scale * chi_sq1_quantile(tau)),
            ScaleMode::HeteroChiSq1 => Err(Error::UnsupportedSpec(
                "random sigma has no single per-unit scale at theta_tau".into(),
            )),
        },
        // OLS with E(ZZ') = I and unit error variance: the sandwich value of
        // the target coefficient is noise_scale^2, independent of theta
        DgpFamily::RegressionGaussian => Ok(spec.noise_scale),
    }
}

/// Asymptotic standard deviation of theta_hat_tau under the spec's design.
pub fn oracle_asymptotic_sd(spec: &DgpSpec, tau: f64, n: usize, t: usize) -> Result<f64> {
    spec.validate()?;
    crate::quantile::validate_tau(tau)?;
    if n == 0 || t == 0 {
        return Err(Error::InvalidParameter("N and T must be positive".into()));
    }
    let (_, density) = density_at_quantile(spec.heterogeneity, tau);
    if spec.heterogeneity.is_deterministic() {
        let sigma = per_unit_sd(spec, tau)?;
        if sigma <= 0.0 {
            return Err(Error::UnsupportedSpec(
                "deterministic-design oracle needs a positive per-unit scale".into(),
            ));
        }
        let rate = (n as f64 * (t as f64).sqrt()).sqrt();
        Ok((sigma / (std::f64::consts::PI.sqrt() * density)).sqrt() / rate)
    } else {
        Ok((tau * (1.0 - tau)).sqrt() / (density * (n as f64).sqrt()))
    }
}
