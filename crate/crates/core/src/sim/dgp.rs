//! Synthetic data-generating processes for the Monte Carlo experiments.
//!
//! Two families:
//!
//! * `SampleMeanLognormal`: X_it lognormal with E(X_it) = theta_i0 and
//!   Var(X_it) = sigma_i0^2, packaged as an intercept-only panel (K = 1) so
//!   the per-unit OLS fit equals the time-series mean.
//! * `RegressionGaussian`: y_it = sum_k beta_i0k z_itk + theta_i0 z_it(K-1) +
//!   eps_it with standard-normal regressors and errors; theta_i0 rides the last
//!   regressor.
//!
//! Heterogeneity is either drawn i.i.d. (stochastic design) or pinned to the
//! deterministic quantile grid F^{-1}(i/(N+1)) (deterministic design).

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::PanelData;
use crate::sim::dist::{chi_sq1_quantile, normal_quantile};

/// How the latent coefficients theta_i0 are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeterogeneityMode {
    /// theta_i0 i.i.d. chi-squared(1).
    StochasticChiSq1,
    /// theta_i0 i.i.d. standard normal.
    StochasticStdNormal,
    /// theta_i0 = F^{-1}_{chi2_1}(i / (N+1)), fixed.
    DeterministicChiSq1Grid,
    /// theta_i0 = Phi^{-1}(i / (N+1)), fixed.
    DeterministicStdNormalGrid,
}

impl HeterogeneityMode {
    /// True when theta_i0 is a fixed array rather than i.i.d. draws.
    pub fn is_deterministic(self) -> bool {
        matches!(
            self,
            HeterogeneityMode::DeterministicChiSq1Grid
                | HeterogeneityMode::DeterministicStdNormalGrid
        )
    }

    pub fn design_label(self) -> &'static str {
        if self.is_deterministic() {
            "deterministic"
        } else {
            "stochastic"
        }
    }
}

/// Per-unit noise scale sigma_i0 in the sample-mean family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMode {
    /// sigma_i0 = 1.
    #[default]
    Homogeneous,
    /// sigma_i0 i.i.d. chi-squared(1).
    HeteroChiSq1,
    /// sigma_i0 = F^{-1}_{chi2_1}(i / (N+1)), paired index-wise with the
    /// theta grid.
    HeteroChiSq1Grid,
}

/// Nuisance slopes beta_i0k in the regression family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NuisanceSlopes {
    /// beta_i0k = 1 for every i, k.
    #[default]
    Homogeneous,
    /// beta_i0k = Phi^{-1}(i / (N+1)) for every k of unit i.
    NormalGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DgpFamily {
    SampleMeanLognormal,
    RegressionGaussian,
}

/// A fully instantiated data-generating process for one (N, T) cell.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DgpSpec {
    pub family: DgpFamily,
    pub n_units: usize,
    pub n_periods: usize,
    pub heterogeneity: HeterogeneityMode,
    #[serde(default)]
    pub scale: ScaleMode,
    #[serde(default)]
    pub nuisance_slopes: NuisanceSlopes,
    /// Regressor count K including the intercept (regression family only).
    #[serde(default = "default_k")]
    pub k_regressors: usize,
    /// Multiplier on the error scale; 0 gives exact noiseless panels
    /// (diagnostic hook, default 1).
    #[serde(default = "default_noise")]
    pub noise_scale: f64,
}

fn default_k() -> usize {
    10
}

fn default_noise() -> f64 {
    1.0
}

impl DgpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_units == 0 || self.n_periods == 0 {
            return Err(Error::InvalidSpec("N and T must be positive".into()));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::InvalidSpec("noise_scale must be finite and >= 0".into()));
        }
        match self.family {
            DgpFamily::SampleMeanLognormal => {
                if matches!(
                    self.heterogeneity,
                    HeterogeneityMode::StochasticStdNormal
                        | HeterogeneityMode::DeterministicStdNormalGrid
                ) {
                    return Err(Error::InvalidSpec(
                        "lognormal sample-mean family requires positive theta; \
                         use the chi-squared(1) heterogeneity modes"
                            .into(),
                    ));
                }
                if self.nuisance_slopes != NuisanceSlopes::Homogeneous {
                    return Err(Error::InvalidSpec(
                        "nuisance slopes apply to the regression family only".into(),
                    ));
                }
            }
            DgpFamily::RegressionGaussian => {
                if self.k_regressors < 2 {
                    return Err(Error::InvalidSpec(
                        "regression family needs K >= 2 (intercept plus the target regressor)"
                            .into(),
                    ));
                }
                if self.scale != ScaleMode::Homogeneous {
                    return Err(Error::InvalidSpec(
                        "heterogeneous scale modes apply to the sample-mean family only".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Number of regressor columns in the generated panel.
    pub fn panel_regressors(&self) -> usize {
        match self.family {
            DgpFamily::SampleMeanLognormal => 1,
            DgpFamily::RegressionGaussian => self.k_regressors,
        }
    }

    /// The coefficient carrying theta_i0: the last column.
    pub fn target_coef(&self) -> usize {
        self.panel_regressors() - 1
    }

    /// The true estimand: the analytic population quantile in stochastic
    /// designs, the realized grid quantile in deterministic designs.
    pub fn true_quantile(&self, tau: f64) -> Result<f64> {
        crate::quantile::validate_tau(tau)?;
        match self.heterogeneity {
            HeterogeneityMode::StochasticChiSq1 => Ok(chi_sq1_quantile(tau)),
            HeterogeneityMode::StochasticStdNormal => Ok(normal_quantile(tau)),
            HeterogeneityMode::DeterministicChiSq1Grid
            | HeterogeneityMode::DeterministicStdNormalGrid => {
                let grid = deterministic_grid(self.heterogeneity, self.n_units);
                crate::quantile::sample_quantile(&grid, tau)
            }
        }
    }
}

fn deterministic_grid(mode: HeterogeneityMode, n: usize) -> Vec<f64> {
    let quantile: fn(f64) -> f64 = match mode {
        HeterogeneityMode::DeterministicChiSq1Grid => chi_sq1_quantile,
        HeterogeneityMode::DeterministicStdNormalGrid => normal_quantile,
        _ => unreachable!("stochastic mode has no grid"),
    };
    (1..=n)
        .map(|i| quantile(i as f64 / (n + 1) as f64))
        .collect()
}

/// Generate theta_i0. Stochastic modes draw i.i.d. from `rng`; deterministic
/// modes return the exact quantile grid and leave `rng` untouched.
pub fn gen_theta(mode: HeterogeneityMode, n: usize, rng: &mut impl Rng) -> Vec<f64> {
    match mode {
        HeterogeneityMode::StochasticChiSq1 => (0..n)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                z * z
            })
            .collect(),
        HeterogeneityMode::StochasticStdNormal => {
            (0..n).map(|_| rng.sample(StandardNormal)).collect()
        }
        _ => deterministic_grid(mode, n),
    }
}

/// Generate sigma_i0 for the sample-mean family.
pub fn gen_sigma(mode: ScaleMode, n: usize, rng: &mut impl Rng) -> Vec<f64> {
    match mode {
        ScaleMode::Homogeneous => vec![1.0; n],
        ScaleMode::HeteroChiSq1 => (0..n)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                z * z
            })
            .collect(),
        ScaleMode::HeteroChiSq1Grid => (1..=n)
            .map(|i| chi_sq1_quantile(i as f64 / (n + 1) as f64))
            .collect(),
    }
}

/// Lognormal log-scale parameters (mu, s) giving mean `theta` and standard
/// deviation `sigma` on the level scale.
pub(crate) fn lognormal_params(theta: f64, sigma: f64) -> (f64, f64) {
    let mu = (theta * theta / (theta * theta + sigma * sigma).sqrt()).ln();
    let s = (1.0 + sigma * sigma / (theta * theta)).ln().sqrt();
    (mu, s)
}

/// Simulate one balanced panel from the DGP with the given latent
/// coefficients on the target column.
pub fn simulate_panel(spec: &DgpSpec, true_theta: &[f64], rng: &mut impl Rng) -> Result<PanelData> {
    spec.validate()?;
    let n = spec.n_units;
    let t = spec.n_periods;
    if true_theta.len() != n {
        return Err(Error::InvalidSpec(format!(
            "true_theta has {} entries, expected {n}",
            true_theta.len()
        )));
    }

    match spec.family {
        DgpFamily::SampleMeanLognormal => {
            if let Some(bad) = true_theta.iter().find(|v| **v <= 0.0) {
                return Err(Error::InvalidSpec(format!(
                    "lognormal parameterization needs theta > 0, got {bad}"
                )));
            }
            let sigma = gen_sigma(spec.scale, n, rng);
            let mut y = Vec::with_capacity(n * t);
            for i in 0..n {
                let theta = true_theta[i];
                let sd = sigma[i] * spec.noise_scale;
                if sd == 0.0 {
                    // variance-zero guard: X_it is the exact constant theta
                    y.extend(std::iter::repeat_n(theta, t));
                    continue;
                }
                let (mu, s) = lognormal_params(theta, sd);
                for _ in 0..t {
                    let z: f64 = rng.sample(StandardNormal);
                    y.push((mu + s * z).exp());
                }
            }
            let z = vec![1.0; n * t];
            PanelData::new(n, t, 1, y, z)
        }
        DgpFamily::RegressionGaussian => {
            let k = spec.k_regressors;
            let mut y = Vec::with_capacity(n * t);
            let mut z = Vec::with_capacity(n * t * k);
            for (i, &theta_i) in true_theta.iter().enumerate() {
                let beta = match spec.nuisance_slopes {
                    NuisanceSlopes::Homogeneous => 1.0,
                    NuisanceSlopes::NormalGrid => {
                        normal_quantile((i + 1) as f64 / (n + 1) as f64)
                    }
                };
                for _ in 0..t {
                    let mut xb = beta; // intercept column contributes beta * 1
                    z.push(1.0);
                    for col in 1..k {
                        let x: f64 = rng.sample(StandardNormal);
                        z.push(x);
                        if col < k - 1 {
                            xb += beta * x;
                        } else {
                            xb += theta_i * x;
                        }
                    }
                    let eps: f64 = rng.sample(StandardNormal);
                    y.push(xb + spec.noise_scale * eps);
                }
            }
            PanelData::new(n, t, k, y, z)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ols::{fit_all, OlsFitOptions};
    use crate::rng::{stream_rng, Stream};

    fn sample_mean_spec(n: usize, t: usize, het: HeterogeneityMode, scale: ScaleMode) -> DgpSpec {
        DgpSpec {
            family: DgpFamily::SampleMeanLognormal,
            n_units: n,
            n_periods: t,
            heterogeneity: het,
            scale,
            nuisance_slopes: NuisanceSlopes::Homogeneous,
            k_regressors: 1,
            noise_scale: 1.0,
        }
    }

    #[test]
    fn deterministic_grids_exact() {
        let mut rng = stream_rng(0, Stream::McPanel, 0, 0);
        let g1 = gen_theta(HeterogeneityMode::DeterministicStdNormalGrid, 1, &mut rng);
        assert!(g1[0].abs() < 1e-15);

        let g3 = gen_theta(HeterogeneityMode::DeterministicChiSq1Grid, 3, &mut rng);
        assert!((g3[0] - chi_sq1_quantile(0.25)).abs() < 1e-15);
        assert!((g3[1] - 0.45493642311957116).abs() < 1e-9);
        assert!((g3[2] - chi_sq1_quantile(0.75)).abs() < 1e-15);
        assert!(g3[0] < g3[1] && g3[1] < g3[2]);

        // grid generation never touches the rng
        let before = stream_rng(0, Stream::McPanel, 0, 0);
        let mut a = stream_rng(0, Stream::McPanel, 0, 0);
        gen_theta(HeterogeneityMode::DeterministicChiSq1Grid, 100, &mut a);
        let mut b = before;
        assert_eq!(a.random::<u64>(), b.random::<u64>());
    }

    #[test]
    fn chi_sq1_draw_moments() {
        let mut rng = stream_rng(314, Stream::McPanel, 0, 0);
        let n = 100_000;
        let draws = gen_theta(HeterogeneityMode::StochasticChiSq1, n, &mut rng);
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
        assert!((var - 2.0).abs() < 0.1, "var {var}");
    }

    #[test]
    fn lognormal_moments() {
        let spec = sample_mean_spec(1, 1_000_000, HeterogeneityMode::StochasticChiSq1, ScaleMode::Homogeneous);
        let mut rng = stream_rng(2718, Stream::McPanel, 0, 0);
        let panel = simulate_panel(&spec, &[2.0], &mut rng).unwrap();
        let xs = panel.unit_outcomes(0);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!((mean - 2.0).abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn zero_scale_is_exact_constant() {
        let mut spec = sample_mean_spec(2, 5, HeterogeneityMode::DeterministicChiSq1Grid, ScaleMode::Homogeneous);
        spec.noise_scale = 0.0;
        let theta = gen_theta(spec.heterogeneity, 2, &mut stream_rng(0, Stream::McPanel, 0, 0));
        let panel = simulate_panel(&spec, &theta, &mut stream_rng(1, Stream::McPanel, 0, 0)).unwrap();
        for (i, &th) in theta.iter().enumerate() {
            for t in 0..5 {
                assert_eq!(panel.outcome(i, t), th);
            }
        }
    }

    #[test]
    fn lognormal_rejects_nonpositive_theta() {
        let spec = sample_mean_spec(1, 4, HeterogeneityMode::StochasticChiSq1, ScaleMode::Homogeneous);
        let mut rng = stream_rng(5, Stream::McPanel, 0, 0);
        assert!(matches!(
            simulate_panel(&spec, &[-0.5], &mut rng),
            Err(Error::InvalidSpec(_))
        ));
        let bad = sample_mean_spec(1, 4, HeterogeneityMode::StochasticStdNormal, ScaleMode::Homogeneous);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn noiseless_regression_identifies_all_coefficients() {
        let spec = DgpSpec {
            family: DgpFamily::RegressionGaussian,
            n_units: 6,
            n_periods: 30,
            heterogeneity: HeterogeneityMode::DeterministicStdNormalGrid,
            scale: ScaleMode::Homogeneous,
            nuisance_slopes: NuisanceSlopes::NormalGrid,
            k_regressors: 5,
            noise_scale: 0.0,
        };
        let theta = gen_theta(spec.heterogeneity, 6, &mut stream_rng(0, Stream::McPanel, 0, 0));
        let panel =
            simulate_panel(&spec, &theta, &mut stream_rng(42, Stream::McPanel, 0, 0)).unwrap();
        let est = fit_all(&panel, &OlsFitOptions::default()).unwrap();
        for (i, &th) in theta.iter().enumerate() {
            let beta = normal_quantile((i + 1) as f64 / 7.0);
            for k in 0..4 {
                assert!((est.value(i, k) - beta).abs() < 1e-10, "unit {i} coef {k}");
            }
            assert!((est.value(i, 4) - th).abs() < 1e-10, "unit {i} target");
        }
    }

    #[test]
    fn true_quantile_by_design() {
        let stoch = sample_mean_spec(80, 80, HeterogeneityMode::StochasticChiSq1, ScaleMode::Homogeneous);
        assert!((stoch.true_quantile(0.3).unwrap() - chi_sq1_quantile(0.3)).abs() < 1e-15);

        let det = sample_mean_spec(80, 80, HeterogeneityMode::DeterministicChiSq1Grid, ScaleMode::Homogeneous);
        // ceil(80 * 0.3) = 24th grid point
        let expect = chi_sq1_quantile(24.0 / 81.0);
        assert_eq!(det.true_quantile(0.3).unwrap(), expect);
    }

    #[test]
    fn empirical_grid_quantile_approaches_population_quantile() {
        // |grid quantile - Phi^{-1}(tau)| < 2 / (N phi(Phi^{-1}(tau)))
        use crate::sim::dist::{normal_pdf, normal_quantile};
        for n in [40usize, 160, 640] {
            for tau in [0.3, 0.5, 0.7] {
                let spec = DgpSpec {
                    family: DgpFamily::RegressionGaussian,
                    n_units: n,
                    n_periods: 10,
                    heterogeneity: HeterogeneityMode::DeterministicStdNormalGrid,
                    scale: ScaleMode::Homogeneous,
                    nuisance_slopes: NuisanceSlopes::Homogeneous,
                    k_regressors: 2,
                    noise_scale: 1.0,
                };
                let truth = normal_quantile(tau);
                let grid_q = spec.true_quantile(tau).unwrap();
                let bound = 2.0 / (n as f64 * normal_pdf(truth));
                assert!(
                    (grid_q - truth).abs() < bound,
                    "n={n} tau={tau}: |{grid_q} - {truth}| >= {bound}"
                );
            }
        }
    }
}
