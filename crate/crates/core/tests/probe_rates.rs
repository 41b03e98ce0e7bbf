use panelq_core::ols::OlsFitOptions;
use panelq_core::sim::{oracle_asymptotic_sd, simulate_estimates, DgpFamily, DgpSpec, HeterogeneityMode, NuisanceSlopes, ScaleMode};

fn mc_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

#[test]
fn probe_oracle_agreement() {
    let opts = OlsFitOptions::default();
    for het in [HeterogeneityMode::StochasticStdNormal, HeterogeneityMode::DeterministicStdNormalGrid] {
        let spec = DgpSpec { family: DgpFamily::RegressionGaussian, n_units: 200, n_periods: 200,
            heterogeneity: het, scale: ScaleMode::Homogeneous,
            nuisance_slopes: NuisanceSlopes::Homogeneous, k_regressors: 10, noise_scale: 1.0 };
        let oracle = oracle_asymptotic_sd(&spec, 0.5, 200, 200).unwrap();
        let est = simulate_estimates(&spec, 0.5, &opts, 2000, 20250801).unwrap();
        let sd = mc_sd(&est);
        println!("{het:?}: oracle={oracle:.5} mc={sd:.5} rel_err={:+.3}", sd / oracle - 1.0);
    }
}
