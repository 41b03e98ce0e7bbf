//! Experiment specifications and the named presets shipped with the tool.
//!
//! A `SimulationSpec` is the JSON-config form of a Monte Carlo experiment:
//! one DGP template plus a grid of (N, T, tau) cells. The `table*_panel*`
//! presets mirror the published simulation layouts (sample-mean and
//! regression families, varying N/T or tau, panels A-D); their default
//! replication counts are the published ones, so desk-scale runs should
//! override `n_mc`.

use serde::{Deserialize, Serialize};

use crate::bootstrap::BootstrapDesign;
use crate::error::{Error, Result};
use crate::sim::coverage::CellSpec;
use crate::sim::dgp::{DgpFamily, DgpSpec, HeterogeneityMode, NuisanceSlopes, ScaleMode};

/// A declarative Monte Carlo experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub family: DgpFamily,
    pub heterogeneity: HeterogeneityMode,
    #[serde(default)]
    pub scale: ScaleMode,
    #[serde(default)]
    pub nuisance_slopes: NuisanceSlopes,
    #[serde(default = "default_k")]
    pub k_regressors: usize,
    pub cells: Vec<CellSpec>,
    #[serde(default = "both_methods")]
    pub methods: Vec<BootstrapDesign>,
    #[serde(default = "default_n_mc")]
    pub n_mc: usize,
    #[serde(default = "default_b")]
    pub b: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_k() -> usize {
    10
}

fn both_methods() -> Vec<BootstrapDesign> {
    vec![BootstrapDesign::Stochastic, BootstrapDesign::Deterministic]
}

fn default_n_mc() -> usize {
    1000
}

fn default_b() -> usize {
    299
}

fn default_alpha() -> f64 {
    0.05
}

fn default_seed() -> u64 {
    20250801
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.cells.is_empty() {
            return Err(Error::InvalidSpec("experiment has no cells".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidSpec("experiment has no methods".into()));
        }
        if self.n_mc == 0 || self.b == 0 {
            return Err(Error::InvalidSpec("n_mc and b must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        for cell in &self.cells {
            self.dgp_for_cell(cell).validate()?;
            crate::quantile::validate_tau(cell.tau)?;
        }
        Ok(())
    }

    /// Instantiate the DGP template at one cell's (N, T).
    pub fn dgp_for_cell(&self, cell: &CellSpec) -> DgpSpec {
        DgpSpec {
            family: self.family,
            n_units: cell.n,
            n_periods: cell.t,
            heterogeneity: self.heterogeneity,
            scale: self.scale,
            nuisance_slopes: self.nuisance_slopes,
            k_regressors: match self.family {
                DgpFamily::SampleMeanLognormal => 1,
                DgpFamily::RegressionGaussian => self.k_regressors,
            },
            noise_scale: 1.0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SimulationSpec = serde_json::from_str(text)
            .map_err(|e| Error::InvalidSpec(format!("bad simulation spec json: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("simulation spec serializes")
    }
}

/// The (N, T) grid the published tables vary over.
fn nt_grid(tau: f64) -> Vec<CellSpec> {
    let mut cells = Vec::new();
    for n in [40, 80, 160] {
        for t in [40, 80, 160] {
            cells.push(CellSpec { n, t, tau });
        }
    }
    cells
}

/// The tau grid at fixed N = T = 80.
fn tau_grid() -> Vec<CellSpec> {
    (1..=9)
        .map(|i| CellSpec {
            n: 80,
            t: 80,
            tau: i as f64 / 10.0,
        })
        .collect()
}

fn sample_mean_preset(
    heterogeneity: HeterogeneityMode,
    scale: ScaleMode,
    cells: Vec<CellSpec>,
) -> SimulationSpec {
    SimulationSpec {
        family: DgpFamily::SampleMeanLognormal,
        heterogeneity,
        scale,
        nuisance_slopes: NuisanceSlopes::Homogeneous,
        k_regressors: 1,
        cells,
        methods: both_methods(),
        n_mc: 10_000,
        b: default_b(),
        alpha: default_alpha(),
        seed: default_seed(),
    }
}

fn regression_preset(
    heterogeneity: HeterogeneityMode,
    nuisance: NuisanceSlopes,
) -> SimulationSpec {
    SimulationSpec {
        family: DgpFamily::RegressionGaussian,
        heterogeneity,
        scale: ScaleMode::Homogeneous,
        nuisance_slopes: nuisance,
        k_regressors: 10,
        cells: nt_grid(0.7),
        methods: both_methods(),
        n_mc: 3_999,
        b: default_b(),
        alpha: default_alpha(),
        seed: default_seed(),
    }
}

/// All shipped preset names.
pub fn preset_names() -> Vec<&'static str> {
    vec![
        "table2_panelA",
        "table2_panelB",
        "table2_panelC",
        "table2_panelD",
        "table3_panelA",
        "table3_panelB",
        "table3_panelC",
        "table3_panelD",
        "table4_panelA",
        "table4_panelB",
        "table4_panelC",
        "table4_panelD",
    ]
}

/// Look up a shipped experiment preset by name.
pub fn preset(name: &str) -> Option<SimulationSpec> {
    use HeterogeneityMode::*;
    use ScaleMode::*;
    let spec = match name {
        // sample-mean family, tau = 0.30, varying N and T
        "table2_panelA" => sample_mean_preset(StochasticChiSq1, Homogeneous, nt_grid(0.3)),
        "table2_panelB" => sample_mean_preset(StochasticChiSq1, HeteroChiSq1, nt_grid(0.3)),
        "table2_panelC" => sample_mean_preset(DeterministicChiSq1Grid, Homogeneous, nt_grid(0.3)),
        "table2_panelD" => {
            sample_mean_preset(DeterministicChiSq1Grid, HeteroChiSq1Grid, nt_grid(0.3))
        }
        // sample-mean family, N = T = 80, varying tau
        "table3_panelA" => sample_mean_preset(StochasticChiSq1, Homogeneous, tau_grid()),
        "table3_panelB" => sample_mean_preset(StochasticChiSq1, HeteroChiSq1, tau_grid()),
        "table3_panelC" => sample_mean_preset(DeterministicChiSq1Grid, Homogeneous, tau_grid()),
        "table3_panelD" => {
            sample_mean_preset(DeterministicChiSq1Grid, HeteroChiSq1Grid, tau_grid())
        }
        // regression family, K = 10, tau = 0.70, varying N and T
        "table4_panelA" => regression_preset(StochasticStdNormal, NuisanceSlopes::Homogeneous),
        "table4_panelB" => regression_preset(StochasticStdNormal, NuisanceSlopes::NormalGrid),
        "table4_panelC" => {
            regression_preset(DeterministicStdNormalGrid, NuisanceSlopes::Homogeneous)
        }
        "table4_panelD" => {
            regression_preset(DeterministicStdNormalGrid, NuisanceSlopes::NormalGrid)
        }
        _ => return None,
    };
    Some(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_is_valid() {
        for name in preset_names() {
            let spec = preset(name).unwrap();
            spec.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(spec.cells.len(), 9, "{name}");
        }
        assert!(preset("table9_panelZ").is_none());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = preset("table2_panelD").unwrap();
        let text = spec.to_json();
        let back = SimulationSpec::from_json(&text).unwrap();
        assert_eq!(back.cells.len(), 9);
        assert_eq!(back.heterogeneity, HeterogeneityMode::DeterministicChiSq1Grid);
        assert_eq!(back.scale, ScaleMode::HeteroChiSq1Grid);
        assert!(text.contains("\"family\": \"sample_mean_lognormal\""));
    }

    #[test]
    fn partial_json_uses_defaults() {
        let spec = SimulationSpec::from_json(
            r#"{
                "family": "regression_gaussian",
                "heterogeneity": "stochastic_std_normal",
                "cells": [{"n": 20, "t": 20, "tau": 0.5}]
            }"#,
        )
        .unwrap();
        assert_eq!(spec.k_regressors, 10);
        assert_eq!(spec.b, 299);
        assert_eq!(spec.methods.len(), 2);
        assert!((spec.alpha - 0.05).abs() < 1e-15);
    }

    #[test]
    fn invalid_combination_rejected() {
        let err = SimulationSpec::from_json(
            r#"{
                "family": "sample_mean_lognormal",
                "heterogeneity": "stochastic_std_normal",
                "cells": [{"n": 20, "t": 20, "tau": 0.5}]
            }"#,
        );
        assert!(err.is_err());
    }
}
