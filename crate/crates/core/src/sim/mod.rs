//! Monte Carlo machinery: synthetic data-generating processes, analytic
//! asymptotic-variance oracles, and coverage/bias experiments.

pub mod coverage;
pub mod dgp;
pub mod dist;
pub mod oracle;
pub mod presets;

pub use coverage::{
    run_cell, run_coverage_experiment, simulate_estimates, CellOutcome, CellSpec, CoverageReport,
    CoverageRow, RepOutcome,
};
pub use dgp::{DgpFamily, DgpSpec, HeterogeneityMode, NuisanceSlopes, ScaleMode};
pub use oracle::oracle_asymptotic_sd;
pub use presets::{preset, preset_names, SimulationSpec};
