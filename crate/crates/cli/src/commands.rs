//! Subcommand implementations.

use std::path::{Path, PathBuf};

use log::info;
use panelq_core::bootstrap::{
    bootstrap_curve, p_value_symmetric, run_bootstrap, BootstrapConfig, BootstrapDesign,
};
use panelq_core::ols::{fit_all, OlsFitOptions};
use panelq_core::panel::{load_panel_csv, write_estimates_csv, PanelData, PanelSchema};
use panelq_core::quantile::{aggregate, QuantileTarget};
use panelq_core::sim::{preset, preset_names, run_coverage_experiment, SimulationSpec};
use panelq_core::{Error, Result};
use rand::Rng;

use crate::config::{parse_tau_list, resolve, resolve_opt, FileConfig};
use crate::{BootstrapArgs, CurveArgs, EstimateArgs, PanelInputArgs, SimulateArgs};

fn require_path(value: Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    value.ok_or_else(|| Error::InvalidParameter(format!("--{flag} is required")))
}

fn schema_from(args: &PanelInputArgs, cfg: &FileConfig) -> PanelSchema {
    let x_cols = args
        .x_cols
        .clone()
        .map(|s| s.split(',').map(|c| c.trim().to_string()).collect::<Vec<_>>())
        .or_else(|| cfg.x_cols.clone());
    PanelSchema {
        unit: resolve(args.unit_col.clone(), cfg.unit_col.clone(), "unit".into()),
        time: resolve(args.time_col.clone(), cfg.time_col.clone(), "time".into()),
        y: resolve(args.y_col.clone(), cfg.y_col.clone(), "y".into()),
        regressors: x_cols,
    }
}

fn load_input(args: &PanelInputArgs, cfg: &FileConfig) -> Result<PanelData> {
    let input = require_path(resolve_opt(args.input.clone(), cfg.input.clone()), "input")?;
    let schema = schema_from(args, cfg);
    info!("loading panel from {}", input.display());
    let panel = load_panel_csv(&input, &schema)?;
    info!(
        "panel: N={} T={} K={}",
        panel.n_units(),
        panel.n_periods(),
        panel.n_regressors()
    );
    Ok(panel)
}

/// Explicit seed, else from entropy (always echoed in the output for replay).
fn resolve_seed(flag: Option<u64>, cfg: Option<u64>) -> u64 {
    resolve_opt(flag, cfg).unwrap_or_else(|| rand::rng().random())
}

pub fn cmd_estimate(args: &EstimateArgs, cfg: &FileConfig) -> Result<()> {
    let panel = load_input(&args.panel, cfg)?;
    let output = require_path(resolve_opt(args.output.clone(), cfg.output.clone()), "output")?;
    let taus = {
        let raw = parse_tau_list(&args.tau)?;
        if raw.is_empty() {
            cfg.tau.clone().unwrap_or_else(|| vec![0.5])
        } else {
            raw
        }
    };
    let coef_spec = resolve(args.coef.clone(), cfg.coef.clone(), "0".into());
    let coef_index = panel.resolve_coefficient(&coef_spec)?;

    let estimates = fit_all(&panel, &OlsFitOptions::default())?;
    write_estimates_csv(&estimates, &output)?;

    let mut targets = Vec::new();
    for &tau in &taus {
        let q = aggregate(&estimates, QuantileTarget::new(tau, coef_index)?)?;
        targets.push(serde_json::json!({
            "tau": tau,
            "coef": panel.regressor_names()[coef_index],
            "coef_index": coef_index,
            "theta_hat": q.value,
        }));
    }
    let summary = serde_json::json!({
        "n_units": panel.n_units(),
        "n_periods": panel.n_periods(),
        "n_regressors": panel.n_regressors(),
        "estimates_csv": output.display().to_string(),
        "targets": targets,
    });
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    Ok(())
}

pub fn cmd_bootstrap(args: &BootstrapArgs, cfg: &FileConfig) -> Result<()> {
    let panel = load_input(&args.panel, cfg)?;
    let taus = {
        let raw = parse_tau_list(&args.tau)?;
        if raw.is_empty() {
            cfg.tau.clone().unwrap_or_else(|| vec![0.5])
        } else {
            raw
        }
    };
    if taus.len() != 1 {
        return Err(Error::InvalidParameter(
            "bootstrap takes exactly one --tau (use `curve` for grids)".into(),
        ));
    }
    let coef_spec = resolve(args.coef.clone(), cfg.coef.clone(), "0".into());
    let coef_index = panel.resolve_coefficient(&coef_spec)?;
    let design: BootstrapDesign = resolve(args.design.clone(), cfg.design.clone(), "sqb".into())
        .parse()?;
    let boot = BootstrapConfig {
        design,
        n_replicates: resolve(args.b, cfg.b, 299),
        alpha: resolve(args.alpha, cfg.alpha, 0.05),
        seed: resolve_seed(args.seed, cfg.seed),
        max_redraws: 10,
    };
    let target = QuantileTarget::new(taus[0], coef_index)?;
    let run = run_bootstrap(&panel, &OlsFitOptions::default(), &boot, target)?;

    if let Some(output) = resolve_opt(args.output.clone(), cfg.output.clone()) {
        std::fs::write(&output, run.to_json()).map_err(|source| Error::Io {
            path: output.display().to_string(),
            source,
        })?;
        info!("wrote bootstrap run to {}", output.display());
    }

    println!("design = {}", run.design.label());
    println!(
        "tau = {}, coefficient = {} (index {})",
        target.tau,
        panel.regressor_names()[coef_index],
        coef_index
    );
    println!("B = {}, seed = {}", run.replicates.len(), run.seed);
    println!("point_estimate = {}", run.point_estimate);
    println!(
        "ci[{}%] = [{}, {}]",
        (1.0 - boot.alpha) * 100.0,
        run.ci_lower,
        run.ci_upper
    );
    if let Some(null) = resolve_opt(args.null, cfg.null) {
        println!(
            "p_value(theta0 = {null}) = {}",
            p_value_symmetric(&run, null)
        );
    }
    Ok(())
}

fn default_tau_grid() -> Vec<f64> {
    (1..=99).map(|i| i as f64 / 100.0).collect()
}

pub fn cmd_curve(args: &CurveArgs, cfg: &FileConfig) -> Result<()> {
    let panel = load_input(&args.panel, cfg)?;
    let output = require_path(resolve_opt(args.output.clone(), cfg.output.clone()), "output")?;
    let taus = {
        let raw = parse_tau_list(&args.tau)?;
        if raw.is_empty() {
            cfg.tau.clone().unwrap_or_else(default_tau_grid)
        } else {
            raw
        }
    };
    let coef_spec = resolve(args.coef.clone(), cfg.coef.clone(), "0".into());
    let coef_index = panel.resolve_coefficient(&coef_spec)?;
    let boot = BootstrapConfig {
        design: BootstrapDesign::Stochastic, // both bands are computed
        n_replicates: resolve(args.b, cfg.b, 299),
        alpha: resolve(args.alpha, cfg.alpha, 0.05),
        seed: resolve_seed(args.seed, cfg.seed),
        max_redraws: 10,
    };
    let bands = bootstrap_curve(&panel, &OlsFitOptions::default(), &boot, coef_index, &taus)?;

    let mut text = String::from("tau,estimate,sqb_lo,sqb_hi,dqb_lo,dqb_hi\n");
    for b in &bands {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            b.tau, b.estimate, b.sqb_lower, b.sqb_upper, b.dqb_lower, b.dqb_upper
        ));
    }
    std::fs::write(&output, text).map_err(|source| Error::Io {
        path: output.display().to_string(),
        source,
    })?;
    println!(
        "wrote {} tau points for coefficient {} (index {}) to {} (B = {}, seed = {})",
        bands.len(),
        panel.regressor_names()[coef_index],
        coef_index,
        output.display(),
        boot.n_replicates,
        boot.seed
    );
    Ok(())
}

fn parse_cell_filter(raw: &[String]) -> Result<Vec<(usize, usize)>> {
    let mut cells = Vec::new();
    for chunk in raw {
        for piece in chunk.split(',') {
            let piece = piece.trim();
            if piece.is_empty() {
                continue;
            }
            let (n, t) = piece.split_once('x').ok_or_else(|| {
                Error::InvalidParameter(format!("bad --cell `{piece}` (expected NxT, e.g. 80x80)"))
            })?;
            let n: usize = n.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!("bad N in --cell `{piece}`"))
            })?;
            let t: usize = t.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!("bad T in --cell `{piece}`"))
            })?;
            cells.push((n, t));
        }
    }
    Ok(cells)
}

pub fn cmd_simulate(args: &SimulateArgs, cfg: &FileConfig) -> Result<()> {
    if args.list_presets {
        for name in preset_names() {
            println!("{name}");
        }
        return Ok(());
    }

    let mut spec: SimulationSpec = if let Some(path) = &args.spec {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        SimulationSpec::from_json(&text)?
    } else if let Some(name) = resolve_opt(args.preset.clone(), cfg.preset.clone()) {
        preset(&name).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "unknown preset `{name}` (see --list-presets)"
            ))
        })?
    } else {
        return Err(Error::InvalidParameter(
            "simulate needs --preset NAME or --spec FILE (or --list-presets)".into(),
        ));
    };

    if let Some(n_mc) = resolve_opt(args.n_mc, cfg.n_mc) {
        spec.n_mc = n_mc;
    }
    if let Some(b) = resolve_opt(args.b, cfg.b) {
        spec.b = b;
    }
    if let Some(alpha) = resolve_opt(args.alpha, cfg.alpha) {
        spec.alpha = alpha;
    }
    if let Some(seed) = resolve_opt(args.seed, cfg.seed) {
        spec.seed = seed;
    }
    if let Some(methods) = &args.methods {
        spec.methods = methods
            .split(',')
            .map(|m| m.trim().parse::<BootstrapDesign>())
            .collect::<Result<Vec<_>>>()?;
    }
    let cell_filter = parse_cell_filter(&args.cell)?;
    if !cell_filter.is_empty() {
        spec.cells.retain(|c| cell_filter.contains(&(c.n, c.t)));
    }
    let tau_filter = parse_tau_list(&args.tau)?;
    if !tau_filter.is_empty() {
        spec.cells.retain(|c| tau_filter.contains(&c.tau));
    }
    if spec.cells.is_empty() {
        return Err(Error::InvalidParameter(
            "cell/tau filters left no cells to run".into(),
        ));
    }

    let output = require_path(resolve_opt(args.output.clone(), cfg.output.clone()), "output")?;
    info!(
        "running {} cells at n_mc = {}, B = {}, seed = {}",
        spec.cells.len(),
        spec.n_mc,
        spec.b,
        spec.seed
    );
    let report = run_coverage_experiment(&spec, &OlsFitOptions::default())?;
    report.write_csv(Path::new(&output))?;

    println!("seed = {}", spec.seed);
    println!("n,t,tau,design,method,bias,coverage,n_mc,b,mc_stderr");
    for r in &report.rows {
        println!(
            "{},{},{},{},{},{:.6},{:.4},{},{},{:.4}",
            r.n, r.t, r.tau, r.design, r.method, r.bias, r.coverage, r.n_mc, r.b, r.mc_stderr
        );
    }
    println!("wrote {}", output.display());
    Ok(())
}
