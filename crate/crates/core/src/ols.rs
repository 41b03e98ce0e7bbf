//! Per-unit least squares: step 1 of the two-step estimator.
//!
//! Each unit's coefficient vector is fit from its own time series by OLS,
//! solved through a column-pivoted QR decomposition of the design matrix
//! rather than the normal equations. Rank problems are reported as errors,
//! never silently pseudo-inverted, because downstream quantile aggregation
//! would be corrupted by garbage rows.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::panel::{PanelData, UnitEstimates};

/// Numerical guardrails for the per-unit fit.
#[derive(Debug, Clone, Copy)]
pub struct OlsFitOptions {
    /// Maximum acceptable condition estimate of the Gram matrix Z'Z.
    pub condition_limit: f64,
    /// Required degrees of freedom: T - K >= min_dof.
    pub min_dof: usize,
}

impl Default for OlsFitOptions {
    fn default() -> Self {
        OlsFitOptions {
            condition_limit: 1e12,
            min_dof: 1,
        }
    }
}

impl OlsFitOptions {
    pub fn validate(&self) -> Result<()> {
        if self.condition_limit <= 1.0 {
            return Err(Error::InvalidParameter(
                "condition_limit must exceed 1".into(),
            ));
        }
        Ok(())
    }
}

/// OLS fit of one unit: minimizes sum_t (y_t - z_t' theta)^2.
///
/// The Gram condition is estimated from the pivoted R factor as
/// (max |r_ii| / min |r_ii|)^2; exceeding `condition_limit` is a
/// `RankDeficient` error.
pub fn fit_unit(y: &DVector<f64>, z: &DMatrix<f64>, opts: &OlsFitOptions) -> Result<DVector<f64>> {
    opts.validate()?;
    let n_periods = z.nrows();
    let n_regressors = z.ncols();
    if y.len() != n_periods {
        return Err(Error::InvalidParameter(format!(
            "outcome length {} does not match design rows {}",
            y.len(),
            n_periods
        )));
    }
    if n_periods < n_regressors + opts.min_dof {
        return Err(Error::InsufficientPeriods {
            n_periods,
            n_regressors,
            min_dof: opts.min_dof,
        });
    }

    let qr = z.clone().col_piv_qr();
    let (q, r, p) = qr.unpack();

    let mut max_diag = 0.0f64;
    let mut min_diag = f64::INFINITY;
    for i in 0..n_regressors {
        let d = r[(i, i)].abs();
        max_diag = max_diag.max(d);
        min_diag = min_diag.min(d);
    }
    let gram_condition = if min_diag == 0.0 {
        f64::INFINITY
    } else {
        (max_diag / min_diag).powi(2)
    };
    if gram_condition > opts.condition_limit {
        return Err(Error::RankDeficient {
            condition: gram_condition,
            limit: opts.condition_limit,
        });
    }

    // theta = P * R^{-1} * Q' y  (Z P = Q R)
    let mut w = q.transpose() * y;
    if !r.solve_upper_triangular_mut(&mut w) {
        return Err(Error::RankDeficient {
            condition: f64::INFINITY,
            limit: opts.condition_limit,
        });
    }
    p.inv_permute_rows(&mut w);
    Ok(w)
}

/// Fit every unit of a balanced panel. Units are independent and evaluated in
/// parallel; the output is identical to sequential evaluation, and the first
/// failing unit (by index) determines the error.
pub fn fit_all(panel: &PanelData, opts: &OlsFitOptions) -> Result<UnitEstimates> {
    opts.validate()?;
    let n_units = panel.n_units();
    let fits: Vec<Result<DVector<f64>>> = (0..n_units)
        .into_par_iter()
        .map(|i| {
            let y = panel.unit_outcome_vector(i);
            let z = panel.unit_design(i);
            fit_unit(&y, &z, opts)
        })
        .collect();

    let mut rows = Vec::with_capacity(n_units);
    for (i, fit) in fits.into_iter().enumerate() {
        rows.push(fit.map_err(|e| e.in_unit(i))?);
    }
    let k = rows[0].len();
    let estimates = DMatrix::from_fn(n_units, k, |i, j| rows[i][j]);
    UnitEstimates::new(estimates, panel.n_periods())
}
