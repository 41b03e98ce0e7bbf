//! Balanced-panel data model and CSV interchange.
//!
//! Panels are ingested from long-format CSV (`unit,time,y,x1,...`) and stored
//! dense with an intercept column synthesized at position 0. Unit and time
//! keys are arbitrary tokens; they are canonicalized by sorting (numeric when
//! every token parses as a number, lexicographic otherwise), so any row order
//! on disk loads to the same `PanelData`.

use std::collections::HashMap;
use std::fs::File;
use std::io::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Column-name mapping used when loading a long-format panel CSV.
#[derive(Debug, Clone)]
pub struct PanelSchema {
    pub unit: String,
    pub time: String,
    pub y: String,
    /// Regressor columns in order. `None` means every column other than
    /// unit/time/y, in header order.
    pub regressors: Option<Vec<String>>,
}

impl Default for PanelSchema {
    fn default() -> Self {
        PanelSchema {
            unit: "unit".into(),
            time: "time".into(),
            y: "y".into(),
            regressors: None,
        }
    }
}

/// A balanced N x T panel with K regressors (intercept included at index 0).
///
/// Immutable after construction; all accessors are read-only, so values can
/// be shared freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelData {
    n_units: usize,
    n_periods: usize,
    n_regressors: usize,
    /// Outcomes, row-major by unit: `y[i * T + t]`.
    y: Vec<f64>,
    /// Regressors: `z[(i * T + t) * K + k]`, with `z[.., 0] == 1`.
    z: Vec<f64>,
    /// Original unit labels in canonical (sorted) order.
    unit_labels: Vec<String>,
    /// Regressor names: `intercept` followed by the source column names.
    regressor_names: Vec<String>,
}

impl PanelData {
    /// Build a panel from dense arrays, validating every invariant.
    ///
    /// `y` has length `n_units * n_periods`; `z` has length
    /// `n_units * n_periods * n_regressors` with the intercept at index 0 of
    /// every row.
    pub fn new(n_units: usize, n_periods: usize, n_regressors: usize, y: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        let unit_labels = (0..n_units).map(|i| i.to_string()).collect();
        let mut regressor_names = vec!["intercept".to_string()];
        for k in 1..n_regressors {
            regressor_names.push(format!("x{k}"));
        }
        Self::with_labels(n_units, n_periods, n_regressors, y, z, unit_labels, regressor_names)
    }

    fn with_labels(
        n_units: usize,
        n_periods: usize,
        n_regressors: usize,
        y: Vec<f64>,
        z: Vec<f64>,
        unit_labels: Vec<String>,
        regressor_names: Vec<String>,
    ) -> Result<Self> {
        if n_units == 0 || n_periods == 0 || n_regressors == 0 {
            return Err(Error::InvalidParameter(
                "panel dimensions must be positive".into(),
            ));
        }
        if y.len() != n_units * n_periods {
            return Err(Error::InvalidParameter(format!(
                "y has {} entries, expected {}",
                y.len(),
                n_units * n_periods
            )));
        }
        if z.len() != n_units * n_periods * n_regressors {
            return Err(Error::InvalidParameter(format!(
                "z has {} entries, expected {}",
                z.len(),
                n_units * n_periods * n_regressors
            )));
        }
        if unit_labels.len() != n_units || regressor_names.len() != n_regressors {
            return Err(Error::InvalidParameter("label length mismatch".into()));
        }
        if let Some(v) = y.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite outcome {v}")));
        }
        for (idx, v) in z.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "non-finite regressor {v} at flat index {idx}"
                )));
            }
            if idx % n_regressors == 0 && *v != 1.0 {
                return Err(Error::InvalidParameter(
                    "intercept column must be identically 1".into(),
                ));
            }
        }
        Ok(PanelData {
            n_units,
            n_periods,
            n_regressors,
            y,
            z,
            unit_labels,
            regressor_names,
        })
    }

    pub fn n_units(&self) -> usize {
        self.n_units
    }

    pub fn n_periods(&self) -> usize {
        self.n_periods
    }

    pub fn n_regressors(&self) -> usize {
        self.n_regressors
    }

    pub fn unit_labels(&self) -> &[String] {
        &self.unit_labels
    }

    pub fn regressor_names(&self) -> &[String] {
        &self.regressor_names
    }

    /// Outcome y_it.
    #[inline]
    pub fn outcome(&self, unit: usize, t: usize) -> f64 {
        self.y[unit * self.n_periods + t]
    }

    /// Regressor Z_it[k].
    #[inline]
    pub fn regressor(&self, unit: usize, t: usize, k: usize) -> f64 {
        self.z[(unit * self.n_periods + t) * self.n_regressors + k]
    }

    /// Outcomes of one unit as a slice of length T.
    pub fn unit_outcomes(&self, unit: usize) -> &[f64] {
        &self.y[unit * self.n_periods..(unit + 1) * self.n_periods]
    }

    /// One unit's regressor rows, flat T x K row-major.
    pub fn unit_regressor_rows(&self, unit: usize) -> &[f64] {
        let row = self.n_periods * self.n_regressors;
        &self.z[unit * row..(unit + 1) * row]
    }

    /// T x K design matrix of one unit.
    pub fn unit_design(&self, unit: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_periods, self.n_regressors, |t, k| {
            self.regressor(unit, t, k)
        })
    }

    /// Length-T outcome vector of one unit.
    pub fn unit_outcome_vector(&self, unit: usize) -> DVector<f64> {
        DVector::from_column_slice(self.unit_outcomes(unit))
    }

    /// Resolve a coefficient given either a zero-based index or a regressor
    /// name from the source header (`intercept` addresses column 0).
    pub fn resolve_coefficient(&self, spec: &str) -> Result<usize> {
        if let Ok(idx) = spec.parse::<usize>() {
            if idx < self.n_regressors {
                return Ok(idx);
            }
            return Err(Error::IndexOutOfRange {
                index: idx,
                n_regressors: self.n_regressors,
            });
        }
        self.regressor_names
            .iter()
            .position(|n| n == spec)
            .ok_or_else(|| Error::MissingColumn { name: spec.into() })
    }
}

/// Per-unit first-step coefficient estimates: row i holds unit i's fit.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitEstimates {
    estimates: DMatrix<f64>,
    n_periods_used: usize,
}

impl UnitEstimates {
    pub fn new(estimates: DMatrix<f64>, n_periods_used: usize) -> Result<Self> {
        if estimates.nrows() == 0 || estimates.ncols() == 0 {
            return Err(Error::EmptyInput);
        }
        if n_periods_used == 0 {
            return Err(Error::InvalidParameter("n_periods_used must be positive".into()));
        }
        if estimates.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "non-finite coefficient estimate".into(),
            ));
        }
        Ok(UnitEstimates {
            estimates,
            n_periods_used,
        })
    }

    pub fn n_units(&self) -> usize {
        self.estimates.nrows()
    }

    pub fn n_coefficients(&self) -> usize {
        self.estimates.ncols()
    }

    pub fn n_periods_used(&self) -> usize {
        self.n_periods_used
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.estimates
    }

    #[inline]
    pub fn value(&self, unit: usize, coef: usize) -> f64 {
        self.estimates[(unit, coef)]
    }

    /// Column `coef` (one value per unit), contiguous in the column-major
    /// backing storage.
    pub fn coefficient_column(&self, coef: usize) -> Result<&[f64]> {
        if coef >= self.n_coefficients() {
            return Err(Error::IndexOutOfRange {
                index: coef,
                n_regressors: self.n_coefficients(),
            });
        }
        let n = self.estimates.nrows();
        Ok(&self.estimates.as_slice()[coef * n..(coef + 1) * n])
    }
}

/// Sort key used to canonicalize unit and time tokens: numeric when every
/// token in the column parses as a finite number, lexicographic otherwise.
fn sorted_tokens(tokens: Vec<String>) -> Vec<String> {
    let mut tokens = tokens;
    let all_numeric = tokens
        .iter()
        .all(|t| t.parse::<f64>().map(|v| v.is_finite()).unwrap_or(false));
    if all_numeric {
        tokens.sort_by(|a, b| {
            let (x, y) = (a.parse::<f64>().unwrap(), b.parse::<f64>().unwrap());
            x.partial_cmp(&y).unwrap().then_with(|| a.cmp(b))
        });
    } else {
        tokens.sort();
    }
    tokens
}

fn parse_cell(raw: &str, column: &str, line: usize) -> Result<f64> {
    let value: f64 = raw.trim().parse().map_err(|_| Error::ParseValue {
        column: column.to_string(),
        line,
        value: raw.to_string(),
    })?;
    if !value.is_finite() {
        return Err(Error::NonFiniteValue {
            column: column.to_string(),
            line,
        });
    }
    Ok(value)
}

/// Load a balanced long-format panel CSV.
///
/// Rows may appear in any order; units and times are sorted into canonical
/// order and the intercept column is prepended. Errors are total: malformed
/// input never yields a partially built panel.
pub fn load_panel_csv(path: &Path, schema: &PanelSchema) -> Result<PanelData> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);

    let headers = reader.headers()?.clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn { name: name.into() })
    };
    let unit_idx = find(&schema.unit)?;
    let time_idx = find(&schema.time)?;
    let y_idx = find(&schema.y)?;

    let regressor_cols: Vec<(usize, String)> = match &schema.regressors {
        Some(names) => names
            .iter()
            .map(|n| find(n).map(|i| (i, n.clone())))
            .collect::<Result<_>>()?,
        None => headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != unit_idx && *i != time_idx && *i != y_idx)
            .map(|(i, h)| (i, h.to_string()))
            .collect(),
    };

    struct Row {
        y: f64,
        xs: Vec<f64>,
    }
    // unit -> time -> row
    let mut cells: HashMap<String, HashMap<String, Row>> = HashMap::new();

    for record in reader.records() {
        let record = record?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(0);
        let get = |idx: usize, name: &str| -> Result<&str> {
            record.get(idx).ok_or_else(|| Error::MissingColumn {
                name: format!("{name} (short record at line {line})"),
            })
        };
        let unit = get(unit_idx, &schema.unit)?.trim().to_string();
        let time = get(time_idx, &schema.time)?.trim().to_string();
        let y = parse_cell(get(y_idx, &schema.y)?, &schema.y, line)?;
        let xs = regressor_cols
            .iter()
            .map(|(i, name)| parse_cell(get(*i, name)?, name, line))
            .collect::<Result<Vec<f64>>>()?;
        if cells
            .entry(unit.clone())
            .or_default()
            .insert(time.clone(), Row { y, xs })
            .is_some()
        {
            return Err(Error::DuplicateCell { unit, time });
        }
    }

    if cells.is_empty() {
        return Err(Error::EmptyInput);
    }

    // Balance: every unit must carry the same period count. The expected
    // count is the one shared by the most units (ties to the larger count).
    let mut freq: HashMap<usize, usize> = HashMap::new();
    for rows in cells.values() {
        *freq.entry(rows.len()).or_insert(0) += 1;
    }
    let expected = freq
        .iter()
        .max_by_key(|(count, units)| (**units, **count))
        .map(|(count, _)| *count)
        .unwrap();
    let offending: Vec<String> = cells
        .iter()
        .filter(|(_, rows)| rows.len() != expected)
        .map(|(u, _)| u.clone())
        .collect();
    if !offending.is_empty() {
        return Err(Error::UnbalancedPanel {
            expected,
            units: sorted_tokens(offending),
        });
    }

    let units = sorted_tokens(cells.keys().cloned().collect());
    let n_units = units.len();
    let n_periods = expected;
    let n_regressors = 1 + regressor_cols.len();

    let mut y = Vec::with_capacity(n_units * n_periods);
    let mut z = Vec::with_capacity(n_units * n_periods * n_regressors);
    for unit in &units {
        let rows = &cells[unit];
        let times = sorted_tokens(rows.keys().cloned().collect());
        for time in &times {
            let row = &rows[time];
            y.push(row.y);
            z.push(1.0);
            z.extend_from_slice(&row.xs);
        }
    }

    let regressor_names = std::iter::once("intercept".to_string())
        .chain(regressor_cols.iter().map(|(_, n)| n.clone()))
        .collect();
    PanelData::with_labels(n_units, n_periods, n_regressors, y, z, units, regressor_names)
}

/// Write a panel back out in the long format `load_panel_csv` reads.
/// Unit labels and canonical time indices 0..T-1 are used as keys; floats are
/// printed with Rust's shortest round-trip formatting, so load(write(p)) == p.
pub fn write_panel_csv(panel: &PanelData, path: &Path) -> Result<()> {
    let mut out = File::create(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut header = String::from("unit,time,y");
    for name in &panel.regressor_names()[1..] {
        header.push(',');
        header.push_str(name);
    }
    writeln!(out, "{header}").map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    for i in 0..panel.n_units() {
        for t in 0..panel.n_periods() {
            let mut line = format!("{},{},{}", panel.unit_labels()[i], t, panel.outcome(i, t));
            for k in 1..panel.n_regressors() {
                line.push(',');
                line.push_str(&panel.regressor(i, t, k).to_string());
            }
            writeln!(out, "{line}").map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })?;
        }
    }
    Ok(())
}

/// Write first-step estimates with header `unit,coef_1,...,coef_K`.
///
/// Floats use shortest round-trip formatting, so parsing the file recovers
/// the matrix bit for bit.
pub fn write_estimates_csv(est: &UnitEstimates, path: &Path) -> Result<()> {
    let mut out = File::create(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let io_err = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let mut header = String::from("unit");
    for k in 1..=est.n_coefficients() {
        header.push_str(&format!(",coef_{k}"));
    }
    writeln!(out, "{header}").map_err(io_err)?;
    for i in 0..est.n_units() {
        let mut line = i.to_string();
        for k in 0..est.n_coefficients() {
            line.push(',');
            line.push_str(&est.value(i, k).to_string());
        }
        writeln!(out, "{line}").map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(())
}

/// Parse a `unit,coef_1,...,coef_K` estimates file back into a matrix.
pub fn read_estimates_csv(path: &Path) -> Result<DMatrix<f64>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let n_cols = reader.headers()?.len();
    if n_cols < 2 {
        return Err(Error::MissingColumn {
            name: "coef_1".into(),
        });
    }
    let k = n_cols - 1;
    let mut rows: Vec<f64> = Vec::new();
    let mut n_rows = 0usize;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        for c in 1..n_cols {
            let raw = record.get(c).ok_or_else(|| Error::MissingColumn {
                name: format!("coef_{c} (short record at line {line})"),
            })?;
            rows.push(parse_cell(raw, &format!("coef_{c}"), line)?);
        }
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(DMatrix::from_row_slice(n_rows, k, &rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn write_file(dir: &Path, name: &str, contents: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }

    #[test]
    fn loads_small_panel() {
        let dir = tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "p.csv",
            "unit,time,y,x1\nA,1,1.0,0.5\nA,2,2.0,0.6\nA,3,3.0,0.7\nB,1,4.0,0.8\nB,2,5.0,0.9\nB,3,6.0,1.0\n",
        );
        let panel = load_panel_csv(&path, &PanelSchema::default()).unwrap();
        assert_eq!(panel.n_units(), 2);
        assert_eq!(panel.n_periods(), 3);
        assert_eq!(panel.n_regressors(), 2);
        assert_eq!(panel.outcome(0, 0), 1.0);
        assert_eq!(panel.regressor(0, 0, 0), 1.0);
        assert_eq!(panel.regressor(1, 2, 1), 1.0);
        assert_eq!(panel.unit_labels(), &["A".to_string(), "B".to_string()]);
    }

    #[test]
    fn unbalanced_panel_lists_offenders() {
        let dir = tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "p.csv",
            "unit,time,y,x1\nA,1,1,0\nA,2,1,0\nA,3,1,0\nB,1,1,0\nB,2,1,0\n",
        );
        match load_panel_csv(&path, &PanelSchema::default()) {
            Err(Error::UnbalancedPanel { units, .. }) => assert_eq!(units, vec!["B".to_string()]),
            other => panic!("expected UnbalancedPanel, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_value_reports_line() {
        let dir = tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "p.csv",
            "unit,time,y,x1\nA,1,1,0\nA,2,inf,0\nB,1,1,0\nB,2,1,0\n",
        );
        match load_panel_csv(&path, &PanelSchema::default()) {
            Err(Error::NonFiniteValue { column, line }) => {
                assert_eq!(column, "y");
                assert_eq!(line, 3);
            }
            other => panic!("expected NonFiniteValue, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_cell_rejected() {
        let dir = tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "p.csv",
            "unit,time,y,x1\nA,1,1,0\nA,1,2,0\n",
        );
        assert!(matches!(
            load_panel_csv(&path, &PanelSchema::default()),
            Err(Error::DuplicateCell { .. })
        ));
    }

    #[test]
    fn shuffled_rows_canonicalize() {
        let dir = tempdir().unwrap();
        let a = write_file(
            dir.path(),
            "a.csv",
            "unit,time,y,x1\n2,1,1.5,0.1\n2,0,2.5,0.2\n10,0,3.5,0.3\n10,1,4.5,0.4\n",
        );
        let b = write_file(
            dir.path(),
            "b.csv",
            "unit,time,y,x1\n10,1,4.5,0.4\n2,0,2.5,0.2\n10,0,3.5,0.3\n2,1,1.5,0.1\n",
        );
        let pa = load_panel_csv(&a, &PanelSchema::default()).unwrap();
        let pb = load_panel_csv(&b, &PanelSchema::default()).unwrap();
        assert_eq!(pa, pb);
        // Numeric sort: unit "2" precedes unit "10".
        assert_eq!(pa.unit_labels(), &["2".to_string(), "10".to_string()]);
    }

    #[test]
    fn missing_column_named() {
        let dir = tempdir().unwrap();
        let path = write_file(dir.path(), "p.csv", "unit,time,outcome\nA,1,1\n");
        match load_panel_csv(&path, &PanelSchema::default()) {
            Err(Error::MissingColumn { name }) => assert_eq!(name, "y"),
            other => panic!("expected MissingColumn, got {other:?}"),
        }
    }

    #[test]
    fn estimates_round_trip_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("est.csv");
        let m = DMatrix::from_row_slice(
            3,
            2,
            &[2.0, -0.1234567890123456, 1e-300, std::f64::consts::PI, -7.5e17, 0.1 + 0.2],
        );
        let est = UnitEstimates::new(m.clone(), 5).unwrap();
        write_estimates_csv(&est, &path).unwrap();
        let back = read_estimates_csv(&path).unwrap();
        assert_eq!(m, back);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("unit,coef_1,coef_2\n"));
        assert!(text.lines().nth(1).unwrap().starts_with("0,2,"));
    }

    #[test]
    fn estimates_to_unwritable_path_is_io_error() {
        let m = DMatrix::from_row_slice(1, 1, &[2.0]);
        let est = UnitEstimates::new(m, 1).unwrap();
        let err = write_estimates_csv(&est, Path::new("/nonexistent-dir/est.csv")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn panel_round_trip_through_csv() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("panel.csv");
        let y = vec![0.25, -1.5, 3.75, 0.5];
        let z = vec![1.0, 0.1, 1.0, 0.2, 1.0, 0.3, 1.0, 0.4];
        let panel = PanelData::new(2, 2, 2, y, z).unwrap();
        write_panel_csv(&panel, &path).unwrap();
        let back = load_panel_csv(&path, &PanelSchema::default()).unwrap();
        assert_eq!(panel.n_units(), back.n_units());
        for i in 0..2 {
            for t in 0..2 {
                assert_eq!(panel.outcome(i, t), back.outcome(i, t));
                assert_eq!(panel.regressor(i, t, 1), back.regressor(i, t, 1));
            }
        }
    }

    #[test]
    fn intercept_invariant_enforced() {
        let y = vec![1.0];
        let z = vec![0.0];
        assert!(PanelData::new(1, 1, 1, y, z).is_err());
    }

    #[test]
    fn coefficient_resolution() {
        let panel = PanelData::new(1, 2, 2, vec![1.0, 2.0], vec![1.0, 0.5, 1.0, 0.6]).unwrap();
        assert_eq!(panel.resolve_coefficient("1").unwrap(), 1);
        assert_eq!(panel.resolve_coefficient("x1").unwrap(), 1);
        assert_eq!(panel.resolve_coefficient("intercept").unwrap(), 0);
        assert!(panel.resolve_coefficient("5").is_err());
        assert!(panel.resolve_coefficient("nope").is_err());
    }
}
