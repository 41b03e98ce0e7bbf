//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by panel ingestion, estimation, bootstrap, and simulation.
#[derive(Debug, Error)]
pub enum Error {
    /// A required column is absent from the CSV header.
    #[error("missing column `{name}`")]
    MissingColumn { name: String },

    /// Not every unit has the same number of periods.
    #[error("unbalanced panel: expected {expected} periods, offending units: {units:?}")]
    UnbalancedPanel { expected: usize, units: Vec<String> },

    /// The same (unit, time) pair appears more than once.
    #[error("duplicate cell for unit `{unit}` at time `{time}`")]
    DuplicateCell { unit: String, time: String },

    /// A NaN or infinite value was read (line number counts the header as line 1).
    #[error("non-finite value in column `{column}` at line {line}")]
    NonFiniteValue { column: String, line: usize },

    /// A cell could not be parsed as a number.
    #[error("cannot parse `{value}` in column `{column}` at line {line}")]
    ParseValue {
        column: String,
        line: usize,
        value: String,
    },

    #[error("i/o error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// Design matrix condition estimate exceeded the configured limit.
    #[error("rank-deficient design (Gram condition estimate {condition:.3e} exceeds limit {limit:.3e})")]
    RankDeficient { condition: f64, limit: f64 },

    /// Too few periods to satisfy T - K >= min_dof.
    #[error("insufficient periods: T={n_periods}, K={n_regressors}, required degrees of freedom {min_dof}")]
    InsufficientPeriods {
        n_periods: usize,
        n_regressors: usize,
        min_dof: usize,
    },

    #[error("empty input")]
    EmptyInput,

    #[error("coefficient index {index} out of range (K={n_regressors})")]
    IndexOutOfRange { index: usize, n_regressors: usize },

    #[error("tau grid must be strictly ascending at position {position}")]
    UnsortedTaus { position: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A resampled unit stayed rank-deficient past the redraw budget.
    #[error("degenerate resample for unit {unit} in replicate {replicate} after {redraws} redraws")]
    DegenerateResample {
        unit: usize,
        replicate: usize,
        redraws: usize,
    },

    #[error("empty replicate vector")]
    EmptyReplicates,

    #[error("invalid simulation spec: {0}")]
    InvalidSpec(String),

    #[error("no closed-form asymptotic oracle for this spec: {0}")]
    UnsupportedSpec(String),

    /// Error context: which unit a first-step failure belongs to.
    #[error("unit {unit}: {source}")]
    InUnit {
        unit: usize,
        #[source]
        source: Box<Error>,
    },

    /// Error context: which bootstrap replicate failed.
    #[error("replicate {replicate}: {source}")]
    InReplicate {
        replicate: usize,
        #[source]
        source: Box<Error>,
    },

    /// Error context: which Monte Carlo cell/replication failed.
    #[error("cell {cell}, mc replication {replication}: {source}")]
    InMcReplication {
        cell: String,
        replication: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Attach a unit index to a first-step error.
    pub fn in_unit(self, unit: usize) -> Self {
        Error::InUnit {
            unit,
            source: Box::new(self),
        }
    }

    /// Attach a bootstrap replicate index.
    pub fn in_replicate(self, replicate: usize) -> Self {
        Error::InReplicate {
            replicate,
            source: Box::new(self),
        }
    }

    /// True for malformed-input errors (as opposed to numerical failures).
    /// The CLI maps these to exit code 2 and everything else to exit code 1.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::MissingColumn { .. }
            | Error::UnbalancedPanel { .. }
            | Error::DuplicateCell { .. }
            | Error::NonFiniteValue { .. }
            | Error::ParseValue { .. }
            | Error::Io { .. }
            | Error::Csv(_)
            | Error::EmptyInput
            | Error::IndexOutOfRange { .. }
            | Error::UnsortedTaus { .. }
            | Error::InvalidParameter(_)
            | Error::InvalidSpec(_)
            | Error::UnsupportedSpec(_) => true,
            Error::RankDeficient { .. }
            | Error::InsufficientPeriods { .. }
            | Error::DegenerateResample { .. }
            | Error::EmptyReplicates => false,
            Error::InUnit { source, .. }
            | Error::InReplicate { source, .. }
            | Error::InMcReplication { source, .. } => source.is_validation(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
