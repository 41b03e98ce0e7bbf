//! Optional JSON config file and flag-merge helpers.
//!
//! Precedence is flags > config > built-in defaults: a field given on the
//! command line always wins; otherwise the config file supplies it; otherwise
//! the default applies.

use std::path::{Path, PathBuf};

use panelq_core::{Error, Result};
use serde::Deserialize;

/// Flat key set mirroring the command-line flags. Every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub tau: Option<Vec<f64>>,
    pub coef: Option<String>,
    pub design: Option<String>,
    pub b: Option<usize>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub null: Option<f64>,
    pub preset: Option<String>,
    pub n_mc: Option<usize>,
    pub unit_col: Option<String>,
    pub time_col: Option<String>,
    pub y_col: Option<String>,
    pub x_cols: Option<Vec<String>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidParameter(format!("bad config file: {e}")))
    }
}

/// flag > config > default
pub fn resolve<T: Clone>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}

/// flag > config, no default
pub fn resolve_opt<T: Clone>(flag: Option<T>, config: Option<T>) -> Option<T> {
    flag.or(config)
}

/// Parse a comma-separated tau list (repeated flags arrive pre-split).
pub fn parse_tau_list(raw: &[String]) -> Result<Vec<f64>> {
    let mut taus = Vec::new();
    for chunk in raw {
        for piece in chunk.split(',') {
            let piece = piece.trim();
            if piece.is_empty() {
                continue;
            }
            let tau: f64 = piece
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad tau `{piece}`")))?;
            taus.push(tau);
        }
    }
    Ok(taus)
}
