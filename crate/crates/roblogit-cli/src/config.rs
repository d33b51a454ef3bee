//! TOML configuration schema for the `fit` and `path` commands.
//!
//! A config file has up to five sections:
//!
//! ```toml
//! [data]
//! response = "y"        # column name, or a 0-based column index
//! intercept = false     # unpenalized intercept term
//!
//! [model]
//! loss = { family = { kind = "exp_loss" } }
//! penalty = { kind = "scad", a = 3.7 }
//! lambda = 0.1          # penalty level; used by `fit`, ignored by `path`
//!
//! [solver]              # optional; every field has a default
//! max_iters = 5000
//! tol = 1e-7
//!
//! [inference]           # optional
//! standard_errors = true
//!
//! [path]                # required by `path`, ignored by `fit`
//! lambdas = [0.5, 0.25, 0.1]   # strictly descending
//! ```
//!
//! Loss kinds: `exp_loss`, `divergence` (field `c`), `classical_deviance`.
//! Penalty kinds: `none`, `lasso`, `ridge`, `elastic_net` (field `theta`),
//! `scad` (field `a`), `mcp` (field `a`). Unknown keys anywhere are
//! rejected so typos fail loudly instead of silently falling back to a
//! default.

use std::fmt;
use std::path::Path;

use anyhow::{Context, Result};
use roblogit::loss::LossSpec;
use roblogit::penalty::PenaltyFamily;
use roblogit::solver::FitConfig;
use serde::Deserialize;

/// Parsed contents of a `fit`/`path` config file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data: DataSection,
    pub model: ModelSection,
    #[serde(default)]
    pub solver: FitConfig,
    #[serde(default)]
    pub inference: InferenceSection,
    pub path: Option<PathSection>,
}

/// How to interpret the CSV input.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// Which column holds the binary response.
    pub response: ColumnRef,
    /// Whether to fit an unpenalized intercept.
    #[serde(default)]
    pub intercept: bool,
}

/// A column picked by header name or by 0-based position.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnRef::Name(s) => write!(f, "column {s:?}"),
            ColumnRef::Index(i) => write!(f, "column index {i}"),
        }
    }
}

/// Loss, penalty shape, and penalty level.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub loss: LossSpec,
    pub penalty: PenaltyFamily,
    /// Level for single fits; a level of 0 disables the penalty's effect.
    #[serde(default)]
    pub lambda: f64,
}

/// What to report beyond the point estimate.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InferenceSection {
    /// Compute sandwich standard errors for the active block.
    pub standard_errors: bool,
}

/// Settings specific to the `path` command.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSection {
    /// Penalty levels, strictly descending (warm starts run large to small).
    pub lambdas: Vec<f64>,
}

/// Reads and parses a config file; errors carry the file path and the
/// offending field name.
pub fn load(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let cfg: FileConfig = toml::from_str(&text)
        .with_context(|| format!("invalid config file {}", path.display()))?;
    Ok(cfg)
}
