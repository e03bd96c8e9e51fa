//! TOML configuration. Every section and key is optional; unknown keys are rejected.
//!
//! ```toml
//! [simulate]
//! instance = "pool.csv"
//! gaps = [1000, 2000, 4000]
//! trials = 1000
//! seed = 42
//! strategies = ["fixed", "prob-mixed-pareto", "full"]
//!
//! [branching]
//! phi = 0.6
//! family = "pareto"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::{CliError, CliResult};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub branching: BranchingConfig,
    #[serde(default)]
    pub solve: SolveFileConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub report: ReportConfig,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub gains: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub families: Option<Vec<String>>,
    pub alpha: Option<f64>,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub instance: Option<PathBuf>,
    pub gaps: Option<Vec<f64>>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub strategies: Option<Vec<String>>,
    pub workers: Option<usize>,
    pub epsilon: Option<f64>,
    pub out: Option<PathBuf>,
}

/// Branching parameters shared by `solve` and `sweep`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchingConfig {
    pub phi: Option<f64>,
    pub min_nonzero_samples: Option<usize>,
    pub family: Option<String>,
    pub mixed: Option<bool>,
    pub reliability: Option<u32>,
    pub max_candidates: Option<usize>,
    pub sb_iteration_limit: Option<u64>,
    pub node_limit: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveFileConfig {
    pub instance: Option<PathBuf>,
    pub mode: Option<String>,
    pub lookahead: Option<u32>,
    pub extra_iterations: Option<u64>,
    pub cutoff: Option<f64>,
    pub out: Option<PathBuf>,
    pub decisions: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub instances: Option<PathBuf>,
    pub count: Option<usize>,
    pub seed: Option<u64>,
    pub modes: Option<Vec<String>>,
    pub lookaheads: Option<Vec<u32>>,
    pub extra_iterations: Option<Vec<u64>>,
    pub cutoff: Option<String>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub details: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    pub pairs: Option<Vec<String>>,
    pub gains: Option<PathBuf>,
    pub gaps: Option<Vec<f64>>,
    pub epsilon: Option<f64>,
    pub out: Option<PathBuf>,
}
