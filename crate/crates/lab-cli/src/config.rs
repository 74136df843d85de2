//! Experiment configuration, read from TOML.
//!
//! ```toml
//! seed = 7
//! replicates = 64
//! n_list = [1024, 2048, 4096]
//!
//! [process]
//! kind = "flip_chain"
//! flip = 0.25
//!
//! [schedule]
//! variant = "balanced"
//! p = 4.0
//! ```

use crate::error::{CliError, CliResult};
use serde::{Deserialize, Serialize};
use siplab_core::coefficients::{TailModel, DEFAULT_TUPLE_HORIZON};
use siplab_core::coupling::ScheduleVariant;
use siplab_core::processes::ProcessSpec;
use std::path::{Path, PathBuf};

fn default_replicates() -> u64 {
    64
}

fn default_alpha_horizon() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub process: ProcessSpec,
    #[serde(default)]
    pub coefficients: CoefficientSource,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub n_list: Vec<u64>,
    #[serde(default = "default_replicates")]
    pub replicates: u64,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; the command line overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Allowed distance between fitted and target exponents; each pipeline
    /// has its own default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Also fit a `log log n` regressor.
    #[serde(default)]
    pub log_correction: bool,
    /// Debug mode: couple with `T = S`.
    #[serde(default)]
    pub identity_coupling: bool,
    /// Largest lag for the exact α coefficients in `coeffs`.
    #[serde(default = "default_alpha_horizon")]
    pub alpha_horizon: usize,
    #[serde(default)]
    pub bound: BoundConfig,
    #[serde(default)]
    pub degenerate: DegenerateConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lsv: Option<LsvConfig>,
}

/// Where the θ coefficients come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSource {
    /// Computed from the chain for `k = 0..=horizon`.
    Exact {
        #[serde(default = "default_p")]
        p: usize,
        #[serde(default = "default_p")]
        q: usize,
        #[serde(default = "default_horizon")]
        horizon: usize,
        #[serde(default = "default_tuple_horizon")]
        tuple_horizon: usize,
        tail: TailModel,
    },
    Declared {
        #[serde(default = "default_p")]
        p: usize,
        #[serde(default = "default_p")]
        q: usize,
        values: Vec<f64>,
        tail: TailModel,
    },
}

fn default_p() -> usize {
    4
}

fn default_horizon() -> usize {
    40
}

fn default_tuple_horizon() -> usize {
    DEFAULT_TUPLE_HORIZON
}

impl Default for CoefficientSource {
    fn default() -> Self {
        Self::Exact {
            p: 4,
            q: 4,
            horizon: default_horizon(),
            tuple_horizon: DEFAULT_TUPLE_HORIZON,
            tail: TailModel::Zero,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    #[serde(flatten)]
    pub variant: ScheduleVariant,
    pub p: f64,
    /// Stand-in for the unspecified constant in the block thresholds.
    #[serde(default = "default_c_fit")]
    pub c_fit: f64,
}

fn default_c_fit() -> f64 {
    1.0
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            variant: ScheduleVariant::Balanced,
            p: 4.0,
            c_fit: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    pub train_n: Vec<u64>,
    pub holdout_n: Vec<u64>,
    pub points_per_n: usize,
    pub replicates: u64,
    /// Fixed constants for `bound check`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self {
            train_n: vec![256, 2048],
            holdout_n: vec![512, 1024],
            points_per_n: 6,
            replicates: 100_000,
            c1: None,
            c2: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegenerateConfig {
    /// Moment order compared with the n-free bound.
    pub q: f64,
    /// Order of the maximal-sum norm.
    pub r: f64,
    /// Exponent of the reference growth `n^{1/p}` and the series weight.
    pub p: f64,
    pub alpha: f64,
    pub epsilon: f64,
    /// Replicates for the series check (at least 100).
    pub series_replicates: u64,
    /// Allowed growth exponent of `‖S_n*‖_r`.
    pub flat_tolerance: f64,
}

impl Default for DegenerateConfig {
    fn default() -> Self {
        Self {
            q: 2.0,
            r: 2.0,
            p: 4.0,
            alpha: 0.5,
            epsilon: 1.0,
            series_replicates: 1000,
            flat_tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LsvConfig {
    /// Longest excursion of the finite surrogate; 0 disables it.
    #[serde(default = "default_excursion")]
    pub max_excursion: usize,
    /// Replicates for the direct orbit statistics.
    #[serde(default = "default_orbit_replicates")]
    pub orbit_replicates: u64,
}

fn default_excursion() -> usize {
    256
}

fn default_orbit_replicates() -> u64 {
    32
}

impl Default for LsvConfig {
    fn default() -> Self {
        Self {
            max_excursion: default_excursion(),
            orbit_replicates: default_orbit_replicates(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Checks shared by every pipeline.
    pub fn validate(&self) -> CliResult<()> {
        if !self.n_list.is_empty() && !self.n_list.windows(2).all(|w| w[0] < w[1]) {
            return Err(CliError::Config(
                "n_list must be strictly increasing".into(),
            ));
        }
        if self.n_list.first() == Some(&0) {
            return Err(CliError::Config("n_list entries must be positive".into()));
        }
        if self.tolerance.is_some_and(|t| !(t > 0.0)) {
            return Err(CliError::Config("tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn require_n_list(&self) -> CliResult<()> {
        if self.n_list.is_empty() {
            return Err(CliError::Config("n_list is empty".into()));
        }
        Ok(())
    }

    /// Rate experiments need dyadic lengths `≥ 8` and at least 16 replicates.
    pub fn validate_rate(&self) -> CliResult<()> {
        self.require_n_list()?;
        if self.n_list.len() < 2 {
            return Err(CliError::Config(
                "a rate fit needs at least two lengths".into(),
            ));
        }
        if let Some(n) = self.n_list.iter().find(|n| !n.is_power_of_two() || **n < 8) {
            return Err(CliError::Config(format!(
                "n = {n} is not a power of two of at least 8"
            )));
        }
        if self.replicates < 16 {
            return Err(CliError::Config(
                "rate experiments need at least 16 replicates".into(),
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
