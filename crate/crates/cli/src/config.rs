//! Experiment configuration: one JSON document per run, with a few
//! command-line overrides for the fields that vary across batch runs.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use flowgain::{BottleneckParams, PositiveLinearSystem, RfmParams, SwitchingSignal};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub lambda: f64,
    pub sigma_bar: f64,
    pub epsilon: f64,
}

/// Where the schedule comes from. Exactly one source; the variants mirror
/// the experiment kinds in the paper-style figures.
#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalSource {
    /// A signal JSON document on disk.
    File(PathBuf),
    /// A seed-deterministic random admissible schedule.
    Random { seed: u64, n_pairs: usize },
    /// The evenly spaced fast-switching family member with `n` pairs.
    Fast { n: usize },
    /// The constant mean inflow.
    Constant,
}

/// Inline system matrices, row-major `A`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfmConfig {
    pub rates: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: ParamsConfig,
    pub signal: Option<SignalSource>,
    pub system: Option<SystemConfig>,
    pub rfm: Option<RfmConfig>,
    pub period: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub n_pairs: Option<usize>,
    pub sigma_grid: Option<Vec<f64>>,
    pub epsilon_ratio: Option<f64>,
    pub n_periods: Option<usize>,
    pub samples_per_period: Option<usize>,
    pub step: Option<f64>,
    pub budget: Option<usize>,
    pub out: Option<PathBuf>,
    pub trajectory_out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("invalid config {}: {e}", path.display())))
    }

    pub fn bottleneck_params(&self) -> Result<BottleneckParams, CliError> {
        BottleneckParams::new(self.params.lambda, self.params.sigma_bar, self.params.epsilon)
            .map_err(CliError::from)
    }

    pub fn require<T: Copy>(field: Option<T>, name: &str) -> Result<T, CliError> {
        field.ok_or_else(|| CliError::config(format!("config field '{name}' is required")))
    }

    /// Resolves the schedule. `seed_override` (the --seed flag) wins over the
    /// seed embedded in a random source.
    pub fn resolve_signal(&self, seed_override: Option<u64>) -> Result<SwitchingSignal, CliError> {
        let source = self
            .signal
            .as_ref()
            .ok_or_else(|| CliError::config("config field 'signal' is required".into()))?;
        match source {
            SignalSource::File(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    CliError::config(format!("cannot read signal file {}: {e}", path.display()))
                })?;
                SwitchingSignal::from_json(&text).map_err(CliError::from)
            }
            SignalSource::Random { seed, n_pairs } => {
                let period = Self::require(self.period, "period")?;
                let seed = seed_override.unwrap_or(*seed);
                flowgain::random_signal(period, *n_pairs, seed).map_err(CliError::from)
            }
            SignalSource::Fast { n } => {
                let period = Self::require(self.period, "period")?;
                flowgain::fast_switching_family(period, *n).map_err(CliError::from)
            }
            SignalSource::Constant => {
                let period = Self::require(self.period, "period")?;
                SwitchingSignal::constant(period).map_err(CliError::from)
            }
        }
    }

    pub fn positive_system(&self) -> Result<PositiveLinearSystem, CliError> {
        let sys = self
            .system
            .as_ref()
            .ok_or_else(|| CliError::config("config field 'system' is required".into()))?;
        let n = sys.a.len();
        if sys.a.iter().any(|row| row.len() != n) {
            return Err(CliError::config("system matrix A must be square".into()));
        }
        let flat: Vec<f64> = sys.a.iter().flatten().copied().collect();
        PositiveLinearSystem::new(
            DMatrix::from_row_slice(n, n, &flat),
            DVector::from_row_slice(&sys.b),
            DVector::from_row_slice(&sys.c),
        )
        .map_err(CliError::from)
    }

    pub fn rfm_params(&self) -> Result<RfmParams, CliError> {
        let rfm = self
            .rfm
            .as_ref()
            .ok_or_else(|| CliError::config("config field 'rfm' is required".into()))?;
        RfmParams::new(rfm.rates.clone()).map_err(CliError::from)
    }
}
