//! Experiment config JSON for `train` and `sweep`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use shortcut_core::experiment::{default_learning_rates, Arm, ExperimentConfig, InitKind, DEFAULT_PERTURBATION};
use shortcut_core::{ActivationTriple, Dataset};

use crate::data::{CsvMode, DataSpec};
use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmConfig {
    pub label: String,
    /// Matrices per transformation path.
    pub n: usize,
    #[serde(default = "default_acts")]
    pub activations: String,
    #[serde(default = "default_true")]
    pub shortcuts: bool,
    /// `xavier`, `orthogonal` or `zero_perturbed`.
    pub init: String,
    #[serde(default = "default_perturbation")]
    pub perturbation_scale: f64,
}

fn default_acts() -> String {
    ActivationTriple::linear().to_string()
}

fn default_true() -> bool {
    true
}

fn default_perturbation() -> f64 {
    DEFAULT_PERTURBATION
}

fn default_cap() -> usize {
    800
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    /// `synthetic:<seed>` or a CSV of `label, feature…` rows (PCA-whitened).
    pub data: String,
    pub width: usize,
    /// Sample count for synthetic data; ignored for CSV files.
    #[serde(default)]
    pub samples: Option<usize>,
    /// Depths counted in weight matrices (units × n).
    pub depths: Vec<usize>,
    pub arms: Vec<ArmConfig>,
    /// Defaults to 10^-3 … 10^0.5 in half-decade steps.
    #[serde(default)]
    pub learning_rates: Option<Vec<f64>>,
    pub epochs: usize,
    pub seeds: Vec<u64>,
    /// 0 disables Hessian snapshots.
    #[serde(default)]
    pub snapshot_interval: usize,
    #[serde(default = "default_cap")]
    pub max_spectrum_params: usize,
}

impl ConfigFile {
    pub fn read(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            LabError::Config(msg) => LabError::parse(path, msg),
            other => other,
        })
    }

    pub fn parse(text: &str) -> LabResult<Self> {
        serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn experiment(&self) -> LabResult<ExperimentConfig> {
        let arms = self
            .arms
            .iter()
            .map(|a| {
                let acts: ActivationTriple = a
                    .activations
                    .parse()
                    .map_err(|e| LabError::Config(format!("arms.activations: {e}")))?;
                let init: InitKind = a.init.parse().map_err(|e| LabError::Config(format!("arms.init: {e}")))?;
                let mut arm = Arm::new(a.label.clone(), a.n, acts, init);
                arm.shortcuts = a.shortcuts;
                arm.perturbation_scale = a.perturbation_scale;
                Ok(arm)
            })
            .collect::<LabResult<Vec<_>>>()?;
        let config = ExperimentConfig {
            width: self.width,
            depths: self.depths.clone(),
            arms,
            learning_rates: self.learning_rates.clone().unwrap_or_else(default_learning_rates),
            epochs: self.epochs,
            seeds: self.seeds.clone(),
            snapshot_interval: self.snapshot_interval,
            max_spectrum_params: self.max_spectrum_params,
        };
        config.validate().map_err(|e| LabError::Config(e.to_string()))?;
        Ok(config)
    }

    pub fn dataset(&self) -> LabResult<Dataset> {
        let spec: DataSpec = self.data.parse()?;
        let samples = match (&spec, self.samples) {
            (DataSpec::Csv(_), _) => 0,
            (_, Some(m)) => m,
            (_, None) => return Err(LabError::Config("samples: required for generated data".into())),
        };
        spec.load(self.width, samples, CsvMode::Whitened)
    }
}
