//! JSON configs for `simulate` and `train-toy`. Missing fields take the
//! library defaults.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use vacuity_core::forge::PopulationParams;
use vacuity_core::lab::{AppendedEvidence, ExpansionMode, Orientation, ScoreMetric};
use vacuity_core::losses::{LambdaSchedule, Mode, TrainConfig};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MetricArg {
    Vacuity,
    Mp,
    Entropy,
}

impl From<MetricArg> for ScoreMetric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Vacuity => ScoreMetric::Vacuity,
            MetricArg::Mp => ScoreMetric::MaxProbability,
            MetricArg::Entropy => ScoreMetric::NormalizedEntropy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum OrientationArg {
    #[serde(rename = "id-pos")]
    IdPos,
    #[serde(rename = "ood-pos")]
    OodPos,
}

impl From<OrientationArg> for Orientation {
    fn from(o: OrientationArg) -> Self {
        match o {
            OrientationArg::IdPos => Orientation::IdPositive,
            OrientationArg::OodPos => Orientation::OodPositive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum ModeArg {
    #[serde(rename = "ood-only")]
    OodOnly,
    #[serde(rename = "matched")]
    Matched,
}

impl From<ModeArg> for ExpansionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::OodOnly => ExpansionMode::OodOnly,
            ModeArg::Matched => ExpansionMode::Matched,
        }
    }
}

/// Evidence per appended class: a number or `"invariant"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EvidenceArg {
    Constant(f64),
    Named(InvariantTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InvariantTag {
    Invariant,
}

impl Default for EvidenceArg {
    fn default() -> Self {
        EvidenceArg::Constant(0.0)
    }
}

impl std::str::FromStr for EvidenceArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("invariant") {
            return Ok(EvidenceArg::Named(InvariantTag::Invariant));
        }
        s.parse::<f64>()
            .map(EvidenceArg::Constant)
            .map_err(|_| format!("expected a number or \"invariant\", got {s:?}"))
    }
}

impl From<EvidenceArg> for AppendedEvidence {
    fn from(e: EvidenceArg) -> Self {
        match e {
            EvidenceArg::Constant(v) => AppendedEvidence::Constant(v),
            EvidenceArg::Named(InvariantTag::Invariant) => AppendedEvidence::Invariant,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationConfig {
    pub n_id: usize,
    pub n_ood: usize,
    pub k: usize,
    pub id_correct_shape: f64,
    pub id_wrong_shape: f64,
    pub ood_shape: f64,
    pub scale: f64,
    pub seed: u64,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        let p = PopulationParams::default();
        PopulationConfig {
            n_id: p.n_id,
            n_ood: p.n_ood,
            k: p.k,
            id_correct_shape: p.id_correct_shape,
            id_wrong_shape: p.id_wrong_shape,
            ood_shape: p.ood_shape,
            scale: p.scale,
            seed: p.seed,
        }
    }
}

impl From<&PopulationConfig> for PopulationParams {
    fn from(c: &PopulationConfig) -> Self {
        PopulationParams {
            n_id: c.n_id,
            n_ood: c.n_ood,
            k: c.k,
            id_correct_shape: c.id_correct_shape,
            id_wrong_shape: c.id_wrong_shape,
            ood_shape: c.ood_shape,
            scale: c.scale,
            seed: c.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub population: PopulationConfig,
    pub metric: MetricArg,
    pub orientation: OrientationArg,
    /// Largest K in the sweep; `k + 4` when absent.
    pub k_max: Option<usize>,
    pub evidence: EvidenceArg,
    pub modes: Vec<ModeArg>,
    /// Also write the generated populations as record files.
    pub write_records: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            population: PopulationConfig::default(),
            metric: MetricArg::Vacuity,
            orientation: OrientationArg::IdPos,
            k_max: None,
            evidence: EvidenceArg::default(),
            modes: vec![ModeArg::OodOnly, ModeArg::Matched],
            write_records: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainMode {
    Edl,
    IbEdl,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaConfig {
    Constant(f64),
    Ramp { max: f64, ramp_steps: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub n_per_class: usize,
    pub separation: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            n_per_class: 250,
            separation: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainToyConfig {
    pub data: DataConfig,
    pub mode: TrainMode,
    pub steps: usize,
    pub learning_rate: f64,
    pub lambda: LambdaConfig,
    pub beta: f64,
    /// Seeds both the dataset and the trainer.
    pub seed: u64,
    pub sigma_mult: f64,
    pub grid: usize,
    pub init_scale: f64,
    pub probe_radius_factor: f64,
    pub probe_count: usize,
}

impl Default for TrainToyConfig {
    fn default() -> Self {
        let c = TrainConfig::default();
        TrainToyConfig {
            data: DataConfig::default(),
            mode: match c.mode {
                Mode::Edl => TrainMode::Edl,
                Mode::IbEdl => TrainMode::IbEdl,
            },
            steps: c.steps,
            learning_rate: c.learning_rate,
            lambda: match c.lambda {
                LambdaSchedule::Constant(v) => LambdaConfig::Constant(v),
                LambdaSchedule::Ramp { max, ramp_steps } => LambdaConfig::Ramp { max, ramp_steps },
            },
            beta: c.beta,
            seed: c.seed,
            sigma_mult: c.sigma_mult,
            grid: c.grid,
            init_scale: c.init_scale,
            probe_radius_factor: c.probe_radius_factor,
            probe_count: c.probe_count,
        }
    }
}

impl TrainToyConfig {
    pub fn trainer(&self) -> TrainConfig {
        TrainConfig {
            mode: match self.mode {
                TrainMode::Edl => Mode::Edl,
                TrainMode::IbEdl => Mode::IbEdl,
            },
            steps: self.steps,
            learning_rate: self.learning_rate,
            lambda: match self.lambda {
                LambdaConfig::Constant(v) => LambdaSchedule::Constant(v),
                LambdaConfig::Ramp { max, ramp_steps } => LambdaSchedule::Ramp { max, ramp_steps },
            },
            beta: self.beta,
            seed: self.seed,
            sigma_mult: self.sigma_mult,
            grid: self.grid,
            init_scale: self.init_scale,
            probe_radius_factor: self.probe_radius_factor,
            probe_count: self.probe_count,
        }
    }
}

pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| CliError::Config {
        path: path.to_path_buf(),
        source,
    })
}
