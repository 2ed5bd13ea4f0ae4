//! Experiment configuration: JSON schema, reference defaults and figure presets.
//!
//! A config file is merged over the preset named by its `experiment` field
//! (objects merge key by key, everything else replaces), then deserialized
//! with unknown fields rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::channel::{LinkGeometry, NakagamiLink, NoiseModel, RisConfig, RisNoiseScaling};
use crate::channel::omega_from_geometry;
use crate::error::{Error, Result};
use crate::fbl::{FblParams, NoiseMode};
use crate::momentfit::ParamMode;
use crate::scenario::Scenario;
use crate::units::db_to_linear;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Fig1,
    Fig2,
    Fig2N10,
    Fig2N15,
    Fig3,
    Fig5,
    #[default]
    Custom,
}

impl std::str::FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(Value::String(s.to_string()))
            .map_err(|_| Error::config("experiment", format!("unknown experiment '{s}'")))
    }
}

impl Experiment {
    pub fn name(&self) -> String {
        serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    TxPowerDbm,
    Blocklength,
    BetaUniform,
    NElements,
}

impl SweepVariable {
    pub fn column(&self) -> &'static str {
        match self {
            Self::TxPowerDbm => "P_dbm",
            Self::Blocklength => "Xi",
            Self::BetaUniform => "beta",
            Self::NElements => "N",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepScale {
    #[default]
    Linear,
    /// Equal steps in dB, i.e. geometric spacing.
    #[serde(alias = "dB", alias = "log")]
    Db,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub scale: SweepScale,
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        let raw: Vec<f64> = (0..n)
            .map(|k| {
                let t = k as f64 / (n - 1) as f64;
                match self.scale {
                    SweepScale::Linear => self.start + t * (self.stop - self.start),
                    SweepScale::Db => (self.start.ln() + t * (self.stop.ln() - self.start.ln())).exp(),
                }
            })
            .collect();
        match self.variable {
            SweepVariable::Blocklength | SweepVariable::NElements => raw.iter().map(|v| v.round()).collect(),
            _ => raw,
        }
    }
}

/// One reflection coefficient for every element, or one per element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaSpec {
    Uniform(f64),
    PerElement(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    #[serde(default)]
    pub label: Option<String>,
    pub n_elements: usize,
    pub beta: BetaSpec,
}

impl SeriesConfig {
    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| format!("n{}", self.n_elements))
    }

    pub fn ris(&self) -> Result<RisConfig> {
        match &self.beta {
            BetaSpec::Uniform(b) => RisConfig::uniform(self.n_elements, *b),
            BetaSpec::PerElement(v) => RisConfig::new(self.n_elements, v.clone()),
        }
    }
}

/// Link parameters shared by every series; defaults are the reference link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub m_bn: f64,
    pub m_nd: f64,
    pub geometry: LinkGeometry,
    pub temperature_k: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    /// Receiver noise power in dBW; derived from kTB and the noise figure when null.
    pub sigma_d_sq_db: Option<f64>,
    /// Per-element RIS noise power in dBW; kTB when null.
    pub sigma_r_sq_db: Option<f64>,
    pub ris_noise_scaling: RisNoiseScaling,
    pub blocklength: u64,
    pub payload_bits: f64,
    pub training_uses: u64,
    /// Transmit power for sweeps over other variables.
    pub tx_power_dbm: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            m_bn: 3.0,
            m_nd: 3.0,
            geometry: LinkGeometry::default(),
            temperature_k: 290.0,
            bandwidth_hz: 10e6,
            noise_figure_db: 3.0,
            sigma_d_sq_db: Some(-131.5),
            sigma_r_sq_db: None,
            ris_noise_scaling: RisNoiseScaling::Aggregate,
            blocklength: 500,
            payload_bits: 200.0,
            training_uses: 0,
            tx_power_dbm: -52.0,
        }
    }
}

impl ScenarioConfig {
    pub fn noise(&self) -> Result<NoiseModel> {
        let mut noise = NoiseModel::new(self.temperature_k, self.bandwidth_hz, db_to_linear(self.noise_figure_db))
            .map_err(|e| relabel(e, "scenario"))?
            .with_scaling(self.ris_noise_scaling);
        if let Some(db) = self.sigma_d_sq_db {
            noise = noise.with_sigma_d_sq(db_to_linear(db));
        }
        if let Some(db) = self.sigma_r_sq_db {
            noise = noise.with_sigma_r_sq(db_to_linear(db));
        }
        noise.validate().map_err(|e| relabel(e, "scenario"))?;
        Ok(noise)
    }

    pub fn build(&self, ris: RisConfig, blocklength: u64) -> Result<Scenario> {
        self.geometry.validate().map_err(|e| relabel(e, "scenario"))?;
        let (omega_bn, omega_nd) = omega_from_geometry(&self.geometry);
        let link_bn = NakagamiLink::new(self.m_bn, omega_bn).map_err(|e| field_err("scenario.m_bn", e))?;
        let link_nd = NakagamiLink::new(self.m_nd, omega_nd).map_err(|e| field_err("scenario.m_nd", e))?;
        let fbl = FblParams::new(blocklength, self.payload_bits).map_err(|e| relabel(e, "scenario"))?;
        Ok(Scenario {
            link_bn,
            link_nd,
            ris,
            noise: self.noise()?,
            fbl,
        })
    }
}

fn relabel(e: Error, prefix: &str) -> Error {
    match e {
        Error::Config { field, msg } => Error::Config {
            field: format!("{prefix}.{field}"),
            msg,
        },
        other => other,
    }
}

fn field_err(field: &str, e: Error) -> Error {
    Error::config(field, e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Evaluator {
    #[serde(alias = "a")]
    Analytical,
    #[serde(alias = "s")]
    Asymptotic,
    #[serde(alias = "m", alias = "mc")]
    MonteCarlo,
    #[serde(alias = "g")]
    Goodput,
}

impl std::str::FromStr for Evaluator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(Value::String(s.trim().to_string()))
            .map_err(|_| Error::config("evaluators", format!("unknown evaluator '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModeConfig {
    pub noise: Vec<NoiseMode>,
    pub param_mode: ParamMode,
}

impl Default for ModeConfig {
    fn default() -> Self {
        Self {
            noise: vec![NoiseMode::WithRisNoise, NoiseMode::NoRisNoise],
            param_mode: ParamMode::Derived,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
    pub debug_checks: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            trials: 100_000,
            seed: 1,
            workers: 1,
            debug_checks: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: OutputFormat,
}

/// RIS noise power grid of the sensitivity table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig5Config {
    pub n_elements: Vec<usize>,
    pub bandwidths_hz: Vec<f64>,
}

impl Default for Fig5Config {
    fn default() -> Self {
        Self {
            n_elements: vec![5, 10, 20],
            bandwidths_hz: vec![10e6, 20e6],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: Experiment,
    pub sweep: SweepAxis,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    pub series: Vec<SeriesConfig>,
    pub evaluators: Vec<Evaluator>,
    #[serde(default)]
    pub modes: ModeConfig,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub fig5: Fig5Config,
}

const FIG2_N10: [f64; 10] = [0.7, 0.7, 0.7, 0.7, 0.9, 0.9, 0.9, 0.9, 0.6, 0.6];

fn fig2_n15() -> Vec<f64> {
    let mut b = FIG2_N10.to_vec();
    b.extend([0.4, 0.4, 0.8, 0.8, 0.8]);
    b
}

fn power_sweep() -> Value {
    json!({"variable": "tx_power_dbm", "start": -60.0, "stop": -30.0, "points": 61})
}

/// Preset document for an experiment; user keys are merged over it.
pub fn preset(experiment: Experiment) -> Value {
    let fig2_series = |which: &[usize]| -> Value {
        let all = [
            json!({"label": "n10", "n_elements": 10, "beta": FIG2_N10.to_vec()}),
            json!({"label": "n15", "n_elements": 15, "beta": fig2_n15()}),
        ];
        Value::Array(which.iter().map(|i| all[*i].clone()).collect())
    };
    match experiment {
        Experiment::Fig1 => json!({
            "sweep": power_sweep(),
            "series": [{"n_elements": 10, "beta": 0.9}, {"n_elements": 20, "beta": 0.9}],
            "evaluators": ["analytical", "asymptotic", "monte-carlo"],
        }),
        Experiment::Fig2 => json!({
            "sweep": power_sweep(),
            "series": fig2_series(&[0, 1]),
            "evaluators": ["analytical", "asymptotic", "monte-carlo"],
        }),
        Experiment::Fig2N10 => json!({
            "sweep": power_sweep(),
            "series": fig2_series(&[0]),
            "evaluators": ["analytical", "asymptotic", "monte-carlo"],
        }),
        Experiment::Fig2N15 => json!({
            "sweep": power_sweep(),
            "series": fig2_series(&[1]),
            "evaluators": ["analytical", "asymptotic", "monte-carlo"],
        }),
        Experiment::Fig3 => json!({
            "sweep": {"variable": "blocklength", "start": 200.0, "stop": 20000.0, "points": 41, "scale": "db"},
            "scenario": {"payload_bits": 300.0, "tx_power_dbm": -52.0},
            "series": [{"n_elements": 10, "beta": 0.9}],
            "evaluators": ["analytical", "goodput"],
        }),
        Experiment::Fig5 => json!({
            "sweep": {"variable": "beta_uniform", "start": 0.05, "stop": 1.0, "points": 20},
            "series": [{"n_elements": 10, "beta": 0.9}],
            "evaluators": [],
        }),
        Experiment::Custom => json!({
            "sweep": power_sweep(),
            "series": [{"n_elements": 10, "beta": 0.9}],
            "evaluators": ["analytical"],
        }),
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

impl ExperimentConfig {
    /// Parses a JSON document, applying the preset it names (or `fallback`).
    pub fn from_json_str(text: &str, fallback: Option<Experiment>) -> Result<Self> {
        let user: Value = if text.trim().is_empty() {
            json!({})
        } else {
            serde_json::from_str(text).map_err(|e| Error::config("<root>", e.to_string()))?
        };
        if !user.is_object() {
            return Err(Error::config("<root>", "config must be a JSON object"));
        }
        let experiment = match user.get("experiment") {
            Some(v) => serde_json::from_value(v.clone())
                .map_err(|_| Error::config("experiment", format!("unknown experiment {v}")))?,
            None => fallback.unwrap_or_default(),
        };
        let mut doc = preset(experiment);
        merge(&mut doc, user);
        doc["experiment"] = serde_json::to_value(experiment)?;
        let cfg: Self = serde_path_to_error::deserialize(doc).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn for_experiment(experiment: Experiment) -> Result<Self> {
        Self::from_json_str("", Some(experiment))
    }

    pub fn load(path: &Path, fallback: Option<Experiment>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text, fallback)
    }

    pub fn sweep_values(&self) -> Vec<f64> {
        self.sweep.values()
    }

    /// Scenario of one series at one sweep value.
    pub fn scenario_at(&self, series: &SeriesConfig, value: f64) -> Result<Scenario> {
        let mut ris_series = series.clone();
        let mut blocklength = self.scenario.blocklength;
        match self.sweep.variable {
            SweepVariable::TxPowerDbm => {}
            SweepVariable::Blocklength => blocklength = value as u64,
            SweepVariable::BetaUniform => ris_series.beta = BetaSpec::Uniform(value),
            SweepVariable::NElements => ris_series.n_elements = value as usize,
        }
        self.scenario.build(ris_series.ris()?, blocklength)
    }

    /// Transmit power at a sweep value.
    pub fn tx_power_at(&self, value: f64) -> f64 {
        match self.sweep.variable {
            SweepVariable::TxPowerDbm => value,
            _ => self.scenario.tx_power_dbm,
        }
    }

    /// Checks every invariant before any computation.
    pub fn validate(&self) -> Result<()> {
        let s = &self.sweep;
        if s.points < 2 {
            return Err(Error::config("sweep.points", "need at least 2 points"));
        }
        if !(s.start.is_finite() && s.stop.is_finite()) {
            return Err(Error::config("sweep", "start and stop must be finite"));
        }
        if s.scale == SweepScale::Db && !(s.start > 0.0 && s.stop > 0.0) {
            return Err(Error::config("sweep.scale", "dB spacing needs positive endpoints"));
        }
        if self.series.is_empty() {
            return Err(Error::config("series", "at least one series is required"));
        }
        if self.mc.trials == 0 {
            return Err(Error::config("mc.trials", "must be positive"));
        }
        if self.mc.workers == 0 {
            return Err(Error::config("mc.workers", "must be positive"));
        }
        if self.modes.noise.is_empty() {
            return Err(Error::config("modes.noise", "at least one noise mode is required"));
        }
        for (i, series) in self.series.iter().enumerate() {
            let at = |e: Error| match e {
                Error::Config { field, msg } if field.starts_with("ris.") => Error::Config {
                    field: format!("series[{i}].{}", &field[4..]),
                    msg,
                },
                Error::Config { field, msg } => Error::Config { field, msg },
                other => Error::config(format!("series[{i}]"), other.to_string()),
            };
            if matches!(
                (self.sweep.variable, &series.beta),
                (SweepVariable::NElements, BetaSpec::PerElement(_))
            ) {
                return Err(Error::config(
                    format!("series[{i}].beta"),
                    "an element-count sweep needs a scalar beta",
                ));
            }
            series.ris().map_err(at)?;
            for v in self.sweep_values() {
                self.scenario_at(series, v).map_err(|e| match e {
                    Error::Config { field, msg } if field.starts_with("ris.") => at(Error::Config { field, msg }),
                    Error::Config { field, msg } => Error::Config {
                        field,
                        msg: format!("{msg} (at {} = {v})", self.sweep.variable.column()),
                    },
                    other => at(other),
                })?;
            }
        }
        Ok(())
    }
}
