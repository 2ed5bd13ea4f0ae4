//! Parameter sweeps driven by JSON configs, plus the crossover report.

mod config;
mod crossover;
mod run;

pub use config::{
    preset, BetaSpec, Evaluator, Experiment, ExperimentConfig, Fig5Config, McConfig, ModeConfig, OutputConfig,
    OutputFormat, ScenarioConfig, SeriesConfig, SweepAxis, SweepScale, SweepVariable,
};
pub use crossover::{
    beta_thresholds, crossover_report, power_crossover, BetaThreshold, CrossoverReport, PowerCrossover, ScanOptions,
};
pub use run::{config_hash, run_and_write, run_experiment, Row, RunOutput, GOODPUT_UNITS};
