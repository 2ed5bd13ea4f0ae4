//! Evaluates a config over its sweep and writes CSV or JSON.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use super::config::{Evaluator, Experiment, ExperimentConfig, OutputFormat, SeriesConfig, SweepVariable};
use crate::channel::ris_noise_power;
use crate::error::{Error, Result};
use crate::fbl::{bler_asymptotic, bler_closed_form, goodput, ClosedFormInputs, NoiseMode};
use crate::mc::{estimate_bler_grid, GridEstimate, GridPoint, McRunSpec};
use crate::scenario::Scenario;

pub const GOODPUT_UNITS: &str = "bits/channel-use";

/// One output row: the sweep value, one number per column and any errors.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub sweep_value: f64,
    pub values: Vec<f64>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// Ordered `key: value` pairs written as `#` lines.
    pub metadata: Vec<(String, String)>,
    pub sweep_column: String,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

impl RunOutput {
    pub fn failures(&self) -> usize {
        self.rows.iter().map(|r| r.errors.len()).sum()
    }

    /// 0 when every cell was computed, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.failures() == 0 {
            0
        } else {
            2
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.values[i]).collect())
    }

    pub fn sweep_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.sweep_value).collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        for (k, v) in &self.metadata {
            writeln!(buf, "# {k}: {v}")?;
        }
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let mut header = vec![self.sweep_column.as_str()];
            header.extend(self.columns.iter().map(String::as_str));
            header.push("error");
            w.write_record(&header).map_err(csv_err)?;
            for row in &self.rows {
                let mut rec = vec![fmt_num(row.sweep_value)];
                rec.extend(row.values.iter().map(|v| fmt_num(*v)));
                rec.push(row.errors.join("; "));
                w.write_record(&rec).map_err(csv_err)?;
            }
            w.flush()?;
        }
        String::from_utf8(buf).map_err(|e| Error::domain(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        let metadata: Map<String, Value> = self
            .metadata
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let mut obj = Map::new();
                obj.insert(self.sweep_column.clone(), num(r.sweep_value));
                for (c, v) in self.columns.iter().zip(&r.values) {
                    obj.insert(c.clone(), num(*v));
                }
                obj.insert("error".into(), Value::String(r.errors.join("; ")));
                Value::Object(obj)
            })
            .collect();
        let doc = json!({"metadata": metadata, "columns": self.columns, "rows": rows});
        Ok(serde_json::to_string_pretty(&doc)? + "\n")
    }

    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:.9e}")
    }
}

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

/// Hex SHA-256 of the canonical JSON form of a config.
pub fn config_hash(cfg: &ExperimentConfig) -> Result<String> {
    let text = serde_json::to_string(cfg)?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

type Cell = std::result::Result<f64, String>;

/// Columns of one series, filled point by point.
struct Block {
    names: Vec<String>,
    /// cells[point][column]
    cells: Vec<Vec<Cell>>,
}

impl Block {
    fn new(n_points: usize) -> Self {
        Self {
            names: Vec::new(),
            cells: vec![Vec::new(); n_points],
        }
    }

    fn push(&mut self, name: String, column: Vec<Cell>) {
        self.names.push(name);
        for (row, c) in self.cells.iter_mut().zip(column) {
            row.push(c);
        }
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let started = Instant::now();
    let values = cfg.sweep_values();

    let mut blocks = Vec::new();
    if cfg.experiment == Experiment::Fig5 {
        blocks.push(ris_noise_block(cfg, &values)?);
    } else {
        let multi = cfg.series.len() > 1;
        for series in &cfg.series {
            let suffix = if multi { format!("_{}", series.label()) } else { String::new() };
            blocks.push(series_block(cfg, series, &values, &suffix)?);
        }
    }

    let mut columns = Vec::new();
    for b in &blocks {
        columns.extend(b.names.iter().cloned());
    }
    let rows = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut row = Row {
                sweep_value: *v,
                values: Vec::new(),
                errors: Vec::new(),
            };
            for b in &blocks {
                for (name, cell) in b.names.iter().zip(&b.cells[i]) {
                    match cell {
                        Ok(x) => row.values.push(*x),
                        Err(e) => {
                            row.values.push(f64::NAN);
                            row.errors.push(format!("{name}: {e}"));
                        }
                    }
                }
            }
            row
        })
        .collect();

    let modes: Vec<&str> = cfg.modes.noise.iter().map(NoiseMode::label).collect();
    let uses_mc = cfg.evaluators.contains(&Evaluator::MonteCarlo);
    let metadata = vec![
        ("version".into(), env!("CARGO_PKG_VERSION").into()),
        ("experiment".into(), cfg.experiment.name()),
        ("config_sha256".into(), config_hash(cfg)?),
        ("seed".into(), cfg.mc.seed.to_string()),
        ("trials".into(), if uses_mc { cfg.mc.trials.to_string() } else { "0".into() }),
        ("workers".into(), cfg.mc.workers.to_string()),
        ("noise_modes".into(), modes.join(",")),
        ("param_mode".into(), cfg.modes.param_mode.to_string()),
        (
            "ris_noise_scaling".into(),
            serde_json::to_value(cfg.scenario.ris_noise_scaling)?
                .as_str()
                .unwrap_or_default()
                .to_string(),
        ),
        ("goodput_units".into(), GOODPUT_UNITS.into()),
        ("wall_clock_s".into(), format!("{:.3}", started.elapsed().as_secs_f64())),
    ];
    Ok(RunOutput {
        metadata,
        sweep_column: cfg.sweep.variable.column().into(),
        columns,
        rows,
    })
}

/// Runs and writes to `cfg.output.path` (stdout when unset). Returns the exit code.
pub fn run_and_write(cfg: &ExperimentConfig) -> Result<(RunOutput, i32)> {
    let out = run_experiment(cfg)?;
    let text = out.render(cfg.output.format)?;
    match &cfg.output.path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text)?;
        }
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    let code = out.exit_code();
    Ok((out, code))
}

fn series_block(cfg: &ExperimentConfig, series: &SeriesConfig, values: &[f64], suffix: &str) -> Result<Block> {
    let scenarios: Vec<Scenario> = values
        .iter()
        .map(|v| cfg.scenario_at(series, *v))
        .collect::<Result<_>>()?;
    let powers: Vec<f64> = values.iter().map(|v| cfg.tx_power_at(*v)).collect();
    let ev = &cfg.evaluators;
    let pm = cfg.modes.param_mode;
    let varrho = cfg.scenario.training_uses;
    let mut block = Block::new(values.len());

    let want_goodput = ev.contains(&Evaluator::Goodput);
    let want_analytical = ev.contains(&Evaluator::Analytical) || want_goodput;
    let mc = if ev.contains(&Evaluator::MonteCarlo) {
        Some(mc_estimates(cfg, &scenarios, &powers))
    } else {
        None
    };

    for &mode in &cfg.modes.noise {
        let tag = format!("{}{suffix}", mode.label());
        let analytical: Vec<Cell> = scenarios
            .par_iter()
            .zip(&powers)
            .map(|(scn, p)| {
                ClosedFormInputs::new(scn, *p, mode, pm)
                    .and_then(|i| bler_closed_form(&i))
                    .map(|e| e.bler)
                    .map_err(|e| e.to_string())
            })
            .collect();
        if ev.contains(&Evaluator::Analytical) {
            block.push(format!("bler_analytical_{tag}"), analytical.clone());
        }
        if ev.contains(&Evaluator::Asymptotic) {
            let col = scenarios
                .par_iter()
                .zip(&powers)
                .map(|(scn, p)| {
                    ClosedFormInputs::new(scn, *p, mode, pm)
                        .and_then(|i| bler_asymptotic(&i))
                        .map(|e| e.bler)
                        .map_err(|e| e.to_string())
                })
                .collect();
            block.push(format!("bler_asymptotic_{tag}"), col);
        }
        if let Some(mc) = &mc {
            let pick = |f: &dyn Fn(&GridEstimate, &Scenario) -> f64| -> Vec<Cell> {
                mc.iter()
                    .zip(&scenarios)
                    .map(|(r, scn)| r.as_ref().map(|g| f(g, scn)).map_err(Clone::clone))
                    .collect()
            };
            block.push(format!("bler_mc_{tag}"), pick(&|g, _| g.get(mode).mean));
            block.push(format!("bler_mc_{tag}_stderr"), pick(&|g, _| g.get(mode).std_error));
            if want_goodput {
                block.push(
                    format!("goodput_mc_{tag}"),
                    pick(&|g, s| g.goodput(&s.fbl, varrho, mode).mean),
                );
                block.push(
                    format!("goodput_mc_{tag}_stderr"),
                    pick(&|g, s| g.goodput(&s.fbl, varrho, mode).std_error),
                );
            }
        }
        if want_goodput && want_analytical {
            let col = analytical
                .iter()
                .zip(&scenarios)
                .map(|(b, scn)| {
                    b.clone()
                        .and_then(|b| goodput(&scn.fbl, varrho, b).map(|g| g.bits).map_err(|e| e.to_string()))
                })
                .collect();
            block.push(format!("goodput_analytical_{tag}"), col);
        }
    }
    Ok(block)
}

/// Monte Carlo at every point. Power and blocklength sweeps share one set of
/// channel draws; other sweeps change the channel and run per point.
fn mc_estimates(
    cfg: &ExperimentConfig,
    scenarios: &[Scenario],
    powers: &[f64],
) -> Vec<std::result::Result<GridEstimate, String>> {
    let spec_for = |scn: &Scenario| McRunSpec {
        workers: cfg.mc.workers,
        training_uses_varrho: cfg.scenario.training_uses,
        debug_checks: cfg.mc.debug_checks,
        ..McRunSpec::new(scn.clone(), powers[0], cfg.mc.trials, cfg.mc.seed)
    };
    match cfg.sweep.variable {
        SweepVariable::TxPowerDbm | SweepVariable::Blocklength => {
            let grid: Vec<GridPoint> = scenarios
                .iter()
                .zip(powers)
                .map(|(s, p)| GridPoint {
                    tx_power_dbm: *p,
                    fbl: s.fbl,
                })
                .collect();
            match estimate_bler_grid(&spec_for(&scenarios[0]), &grid) {
                Ok(v) => v.into_iter().map(Ok).collect(),
                Err(e) => vec![Err(e.to_string()); scenarios.len()],
            }
        }
        SweepVariable::BetaUniform | SweepVariable::NElements => scenarios
            .iter()
            .zip(powers)
            .map(|(s, p)| {
                let grid = [GridPoint {
                    tx_power_dbm: *p,
                    fbl: s.fbl,
                }];
                estimate_bler_grid(&spec_for(s), &grid)
                    .map(|v| v[0])
                    .map_err(|e| e.to_string())
            })
            .collect(),
    }
}

/// RIS noise power (dBW) against a uniform coefficient for each (N, B) pair.
fn ris_noise_block(cfg: &ExperimentConfig, values: &[f64]) -> Result<Block> {
    if cfg.sweep.variable != SweepVariable::BetaUniform {
        return Err(Error::config("sweep.variable", "the noise table sweeps beta_uniform"));
    }
    let mut block = Block::new(values.len());
    for &b_hz in &cfg.fig5.bandwidths_hz {
        let mut sc = cfg.scenario.clone();
        sc.bandwidth_hz = b_hz;
        sc.sigma_d_sq_db = None;
        let noise = sc.noise().map_err(|e| Error::config("fig5.bandwidths_hz", e.to_string()))?;
        for &n in &cfg.fig5.n_elements {
            let col = values
                .iter()
                .map(|beta| {
                    crate::channel::RisConfig::uniform(n, *beta)
                        .map(|ris| ris_noise_power(&ris, &noise).dbw())
                        .map_err(|e| e.to_string())
                })
                .collect();
            block.push(format!("ris_noise_dbw_n{n}_b{}mhz", b_hz / 1e6), col);
        }
        let receiver = vec![Ok(crate::units::linear_to_db(noise.sigma_d_sq)); values.len()];
        block.push(format!("receiver_noise_dbw_b{}mhz", b_hz / 1e6), receiver);
    }
    Ok(block)
}
