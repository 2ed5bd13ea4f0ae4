//! Where adding elements stops paying off.
//!
//! Two thresholds: the transmit power below which the smaller surface has the
//! lower BLER, and the uniform coefficient at which the RIS noise power equals
//! the receiver noise power.

use serde::Serialize;

use super::config::{BetaSpec, ExperimentConfig, SeriesConfig};
use crate::channel::{ris_noise_power, RisConfig};
use crate::error::{Error, Result};
use crate::fbl::{bler_asymptotic, bler_closed_form, ClosedFormInputs, CurveKind, NoiseMode};
use crate::momentfit::ParamMode;
use crate::scenario::Scenario;
use crate::units::{db_to_linear, linear_to_db};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub lo_dbm: f64,
    pub hi_dbm: f64,
    pub step_db: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            lo_dbm: -80.0,
            hi_dbm: 0.0,
            step_db: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerCrossover {
    pub curve: CurveKind,
    pub noise_mode: NoiseMode,
    pub n_small: usize,
    pub n_large: usize,
    /// None when the curves do not cross inside the bracket.
    pub crossover_dbm: Option<f64>,
    /// True when the smaller surface wins below the crossing.
    pub small_better_below: Option<bool>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaThreshold {
    pub n_elements: usize,
    pub noise_figure_db: f64,
    /// lambda / N; RIS noise equals receiver noise at this coefficient.
    pub beta_star: f64,
    /// Whether beta* lies inside [0, 1].
    pub reachable: bool,
    pub ris_noise_dbw: f64,
    pub receiver_noise_dbw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossoverReport {
    pub param_mode: ParamMode,
    pub bracket_dbm: [f64; 2],
    pub power: Vec<PowerCrossover>,
    pub beta: Vec<BetaThreshold>,
}

/// ln BLER of one curve, or None where it is saturated or underflows.
fn ln_curve(scn: &Scenario, p: f64, curve: CurveKind, mode: NoiseMode, pm: ParamMode) -> Result<Option<f64>> {
    let inputs = ClosedFormInputs::new(scn, p, mode, pm)?;
    Ok(match curve {
        CurveKind::Analytical => {
            let e = bler_closed_form(&inputs)?;
            (e.bler > 0.0 && e.pre_clamp < 1.0).then(|| e.bler.ln())
        }
        CurveKind::Asymptotic => {
            let e = bler_asymptotic(&inputs)?;
            let saturated = e.ln_upsilon1 >= 0.0 || e.ln_upsilon2 >= 0.0 || e.bler >= 1.0;
            (!saturated && e.ln_bound.is_finite()).then_some(e.ln_bound)
        }
    })
}

/// First power where ln BLER(small) - ln BLER(large) changes sign.
pub fn power_crossover(
    small: &Scenario,
    large: &Scenario,
    curve: CurveKind,
    mode: NoiseMode,
    pm: ParamMode,
    opts: ScanOptions,
) -> Result<PowerCrossover> {
    let diff = |p: f64| -> Result<Option<f64>> {
        Ok(match (ln_curve(small, p, curve, mode, pm)?, ln_curve(large, p, curve, mode, pm)?) {
            (Some(a), Some(b)) => Some(a - b),
            _ => None,
        })
    };
    let steps = ((opts.hi_dbm - opts.lo_dbm) / opts.step_db).round() as usize;
    let mut prev: Option<(f64, f64)> = None;
    let mut found = None;
    for k in 0..=steps {
        let p = opts.lo_dbm + k as f64 * opts.step_db;
        let d = diff(p)?;
        if let (Some((p0, d0)), Some(d1)) = (prev, d) {
            if d0 == 0.0 || d0.signum() != d1.signum() {
                found = Some((p0, d0, p, d1));
                break;
            }
        }
        prev = d.map(|d| (p, d));
    }
    let base = PowerCrossover {
        curve,
        noise_mode: mode,
        n_small: small.ris.n_elements(),
        n_large: large.ris.n_elements(),
        crossover_dbm: None,
        small_better_below: None,
        note: format!("no crossover in bracket [{}, {}] dBm", opts.lo_dbm, opts.hi_dbm),
    };
    let Some((mut a, d_a, mut b, _)) = found else {
        return Ok(base);
    };
    if d_a != 0.0 {
        for _ in 0..60 {
            let mid = 0.5 * (a + b);
            match diff(mid)? {
                Some(d) if d.signum() == d_a.signum() => a = mid,
                Some(_) => b = mid,
                None => break,
            }
            if b - a < 1e-6 {
                break;
            }
        }
    }
    let at = if d_a == 0.0 { a } else { 0.5 * (a + b) };
    Ok(PowerCrossover {
        crossover_dbm: Some(at),
        small_better_below: Some(d_a < 0.0),
        note: "bisected from a 0.5 dB scan over unsaturated points".into(),
        ..base
    })
}

/// beta* = lambda / N for each element count.
pub fn beta_thresholds(cfg: &ExperimentConfig, counts: &[usize]) -> Result<Vec<BetaThreshold>> {
    let noise = cfg.scenario.noise()?;
    let lambda = db_to_linear(cfg.scenario.noise_figure_db);
    counts
        .iter()
        .map(|&n| {
            let beta_star = lambda / n as f64;
            let ris = RisConfig::uniform(n, beta_star.min(1.0))?;
            Ok(BetaThreshold {
                n_elements: n,
                noise_figure_db: cfg.scenario.noise_figure_db,
                beta_star,
                reachable: beta_star <= 1.0,
                ris_noise_dbw: ris_noise_power(&ris, &noise).dbw(),
                receiver_noise_dbw: linear_to_db(lambda * noise.ktb()),
            })
        })
        .collect()
}

/// The two surfaces compared: the first two series with distinct sizes,
/// or N = 10 and 20 with the first series' scalar coefficient.
fn pair(cfg: &ExperimentConfig) -> Result<(SeriesConfig, SeriesConfig)> {
    let mut sorted = cfg.series.clone();
    sorted.sort_by_key(|s| s.n_elements);
    sorted.dedup_by_key(|s| s.n_elements);
    if sorted.len() >= 2 {
        return Ok((sorted[0].clone(), sorted[1].clone()));
    }
    let beta = match &cfg.series[0].beta {
        BetaSpec::Uniform(b) => *b,
        BetaSpec::PerElement(_) => {
            return Err(Error::config("series", "crossover needs two series with different sizes"));
        }
    };
    let mk = |n| SeriesConfig {
        label: None,
        n_elements: n,
        beta: BetaSpec::Uniform(beta),
    };
    Ok((mk(10), mk(20)))
}

pub fn crossover_report(cfg: &ExperimentConfig, opts: ScanOptions) -> Result<CrossoverReport> {
    cfg.validate()?;
    let (a, b) = pair(cfg)?;
    let blocklength = cfg.scenario.blocklength;
    let small = cfg.scenario.build(a.ris()?, blocklength)?;
    let large = cfg.scenario.build(b.ris()?, blocklength)?;
    let pm = cfg.modes.param_mode;
    let mut power = Vec::new();
    for curve in [CurveKind::Analytical, CurveKind::Asymptotic] {
        for mode in [NoiseMode::WithRisNoise, NoiseMode::NoRisNoise] {
            power.push(power_crossover(&small, &large, curve, mode, pm, opts)?);
        }
    }
    let mut counts: Vec<usize> = cfg.series.iter().map(|s| s.n_elements).collect();
    counts.extend([a.n_elements, b.n_elements]);
    counts.extend(&cfg.fig5.n_elements);
    counts.sort_unstable();
    counts.dedup();
    Ok(CrossoverReport {
        param_mode: pm,
        bracket_dbm: [opts.lo_dbm, opts.hi_dbm],
        power,
        beta: beta_thresholds(cfg, &counts)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::config::Experiment;

    #[test]
    fn beta_star_balances_noise() {
        let cfg = ExperimentConfig::for_experiment(Experiment::Fig1).unwrap();
        let t = beta_thresholds(&cfg, &[5, 10, 20]).unwrap();
        assert!((t[0].beta_star - db_to_linear(3.0) / 5.0).abs() < 1e-15);
        for x in &t {
            assert!((x.ris_noise_dbw - x.receiver_noise_dbw).abs() < 1e-9);
        }
    }

    #[test]
    fn no_noise_has_no_crossover() {
        let cfg = ExperimentConfig::for_experiment(Experiment::Fig1).unwrap();
        let r = crossover_report(&cfg, ScanOptions::default()).unwrap();
        let c = r
            .power
            .iter()
            .find(|c| c.curve == CurveKind::Analytical && c.noise_mode == NoiseMode::NoRisNoise)
            .unwrap();
        assert!(c.crossover_dbm.is_none(), "{c:?}");
        assert!(c.note.contains("no crossover"));
    }
}
