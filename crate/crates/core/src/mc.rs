//! Monte Carlo ground truth for the normal-approximation BLER.
//!
//! Trial `t` draws from ChaCha8 stream `t` of the run seed, so results
//! depend on (seed, trials) only. Trials are grouped into fixed chunks whose
//! statistics are merged pairwise in index order, which keeps the estimate
//! bit-identical for any worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{cascade_gain_explicit, optimal_phases, sinr_terms, ChannelRealization, SinrTerms};
use crate::error::{Error, Result};
use crate::fbl::{goodput, normal_approx_bler, FblParams, NoiseMode};
use crate::scenario::Scenario;

const CHUNK: u64 = 2048;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRunSpec {
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
    pub scenario: Scenario,
    pub tx_power_dbm: f64,
    pub noise_mode: NoiseMode,
    pub training_uses_varrho: u64,
    /// Draw explicit phases, co-phase them and check the amplitude-sum
    /// reduction and the bound sandwich on every trial.
    pub debug_checks: bool,
}

impl McRunSpec {
    pub fn new(scenario: Scenario, tx_power_dbm: f64, trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            workers: 1,
            scenario,
            tx_power_dbm,
            noise_mode: NoiseMode::WithRisNoise,
            training_uses_varrho: 0,
            debug_checks: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("mc.trials", "must be positive"));
        }
        if self.workers == 0 {
            return Err(Error::config("mc.workers", "must be positive"));
        }
        self.scenario.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Running count, mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(a: Self, b: Self) -> Self {
        if a.n == 0.0 {
            return b;
        }
        if b.n == 0.0 {
            return a;
        }
        let n = a.n + b.n;
        let d = b.mean - a.mean;
        Self {
            n,
            mean: a.mean + d * b.n / n,
            m2: a.m2 + b.m2 + d * d * a.n * b.n / n,
        }
    }

    fn estimate(&self, seed: u64) -> McEstimate {
        let var = if self.n > 1.0 { self.m2 / (self.n - 1.0) } else { 0.0 };
        McEstimate {
            mean: self.mean,
            std_error: (var / self.n).sqrt(),
            trials: self.n as u64,
            seed,
        }
    }
}

fn merge_pairwise(mut v: Vec<Vec<Moments>>) -> Vec<Moments> {
    while v.len() > 1 {
        v = v
            .chunks(2)
            .map(|pair| match pair {
                [a, b] => a.iter().zip(b).map(|(x, y)| Moments::merge(*x, *y)).collect(),
                [a] => a.clone(),
                _ => unreachable!(),
            })
            .collect();
    }
    v.pop().unwrap_or_default()
}

/// Runs `per_trial` on the SINR terms of every trial; it writes one value per
/// output slot.
fn run_trials<F>(spec: &McRunSpec, n_out: usize, per_trial: F) -> Result<Vec<McEstimate>>
where
    F: Fn(&SinrTerms, &mut [f64]) + Sync,
{
    spec.validate()?;
    let scn = &spec.scenario;
    let n = scn.ris.n_elements();
    let bn = scn.link_bn.sampler();
    let nd = scn.link_nd.sampler();
    let base = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_chunks = spec.trials.div_ceil(CHUNK);

    let chunk = |c: u64| -> Result<Vec<Moments>> {
        let mut acc = vec![Moments::default(); n_out];
        let mut out = vec![0.0; n_out];
        let mut real = ChannelRealization::default();
        let end = ((c + 1) * CHUNK).min(spec.trials);
        for t in c * CHUNK..end {
            let mut rng = base.clone();
            rng.set_stream(t);
            real.resample(n, &bn, &nd, &mut rng, spec.debug_checks);
            let terms = sinr_terms(&real, &scn.ris, &scn.noise)?;
            if spec.debug_checks {
                check_trial(&real, scn, &terms, spec.tx_power_dbm)?;
            }
            per_trial(&terms, &mut out);
            for (a, x) in acc.iter_mut().zip(&out) {
                a.push(*x);
            }
        }
        Ok(acc)
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::config("mc.workers", e.to_string()))?;
    let chunks: Vec<Vec<Moments>> = pool.install(|| (0..n_chunks).into_par_iter().map(chunk).collect::<Result<_>>())?;
    Ok(merge_pairwise(chunks).iter().map(|m| m.estimate(spec.seed)).collect())
}

fn check_trial(real: &ChannelRealization, scn: &Scenario, terms: &SinrTerms, tx_power_dbm: f64) -> Result<()> {
    let theta = optimal_phases(real).ok_or_else(|| Error::domain("debug trial without phases"))?;
    let explicit = cascade_gain_explicit(real, &scn.ris, &theta)?;
    let sum_sq = {
        let s: f64 = (0..real.n_elements())
            .map(|k| scn.ris.beta()[k].sqrt() * real.h_bn_amp[k] * real.h_nd_amp[k])
            .sum();
        s * s
    };
    if (explicit - sum_sq).abs() > 1e-9 * sum_sq.max(f64::MIN_POSITIVE) {
        return Err(Error::domain(format!("co-phased gain {explicit} differs from amplitude sum {sum_sq}")));
    }
    let rho = scn.rho(tx_power_dbm);
    let g = terms.sinr(rho);
    let (lb, ub) = terms.bounds(rho);
    if !(lb <= g && g <= ub) {
        return Err(Error::domain(format!("bound sandwich violated: {lb} <= {g} <= {ub}")));
    }
    Ok(())
}

fn sinr_for(terms: &SinrTerms, rho: f64, mode: NoiseMode) -> f64 {
    match mode {
        NoiseMode::WithRisNoise => terms.sinr(rho),
        NoiseMode::NoRisNoise => terms.sinr_without_ris_noise(rho),
    }
}

/// Mean of the normal-approximation error probability over channel draws.
pub fn estimate_bler(spec: &McRunSpec) -> Result<McEstimate> {
    let rho = spec.scenario.rho(spec.tx_power_dbm);
    let fbl = spec.scenario.fbl;
    let mode = spec.noise_mode;
    let est = run_trials(spec, 1, |t, out| out[0] = normal_approx_bler(sinr_for(t, rho, mode), &fbl))?;
    Ok(est[0])
}

/// Goodput from the estimated BLER, with the standard error scaled alike.
pub fn estimate_goodput(spec: &McRunSpec) -> Result<McEstimate> {
    let bler = estimate_bler(spec)?;
    Ok(bler_to_goodput(&spec.scenario.fbl, spec.training_uses_varrho, &bler))
}

fn bler_to_goodput(fbl: &FblParams, varrho: u64, bler: &McEstimate) -> McEstimate {
    let full = goodput(fbl, varrho, 0.0).expect("zero BLER is valid").bits;
    McEstimate {
        mean: full * (1.0 - bler.mean),
        std_error: full * bler.std_error,
        ..*bler
    }
}

/// A point of a common-random-numbers sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub tx_power_dbm: f64,
    pub fbl: FblParams,
}

/// BLER for both noise settings at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridEstimate {
    pub with_ris_noise: McEstimate,
    pub without_ris_noise: McEstimate,
}

impl GridEstimate {
    pub fn get(&self, mode: NoiseMode) -> &McEstimate {
        match mode {
            NoiseMode::WithRisNoise => &self.with_ris_noise,
            NoiseMode::NoRisNoise => &self.without_ris_noise,
        }
    }

    pub fn goodput(&self, fbl: &FblParams, varrho: u64, mode: NoiseMode) -> McEstimate {
        bler_to_goodput(fbl, varrho, self.get(mode))
    }
}

/// BLER at every grid point and both noise settings from one set of channel
/// draws. `spec.tx_power_dbm` and `spec.noise_mode` are ignored.
pub fn estimate_bler_grid(spec: &McRunSpec, grid: &[GridPoint]) -> Result<Vec<GridEstimate>> {
    let rhos: Vec<f64> = grid.iter().map(|g| spec.scenario.rho(g.tx_power_dbm)).collect();
    let est = run_trials(spec, 2 * grid.len(), |t, out| {
        for (k, (g, rho)) in grid.iter().zip(&rhos).enumerate() {
            out[2 * k] = normal_approx_bler(t.sinr(*rho), &g.fbl);
            out[2 * k + 1] = normal_approx_bler(t.sinr_without_ris_noise(*rho), &g.fbl);
        }
    })?;
    Ok(est
        .chunks(2)
        .map(|p| GridEstimate {
            with_ris_noise: p[0],
            without_ris_noise: p[1],
        })
        .collect())
}

/// Empirical CDFs of the SINR and of its two bound variates.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrCdf {
    pub grid: Vec<f64>,
    pub sinr: Vec<McEstimate>,
    /// CDF of gamma_LB, pointwise >= the SINR CDF.
    pub lower_bound: Vec<McEstimate>,
    /// CDF of gamma_UB, pointwise <= the SINR CDF.
    pub upper_bound: Vec<McEstimate>,
}

pub fn empirical_sinr_cdf(spec: &McRunSpec, grid: &[f64]) -> Result<SinrCdf> {
    if grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::domain("SINR grid must be sorted ascending"));
    }
    let rho = spec.scenario.rho(spec.tx_power_dbm);
    let mode = spec.noise_mode;
    let k = grid.len();
    let est = run_trials(spec, 3 * k, |t, out| {
        let g = sinr_for(t, rho, mode);
        let (lb, ub) = match mode {
            NoiseMode::WithRisNoise => t.bounds(rho),
            NoiseMode::NoRisNoise => (0.5 * g, g),
        };
        for (i, y) in grid.iter().enumerate() {
            out[i] = f64::from(u8::from(g <= *y));
            out[k + i] = f64::from(u8::from(lb <= *y));
            out[2 * k + i] = f64::from(u8::from(ub <= *y));
        }
    })?;
    Ok(SinrCdf {
        grid: grid.to_vec(),
        sinr: est[..k].to_vec(),
        lower_bound: est[k..2 * k].to_vec(),
        upper_bound: est[2 * k..].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{NakagamiLink, RisConfig};
    use crate::fbl::capacity;

    fn spec(p: f64, trials: u64) -> McRunSpec {
        McRunSpec::new(
            Scenario::table1(RisConfig::uniform(10, 0.9).unwrap()).unwrap(),
            p,
            trials,
            42,
        )
    }

    #[test]
    fn no_signal_limit() {
        let e = estimate_bler(&spec(-200.0, 5000)).unwrap();
        assert!((1.0 - e.mean) <= 3.0 * e.std_error + 1e-12, "{e:?}");
    }

    #[test]
    fn worker_count_does_not_change_bits() {
        let mut s = spec(-42.0, 10_000);
        let a = estimate_bler(&s).unwrap();
        s.workers = 4;
        let b = estimate_bler(&s).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }

    #[test]
    fn noise_ordering_on_common_draws() {
        let s = spec(0.0, 3000);
        let grid: Vec<GridPoint> = (0..7)
            .map(|k| GridPoint {
                tx_power_dbm: -50.0 + 2.0 * k as f64,
                fbl: s.scenario.fbl,
            })
            .collect();
        for g in estimate_bler_grid(&s, &grid).unwrap() {
            assert!(g.with_ris_noise.mean >= g.without_ris_noise.mean);
        }
    }

    #[test]
    fn grid_matches_single_point() {
        let s = spec(-44.0, 4096);
        let single = estimate_bler(&s).unwrap();
        let grid = estimate_bler_grid(
            &s,
            &[GridPoint {
                tx_power_dbm: -44.0,
                fbl: s.scenario.fbl,
            }],
        )
        .unwrap();
        assert_eq!(single.mean, grid[0].with_ris_noise.mean);
    }

    #[test]
    fn debug_checks_pass() {
        let mut s = spec(-40.0, 500);
        s.scenario.ris = RisConfig::from_betas(vec![0.7, 0.7, 0.7, 0.7, 0.9, 0.9, 0.9, 0.9, 0.6, 0.6]).unwrap();
        s.debug_checks = true;
        estimate_bler(&s).unwrap();
    }

    #[test]
    fn deterministic_channel_matches_direct_evaluation() {
        let mut s = spec(-45.0, 2000);
        let m = 1e5;
        s.scenario.link_bn = NakagamiLink::new(m, s.scenario.link_bn.omega).unwrap();
        s.scenario.link_nd = NakagamiLink::new(m, s.scenario.link_nd.omega).unwrap();
        let e = estimate_bler(&s).unwrap();
        let scn = &s.scenario;
        let n = 10.0;
        let amp = (scn.link_bn.omega * scn.link_nd.omega).sqrt();
        let psi = scn.noise.psi_uniform(&scn.ris).unwrap();
        let g = scn.rho(-45.0) * 0.9 * (n * amp).powi(2) / (psi * n * scn.link_nd.omega + 1.0);
        let direct = normal_approx_bler(g, &scn.fbl);
        assert!(capacity(g) > 0.0);
        assert!((e.mean - direct).abs() <= 3.0 * e.std_error + 1e-3 * direct, "{} vs {direct}", e.mean);
    }

    #[test]
    fn sandwich_cdfs() {
        let s = spec(-44.0, 4000);
        let grid: Vec<f64> = (0..20).map(|k| 0.05 * k as f64).chain([1e9]).collect();
        let cdf = empirical_sinr_cdf(&s, &grid).unwrap();
        for i in 0..grid.len() {
            assert!(cdf.upper_bound[i].mean <= cdf.sinr[i].mean);
            assert!(cdf.sinr[i].mean <= cdf.lower_bound[i].mean);
        }
        assert_eq!(cdf.sinr.last().unwrap().mean, 1.0);
        assert!(empirical_sinr_cdf(&s, &[1.0, 0.5]).is_err());
    }

    #[test]
    fn goodput_scaling() {
        let s = spec(-30.0, 2000);
        let g = estimate_goodput(&s).unwrap();
        let b = estimate_bler(&s).unwrap();
        let full = (1.0 - 1.0 / 500.0) * 0.4;
        assert!((g.mean - full * (1.0 - b.mean)).abs() < 1e-15);
    }
}
