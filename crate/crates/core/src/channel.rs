//! Physical-layer model: Nakagami-m hops, RIS configuration, Johnson-Nyquist
//! noise and the exact instantaneous SINR of one channel realization.
//!
//! The direct transmitter-receiver link is obstructed, so all energy arrives
//! through the RIS. Phases are always co-aligned (perfect CSI), which turns
//! the cascaded gain into a sum of amplitude products.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::linear_to_db;

pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Nakagami-m hop with shape `m` and average power `omega` (path loss included).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NakagamiLink {
    pub m: f64,
    pub omega: f64,
}

impl NakagamiLink {
    pub fn new(m: f64, omega: f64) -> Result<Self> {
        if !(m >= 0.5) || !m.is_finite() {
            return Err(Error::domain(format!("Nakagami shape must be >= 0.5, got {m}")));
        }
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::domain(format!("Nakagami power must be > 0, got {omega}")));
        }
        Ok(Self { m, omega })
    }

    pub fn sampler(&self) -> NakagamiSampler {
        NakagamiSampler {
            power: Gamma::new(self.m, self.omega / self.m).expect("validated link"),
        }
    }
}

/// Draws |h|^2 ~ Gamma(m, omega/m), so E|h|^2 = omega.
#[derive(Debug, Clone, Copy)]
pub struct NakagamiSampler {
    power: Gamma<f64>,
}

impl NakagamiSampler {
    pub fn power<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.power.sample(rng)
    }

    pub fn amplitude<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.power(rng).sqrt()
    }
}

pub fn sample_nakagami_amplitude<R: Rng + ?Sized>(link: &NakagamiLink, rng: &mut R) -> f64 {
    link.sampler().amplitude(rng)
}

/// Distances and path-loss exponents of the two hops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    pub d_bn: f64,
    pub d_nd: f64,
    pub tau_bn: f64,
    pub tau_nd: f64,
    pub varsigma: f64,
}

impl Default for LinkGeometry {
    fn default() -> Self {
        Self {
            d_bn: 125.0,
            d_nd: 3.0,
            tau_bn: 3.1,
            tau_nd: 1.7,
            varsigma: 1.0,
        }
    }
}

impl LinkGeometry {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("d_bn", self.d_bn),
            ("d_nd", self.d_nd),
            ("tau_bn", self.tau_bn),
            ("tau_nd", self.tau_nd),
            ("varsigma", self.varsigma),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(format!("geometry.{name}"), format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Average hop powers Omega_i = varsigma * D_i^{-tau_i} for (bn, nd).
pub fn omega_from_geometry(geom: &LinkGeometry) -> (f64, f64) {
    (
        geom.varsigma * geom.d_bn.powf(-geom.tau_bn),
        geom.varsigma * geom.d_nd.powf(-geom.tau_nd),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhasePolicy {
    /// theta_n co-phases every cascaded path.
    #[default]
    OptimalAlignment,
}

/// Reflection coefficients of the N elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RisConfig {
    beta: Vec<f64>,
    pub phase_policy: PhasePolicy,
}

impl RisConfig {
    pub fn new(n_elements: usize, beta: Vec<f64>) -> Result<Self> {
        if n_elements == 0 {
            return Err(Error::config("ris.n_elements", "must be at least 1"));
        }
        if beta.len() != n_elements {
            return Err(Error::config(
                "ris.beta",
                format!("expected {n_elements} coefficients, got {}", beta.len()),
            ));
        }
        if let Some((i, b)) = beta.iter().enumerate().find(|(_, b)| !(**b >= 0.0 && **b <= 1.0)) {
            return Err(Error::config(format!("ris.beta[{i}]"), format!("must lie in [0, 1], got {b}")));
        }
        Ok(Self {
            beta,
            phase_policy: PhasePolicy::OptimalAlignment,
        })
    }

    pub fn uniform(n_elements: usize, beta: f64) -> Result<Self> {
        Self::new(n_elements, vec![beta; n_elements])
    }

    pub fn from_betas(beta: Vec<f64>) -> Result<Self> {
        Self::new(beta.len(), beta)
    }

    pub fn n_elements(&self) -> usize {
        self.beta.len()
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn is_uniform(&self) -> bool {
        self.beta.iter().all(|b| *b == self.beta[0])
    }

    /// The common coefficient when every element shares one.
    pub fn uniform_beta(&self) -> Option<f64> {
        self.is_uniform().then(|| self.beta[0])
    }

    pub fn sum_beta(&self) -> f64 {
        self.beta.iter().sum()
    }
}

/// How the per-element RIS noise power enters the SINR denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RisNoiseScaling {
    /// sigma_r^2 = kTB per element, as in the received-signal model.
    PerElement,
    /// sigma_r^2 is the aggregate RIS noise kTB * sum(beta) (the quoted
    /// "-124.4 dB for N = 10" figures), used as-is inside psi.
    #[default]
    Aggregate,
}

/// Johnson-Nyquist noise at the receiver and at the RIS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub boltzmann_k: f64,
    pub temperature: f64,
    pub bandwidth_hz: f64,
    /// Receiver noise figure, linear.
    pub noise_figure_lambda: f64,
    /// Receiver noise power in watts.
    pub sigma_d_sq: f64,
    /// Per-element RIS noise power in watts.
    pub sigma_r_sq: f64,
    pub ris_noise_scaling: RisNoiseScaling,
}

impl NoiseModel {
    /// Derived powers: sigma_d^2 = kTB lambda, sigma_r^2 = kTB.
    pub fn new(temperature: f64, bandwidth_hz: f64, noise_figure_lambda: f64) -> Result<Self> {
        if !(temperature > 0.0) || !(bandwidth_hz > 0.0) {
            return Err(Error::config("noise", "temperature and bandwidth must be positive"));
        }
        if !(noise_figure_lambda >= 1.0) {
            return Err(Error::config("noise.noise_figure_db", "noise figure must be >= 0 dB"));
        }
        let ktb = BOLTZMANN * temperature * bandwidth_hz;
        Ok(Self {
            boltzmann_k: BOLTZMANN,
            temperature,
            bandwidth_hz,
            noise_figure_lambda,
            sigma_d_sq: ktb * noise_figure_lambda,
            sigma_r_sq: ktb,
            ris_noise_scaling: RisNoiseScaling::default(),
        })
    }

    pub fn ktb(&self) -> f64 {
        self.boltzmann_k * self.temperature * self.bandwidth_hz
    }

    pub fn with_sigma_d_sq(mut self, watts: f64) -> Self {
        self.sigma_d_sq = watts;
        self
    }

    pub fn with_sigma_r_sq(mut self, watts: f64) -> Self {
        self.sigma_r_sq = watts;
        self
    }

    pub fn with_scaling(mut self, scaling: RisNoiseScaling) -> Self {
        self.ris_noise_scaling = scaling;
        self
    }

    /// The same model with the RIS noise switched off.
    pub fn without_ris_noise(self) -> Self {
        self.with_sigma_r_sq(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_d_sq > 0.0) {
            return Err(Error::config("noise.sigma_d_sq", "receiver noise power must be positive"));
        }
        if !(self.sigma_r_sq >= 0.0) {
            return Err(Error::config("noise.sigma_r_sq", "RIS noise power must be >= 0"));
        }
        if self.sigma_r_sq > self.sigma_d_sq {
            return Err(Error::config(
                "noise.sigma_r_sq",
                "per-element RIS noise exceeds receiver noise (noise figure below 0 dB)",
            ));
        }
        Ok(())
    }

    /// RIS noise power that multiplies the weighted RIS-receiver power in the SINR.
    pub fn effective_sigma_r_sq(&self, ris: &RisConfig) -> f64 {
        match self.ris_noise_scaling {
            RisNoiseScaling::PerElement => self.sigma_r_sq,
            RisNoiseScaling::Aggregate => self.sigma_r_sq * ris.sum_beta(),
        }
    }

    /// sigma_r^2 / sigma_d^2 as it enters the SINR.
    pub fn noise_ratio(&self, ris: &RisConfig) -> f64 {
        self.effective_sigma_r_sq(ris) / self.sigma_d_sq
    }

    /// psi = beta sigma_r^2 / sigma_d^2 for a uniform surface.
    pub fn psi_uniform(&self, ris: &RisConfig) -> Result<f64> {
        let beta = ris
            .uniform_beta()
            .ok_or_else(|| Error::domain("psi is defined for uniform reflection only"))?;
        Ok(beta * self.noise_ratio(ris))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RisNoisePower {
    pub watts: f64,
}

impl RisNoisePower {
    pub fn dbw(&self) -> f64 {
        linear_to_db(self.watts)
    }
}

/// Total RIS-generated thermal noise, sigma_r^2 * sum(beta_n).
pub fn ris_noise_power(ris: &RisConfig, noise: &NoiseModel) -> RisNoisePower {
    RisNoisePower {
        watts: noise.sigma_r_sq * ris.sum_beta(),
    }
}

/// One draw of both hops. Phases are only kept when explicitly sampled.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChannelRealization {
    pub h_bn_amp: Vec<f64>,
    pub h_nd_amp: Vec<f64>,
    pub phases: Option<RealizationPhases>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RealizationPhases {
    pub h_bn_phase: Vec<f64>,
    pub h_nd_phase: Vec<f64>,
}

impl ChannelRealization {
    pub fn new(h_bn_amp: Vec<f64>, h_nd_amp: Vec<f64>) -> Result<Self> {
        if h_bn_amp.len() != h_nd_amp.len() {
            return Err(Error::domain("hop amplitude vectors differ in length"));
        }
        if h_bn_amp.iter().chain(&h_nd_amp).any(|a| !(*a >= 0.0)) {
            return Err(Error::domain("amplitudes must be nonnegative"));
        }
        Ok(Self {
            h_bn_amp,
            h_nd_amp,
            phases: None,
        })
    }

    pub fn n_elements(&self) -> usize {
        self.h_bn_amp.len()
    }

    /// Redraw in place, reusing the buffers.
    pub fn resample<R: Rng + ?Sized>(
        &mut self,
        n: usize,
        bn: &NakagamiSampler,
        nd: &NakagamiSampler,
        rng: &mut R,
        with_phases: bool,
    ) {
        self.h_bn_amp.clear();
        self.h_nd_amp.clear();
        for _ in 0..n {
            self.h_bn_amp.push(bn.amplitude(rng));
            self.h_nd_amp.push(nd.amplitude(rng));
        }
        self.phases = with_phases.then(|| {
            // (0, 2 pi]
            let mut draw = || 2.0 * PI * (1.0 - rng.random::<f64>());
            let h_bn_phase = (0..n).map(|_| draw()).collect();
            let h_nd_phase = (0..n).map(|_| draw()).collect();
            RealizationPhases { h_bn_phase, h_nd_phase }
        });
    }

    pub fn sample<R: Rng + ?Sized>(
        n: usize,
        link_bn: &NakagamiLink,
        link_nd: &NakagamiLink,
        rng: &mut R,
        with_phases: bool,
    ) -> Self {
        let mut r = Self::default();
        r.resample(n, &link_bn.sampler(), &link_nd.sampler(), rng, with_phases);
        r
    }

    fn check_len(&self, ris: &RisConfig) -> Result<()> {
        if self.n_elements() != ris.n_elements() {
            return Err(Error::domain(format!(
                "realization has {} elements, RIS has {}",
                self.n_elements(),
                ris.n_elements()
            )));
        }
        Ok(())
    }
}

/// theta_n = arg h_nd,n - arg h_bn,n, which co-phases conj(h_nd) h_bn e^{j theta}.
pub fn optimal_phases(real: &ChannelRealization) -> Option<Vec<f64>> {
    let p = real.phases.as_ref()?;
    Some(p.h_nd_phase.iter().zip(&p.h_bn_phase).map(|(nd, bn)| nd - bn).collect())
}

/// |sum_n sqrt(beta_n) conj(h_nd,n) h_bn,n e^{j theta_n}|^2 with explicit complex gains.
pub fn cascade_gain_explicit(real: &ChannelRealization, ris: &RisConfig, theta: &[f64]) -> Result<f64> {
    real.check_len(ris)?;
    let p = real
        .phases
        .as_ref()
        .ok_or_else(|| Error::domain("explicit cascade needs sampled phases"))?;
    if theta.len() != real.n_elements() {
        return Err(Error::domain(format!("{} phase shifts for {} elements", theta.len(), real.n_elements())));
    }
    let (mut re, mut im) = (0.0, 0.0);
    for (n, th) in theta.iter().enumerate() {
        let amp = ris.beta[n].sqrt() * real.h_nd_amp[n] * real.h_bn_amp[n];
        let phase = -p.h_nd_phase[n] + p.h_bn_phase[n] + th;
        re += amp * phase.cos();
        im += amp * phase.sin();
    }
    Ok(re * re + im * im)
}

/// Sum_n |h_bn,n| |h_nd,n|.
pub fn amplitude_sum(real: &ChannelRealization) -> f64 {
    real.h_bn_amp.iter().zip(&real.h_nd_amp).map(|(b, d)| b * d).sum()
}

/// Exact SINR for a uniform surface:
/// rho beta (sum |h_nd||h_bn|)^2 / (psi ||h_d||^2 + 1).
pub fn sinr_uniform(real: &ChannelRealization, ris: &RisConfig, noise: &NoiseModel, rho: f64) -> Result<f64> {
    real.check_len(ris)?;
    let beta = ris
        .uniform_beta()
        .ok_or_else(|| Error::domain("sinr_uniform called with non-uniform reflection"))?;
    let psi = noise.psi_uniform(ris)?;
    let s = amplitude_sum(real);
    let nd_power: f64 = real.h_nd_amp.iter().map(|a| a * a).sum();
    Ok(rho * beta * s * s / (psi * nd_power + 1.0))
}

/// Exact SINR for per-element coefficients:
/// rho (sum sqrt(beta_n) |h_nd||h_bn|)^2 / (1 + sigma_r^2/sigma_d^2 sum beta_n |h_nd|^2).
pub fn sinr_nonuniform(real: &ChannelRealization, ris: &RisConfig, noise: &NoiseModel, rho: f64) -> Result<f64> {
    real.check_len(ris)?;
    let (signal, weighted_nd) = weighted_sums(real, ris);
    Ok(rho * signal * signal / (1.0 + noise.noise_ratio(ris) * weighted_nd))
}

/// (sum sqrt(beta) |h_bn||h_nd|, sum beta |h_nd|^2)
fn weighted_sums(real: &ChannelRealization, ris: &RisConfig) -> (f64, f64) {
    let mut signal = 0.0;
    let mut weighted_nd = 0.0;
    for ((b, d), beta) in real.h_bn_amp.iter().zip(&real.h_nd_amp).zip(&ris.beta) {
        signal += beta.sqrt() * b * d;
        weighted_nd += beta * d * d;
    }
    (signal, weighted_nd)
}

/// Exact SINR, dispatching on whether the surface is uniform.
pub fn sinr(real: &ChannelRealization, ris: &RisConfig, noise: &NoiseModel, rho: f64) -> Result<f64> {
    if ris.is_uniform() {
        sinr_uniform(real, ris, noise, rho)
    } else {
        sinr_nonuniform(real, ris, noise, rho)
    }
}

/// One realization's SINR written as rho * gain / (1 + ris_noise), so that a
/// single draw serves every transmit power and both noise settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrTerms {
    pub gain: f64,
    pub ris_noise: f64,
}

impl SinrTerms {
    pub fn sinr(&self, rho: f64) -> f64 {
        rho * self.gain / (1.0 + self.ris_noise)
    }

    pub fn sinr_without_ris_noise(&self, rho: f64) -> f64 {
        rho * self.gain
    }

    /// (gamma_LB, gamma_UB); see [`sinr_bounds`].
    pub fn bounds(&self, rho: f64) -> (f64, f64) {
        let b = rho * self.gain;
        let a = if self.ris_noise > 0.0 { b / self.ris_noise } else { f64::INFINITY };
        let ub = a.min(b);
        (0.5 * ub, ub)
    }
}

/// Uniform surfaces use beta S^2 and psi ||h_d||^2, others the weighted sums.
pub fn sinr_terms(real: &ChannelRealization, ris: &RisConfig, noise: &NoiseModel) -> Result<SinrTerms> {
    real.check_len(ris)?;
    if let Some(beta) = ris.uniform_beta() {
        let s = amplitude_sum(real);
        let nd_power: f64 = real.h_nd_amp.iter().map(|a| a * a).sum();
        return Ok(SinrTerms {
            gain: beta * s * s,
            ris_noise: noise.psi_uniform(ris)? * nd_power,
        });
    }
    let (signal, weighted_nd) = weighted_sums(real, ris);
    Ok(SinrTerms {
        gain: signal * signal,
        ris_noise: noise.noise_ratio(ris) * weighted_nd,
    })
}

/// Min-based bounds (gamma_LB, gamma_UB) with gamma_LB <= gamma <= gamma_UB.
///
/// With A = signal / RIS-noise term and B = signal / receiver-noise term,
/// gamma = 1 / (1/A + 1/B), gamma_UB = min(A, B), gamma_LB = min(A, B) / 2.
pub fn sinr_bounds(real: &ChannelRealization, ris: &RisConfig, noise: &NoiseModel, rho: f64) -> Result<(f64, f64)> {
    Ok(sinr_terms(real, ris, noise)?.bounds(rho))
}
