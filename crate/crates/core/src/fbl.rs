//! Finite-blocklength BLER: the normal approximation, its piecewise-linear
//! surrogate, the closed forms built on the Gamma fits, their high-SNR
//! asymptotes and the resulting goodput.
//!
//! Every closed form has the shape
//! `phi = varpi sqrt(Xi) (eps2 - eps1) [1 - (1 - u1)(1 - u2)]`, where `u2` is
//! the probability that the signal term alone falls below the midpoint
//! threshold and `u1` the same for the signal-to-RIS-noise term.

use std::f64::consts::{LN_2, LOG2_E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::momentfit::{
    fit_cascade_nonuniform, fit_cascade_uniform, fit_rispower_nonuniform, integer_series_order, GammaFit, ParamMode,
};
use crate::scenario::Scenario;
use crate::specfun::{ln_gamma, ln_meijer_g_2112, regularized_lower_gamma, MeijerG2112Args};

const LN_SQRT_PI: f64 = 0.572_364_942_924_700_1;
/// Terms this many nats below the running sum end the tail series.
const TAIL_STOP_NATS: f64 = 42.0;
const TAIL_MAX_TERMS: usize = 20_000;
const HEAD_STOP_NATS: f64 = 45.0;

/// Blocklength, payload and the linearization constants derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FblSpec", into = "FblSpec")]
pub struct FblParams {
    pub blocklength_xi: u64,
    pub payload_bits_theta: f64,
    pub rate_r: f64,
    pub lambda_cap: f64,
    pub varpi: f64,
    pub eps1: f64,
    pub eps2: f64,
}

#[derive(Serialize, Deserialize)]
struct FblSpec {
    blocklength: u64,
    payload_bits: f64,
}

impl TryFrom<FblSpec> for FblParams {
    type Error = Error;

    fn try_from(s: FblSpec) -> Result<Self> {
        Self::new(s.blocklength, s.payload_bits)
    }
}

impl From<FblParams> for FblSpec {
    fn from(p: FblParams) -> Self {
        Self {
            blocklength: p.blocklength_xi,
            payload_bits: p.payload_bits_theta,
        }
    }
}

impl FblParams {
    pub fn new(blocklength_xi: u64, payload_bits_theta: f64) -> Result<Self> {
        if blocklength_xi <= 100 {
            return Err(Error::config(
                "fbl.blocklength",
                format!("normal approximation needs more than 100 channel uses, got {blocklength_xi}"),
            ));
        }
        if !(payload_bits_theta > 0.0) || !payload_bits_theta.is_finite() {
            return Err(Error::config("fbl.payload_bits", "must be positive"));
        }
        let xi = blocklength_xi as f64;
        let rate_r = payload_bits_theta / xi;
        let lambda_cap = rate_r.exp2() - 1.0;
        let varpi = 1.0 / (2.0 * PI * ((2.0 * rate_r).exp2() - 1.0).sqrt());
        let half_width = 1.0 / (2.0 * varpi * xi.sqrt());
        let p = Self {
            blocklength_xi,
            payload_bits_theta,
            rate_r,
            lambda_cap,
            varpi,
            eps1: lambda_cap - half_width,
            eps2: lambda_cap + half_width,
        };
        if !(p.eps1 > 0.0) {
            return Err(Error::config(
                "fbl",
                format!(
                    "lower linearization knot eps1 = {:.4e} is not positive for Xi = {blocklength_xi}, theta = {payload_bits_theta}",
                    p.eps1
                ),
            ));
        }
        Ok(p)
    }

    pub fn xi(&self) -> f64 {
        self.blocklength_xi as f64
    }

    /// (eps1 + eps2) / 2, the SINR at which the CDF is sampled.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.eps1 + self.eps2)
    }

    /// varpi sqrt(Xi) (eps2 - eps1), equal to one up to rounding.
    pub fn prefactor(&self) -> f64 {
        self.varpi * self.xi().sqrt() * (self.eps2 - self.eps1)
    }
}

/// Shannon capacity log2(1 + gamma).
pub fn capacity(gamma: f64) -> f64 {
    gamma.ln_1p() * LOG2_E
}

/// Channel dispersion (1 - (1 + gamma)^-2) (log2 e)^2.
pub fn dispersion(gamma: f64) -> f64 {
    let inv = 1.0 / (1.0 + gamma);
    (1.0 - inv * inv) * LOG2_E * LOG2_E
}

/// Normal-approximation error probability for one SINR value.
pub fn normal_approx_bler(gamma: f64, fbl: &FblParams) -> f64 {
    let v = dispersion(gamma);
    if v <= 0.0 {
        return 1.0;
    }
    crate::specfun::gaussian_q((capacity(gamma) - fbl.rate_r) / (v / fbl.xi()).sqrt())
}

/// Piecewise-linear surrogate of the Q-function term.
pub fn linearized_q(gamma: f64, fbl: &FblParams) -> f64 {
    if gamma <= fbl.eps1 {
        1.0
    } else if gamma >= fbl.eps2 {
        0.0
    } else {
        0.5 - fbl.varpi * fbl.xi().sqrt() * (gamma - fbl.lambda_cap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    #[default]
    WithRisNoise,
    NoRisNoise,
}

impl NoiseMode {
    pub fn label(&self) -> &'static str {
        match self {
            Self::WithRisNoise => "noise",
            Self::NoRisNoise => "nonoise",
        }
    }
}

/// The fitted distributions a closed form needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitSet {
    /// Identical coefficients; the RIS-receiver power is exactly Gamma(m_nd N, Omega_nd / m_nd).
    Uniform {
        cascade: GammaFit,
        beta: f64,
        m_nd: f64,
        omega_nd: f64,
        n_elements: usize,
    },
    Nonuniform {
        cascade: GammaFit,
        rispower: GammaFit,
        m_nd: f64,
        omega_nd: f64,
        n_elements: usize,
    },
}

impl FitSet {
    pub fn cascade(&self) -> &GammaFit {
        match self {
            Self::Uniform { cascade, .. } | Self::Nonuniform { cascade, .. } => cascade,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormInputs {
    pub rho: f64,
    /// beta sigma_r^2 / sigma_d^2 for a uniform surface. For a non-uniform one,
    /// the coefficient multiplying sum beta_n |h_nd|^2: sigma_r^2 / sigma_d^2 in
    /// derived mode, (sigma_r^2 / sigma_d^2) sum beta_n in literal mode.
    pub psi: f64,
    pub fits: FitSet,
    pub fbl: FblParams,
    pub noise_mode: NoiseMode,
    pub param_mode: ParamMode,
}

impl ClosedFormInputs {
    /// Uniform inputs when every coefficient agrees, non-uniform otherwise.
    pub fn new(scn: &Scenario, tx_power_dbm: f64, noise_mode: NoiseMode, param_mode: ParamMode) -> Result<Self> {
        if scn.ris.is_uniform() {
            Self::uniform(scn, tx_power_dbm, noise_mode, param_mode)
        } else {
            Self::nonuniform(scn, tx_power_dbm, noise_mode, param_mode)
        }
    }

    pub fn uniform(scn: &Scenario, tx_power_dbm: f64, noise_mode: NoiseMode, param_mode: ParamMode) -> Result<Self> {
        let cascade = fit_cascade_uniform(&scn.link_bn, &scn.link_nd, scn.ris.n_elements())?;
        let psi = scn.noise.psi_uniform(&scn.ris)?;
        Self::checked(Self {
            rho: scn.rho(tx_power_dbm),
            psi,
            fits: FitSet::Uniform {
                cascade,
                beta: scn.ris.beta()[0],
                m_nd: scn.link_nd.m,
                omega_nd: scn.link_nd.omega,
                n_elements: scn.ris.n_elements(),
            },
            fbl: scn.fbl,
            noise_mode,
            param_mode,
        })
    }

    /// Non-uniform inputs; also valid for a constant coefficient vector.
    pub fn nonuniform(scn: &Scenario, tx_power_dbm: f64, noise_mode: NoiseMode, param_mode: ParamMode) -> Result<Self> {
        let cascade = fit_cascade_nonuniform(&scn.link_bn, &scn.link_nd, &scn.ris, param_mode)?;
        let rispower = fit_rispower_nonuniform(&scn.link_nd, &scn.ris)?;
        let ratio = scn.noise.noise_ratio(&scn.ris);
        let psi = match param_mode {
            ParamMode::Derived => ratio,
            ParamMode::PaperLiteral => ratio * scn.ris.sum_beta(),
        };
        Self::checked(Self {
            rho: scn.rho(tx_power_dbm),
            psi,
            fits: FitSet::Nonuniform {
                cascade,
                rispower,
                m_nd: scn.link_nd.m,
                omega_nd: scn.link_nd.omega,
                n_elements: scn.ris.n_elements(),
            },
            fbl: scn.fbl,
            noise_mode,
            param_mode,
        })
    }

    fn checked(self) -> Result<Self> {
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(Error::domain(format!("rho must be positive and finite, got {}", self.rho)));
        }
        if !(self.psi >= 0.0) {
            return Err(Error::domain(format!("psi must be >= 0, got {}", self.psi)));
        }
        Ok(self)
    }
}

/// A closed-form BLER with its two bound probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlerEval {
    /// Clamped to [0, 1].
    pub bler: f64,
    pub pre_clamp: f64,
    pub upsilon1: f64,
    pub upsilon2: f64,
}

fn combine(fbl: &FblParams, u1: f64, u2: f64) -> BlerEval {
    // 1 - (1 - u1)(1 - u2) without losing small values
    let pre_clamp = fbl.prefactor() * (u1 + u2 - u1 * u2);
    let bler = pre_clamp.clamp(0.0, 1.0);
    if bler != pre_clamp {
        log::debug!("closed-form BLER {pre_clamp:e} clamped to {bler}");
    }
    BlerEval {
        bler,
        pre_clamp,
        upsilon1: u1,
        upsilon2: u2,
    }
}

/// E_Z[P(n, c sqrt(Z))] for Z ~ Gamma(z_shape, z_scale), via its Meijer-G series.
#[derive(Debug, Clone, Copy)]
struct NoiseSeries {
    n_terms: usize,
    z_shape: f64,
    ln_z_scale: f64,
    ln_c: f64,
    /// Replaces the (i/2) ln z_scale factor by a fixed value (literal uniform form).
    fixed_ln_prefactor: Option<f64>,
}

impl NoiseSeries {
    fn ln_term(&self, i: usize) -> Result<f64> {
        let fi = i as f64;
        let x = (2.0 * self.ln_c + self.ln_z_scale - 4f64.ln()).exp();
        let a1 = 1.0 - self.z_shape - 0.5 * fi;
        let args = MeijerG2112Args::with_limits(x, a1, self.max_abs_a1().max(1e4), 1e6)?;
        let g = ln_meijer_g_2112(&args)?.ln_value;
        let scale_part = self.fixed_ln_prefactor.unwrap_or(0.5 * fi * self.ln_z_scale);
        Ok(-ln_gamma(fi + 1.0)? - LN_SQRT_PI + scale_part + fi * self.ln_c + g - ln_gamma(self.z_shape)?)
    }

    /// Largest |a1| the head and tail can reach.
    fn max_abs_a1(&self) -> f64 {
        self.z_shape + 0.5 * (self.n_terms + TAIL_MAX_TERMS) as f64
    }

    fn evaluate(&self) -> Result<f64> {
        if self.ln_c == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        // Terms are a Poisson mixture over a unimodal rate, hence unimodal:
        // past the mode, a negligible term ends the head.
        let mut head = 0.0;
        let mut prev = f64::NEG_INFINITY;
        for i in 0..self.n_terms {
            let t = self.ln_term(i)?;
            head += t.exp();
            if t < prev && head > 0.0 && t < head.ln() - HEAD_STOP_NATS {
                break;
            }
            prev = t;
        }
        // The full series sums to one, so the tail keeps relative precision
        // when the head is close to one.
        if self.fixed_ln_prefactor.is_none() && head > 0.5 {
            return self.tail();
        }
        Ok((1.0 - head).max(0.0))
    }

    fn tail(&self) -> Result<f64> {
        let mut ln_ref = f64::NEG_INFINITY;
        let mut scaled = 0.0;
        let mut prev = f64::INFINITY;
        for i in self.n_terms..self.n_terms + TAIL_MAX_TERMS {
            let t = self.ln_term(i)?;
            if t > ln_ref {
                scaled = scaled * (ln_ref - t).exp() + 1.0;
                ln_ref = t;
            } else {
                scaled += (t - ln_ref).exp();
            }
            let acc = ln_ref + scaled.ln();
            if t < prev && t < acc - TAIL_STOP_NATS {
                return Ok(acc.exp().min(1.0));
            }
            prev = t;
        }
        Err(Error::NonConvergence {
            what: "noise-term tail series",
            iterations: TAIL_MAX_TERMS,
        })
    }
}

/// Closed-form BLER for a uniform surface.
pub fn bler_uniform(inputs: &ClosedFormInputs) -> Result<BlerEval> {
    let FitSet::Uniform {
        cascade,
        beta,
        m_nd,
        omega_nd,
        n_elements,
    } = inputs.fits
    else {
        return Err(Error::domain("bler_uniform needs uniform fits"));
    };
    let fbl = &inputs.fbl;
    let lam = fbl.midpoint();
    let rho = inputs.rho;
    if beta == 0.0 {
        return Ok(combine(fbl, 0.0, 1.0));
    }
    let u2 = regularized_lower_gamma(cascade.shape, (lam / (rho * beta)).sqrt() / cascade.scale)?;
    let u1 = match inputs.noise_mode {
        NoiseMode::NoRisNoise => 0.0,
        NoiseMode::WithRisNoise => {
            let z_shape = m_nd * n_elements as f64;
            let ln_k = (m_nd / omega_nd).ln();
            NoiseSeries {
                n_terms: integer_series_order(cascade.shape),
                z_shape,
                ln_z_scale: -ln_k,
                ln_c: -cascade.scale.ln() + 0.5 * (lam * inputs.psi / (rho * beta)).ln(),
                fixed_ln_prefactor: match inputs.param_mode {
                    ParamMode::Derived => None,
                    ParamMode::PaperLiteral => Some(-z_shape * ln_k),
                },
            }
            .evaluate()?
        }
    };
    Ok(combine(fbl, u1, u2))
}

/// Closed-form BLER for per-element coefficients.
pub fn bler_nonuniform(inputs: &ClosedFormInputs) -> Result<BlerEval> {
    let FitSet::Nonuniform { cascade, rispower, .. } = inputs.fits else {
        return Err(Error::domain("bler_nonuniform needs non-uniform fits"));
    };
    let fbl = &inputs.fbl;
    let lam = fbl.midpoint();
    let rho = inputs.rho;
    let u2 = regularized_lower_gamma(cascade.shape, (lam / rho).sqrt() / cascade.scale)?;
    let u1 = match inputs.noise_mode {
        NoiseMode::NoRisNoise => 0.0,
        NoiseMode::WithRisNoise => NoiseSeries {
            n_terms: integer_series_order(cascade.shape),
            z_shape: rispower.shape,
            ln_z_scale: rispower.scale.ln(),
            ln_c: -cascade.scale.ln() + 0.5 * (lam * inputs.psi / rho).ln(),
            fixed_ln_prefactor: None,
        }
        .evaluate()?,
    };
    Ok(combine(fbl, u1, u2))
}

/// Dispatches on the fit set.
pub fn bler_closed_form(inputs: &ClosedFormInputs) -> Result<BlerEval> {
    match inputs.fits {
        FitSet::Uniform { .. } => bler_uniform(inputs),
        FitSet::Nonuniform { .. } => bler_nonuniform(inputs),
    }
}

/// High-SNR BLER. The bound probabilities are kept as logarithms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticEval {
    /// Each bound probability capped at one before combining, then clamped.
    pub bler: f64,
    /// ln of the combined bound term (before the prefactor), usable below 1e-308.
    pub ln_bound: f64,
    pub ln_upsilon1: f64,
    pub ln_upsilon2: f64,
}

fn combine_asymptotic(fbl: &FblParams, ln_u1: f64, ln_u2: f64) -> AsymptoticEval {
    let (l1, l2) = (ln_u1.min(0.0), ln_u2.min(0.0));
    // ln(u1 + u2 - u1 u2) = ln(1 - (1 - u1)(1 - u2))
    let ln_one_minus = |l: f64| (-l.exp()).ln_1p();
    let ln_bound = if l1 == f64::NEG_INFINITY {
        l2
    } else if l2 == f64::NEG_INFINITY {
        l1
    } else if l1.max(l2) < -30.0 {
        let hi = l1.max(l2);
        let lo = l1.min(l2);
        // u1 + u2 - u1 u2 with u1 u2 below double precision relative to the sum
        hi + (lo - hi).exp().ln_1p()
    } else {
        let survive = ln_one_minus(l1) + ln_one_minus(l2);
        (-survive.exp_m1()).ln()
    };
    let pre = fbl.prefactor() * ln_bound.exp();
    AsymptoticEval {
        bler: pre.clamp(0.0, 1.0),
        ln_bound,
        ln_upsilon1: ln_u1,
        ln_upsilon2: ln_u2,
    }
}

/// ln of Gamma(a + d/2) / (d Gamma(d) Gamma(a)) * scale^{d/2} * c^d.
fn ln_moment_power(a: f64, d: f64, ln_scale: f64, ln_c: f64) -> Result<f64> {
    Ok(ln_gamma(a + 0.5 * d)? - d.ln() - ln_gamma(d)? - ln_gamma(a)? + 0.5 * d * ln_scale + d * ln_c)
}

/// High-SNR BLER for a uniform surface; slope -shape/2 in log-log.
pub fn bler_asymptotic_uniform(inputs: &ClosedFormInputs) -> Result<AsymptoticEval> {
    let FitSet::Uniform {
        cascade,
        beta,
        m_nd,
        omega_nd,
        n_elements,
    } = inputs.fits
    else {
        return Err(Error::domain("bler_asymptotic_uniform needs uniform fits"));
    };
    let fbl = &inputs.fbl;
    let d = cascade.shape;
    let base = fbl.midpoint() / (inputs.rho * beta);
    let ln_zeta = cascade.scale.ln();
    let ln_u1 = match inputs.noise_mode {
        NoiseMode::NoRisNoise => f64::NEG_INFINITY,
        NoiseMode::WithRisNoise => {
            let ln_c = -ln_zeta + 0.5 * (base * inputs.psi).ln();
            ln_moment_power(m_nd * n_elements as f64, d, (omega_nd / m_nd).ln(), ln_c)?
        }
    };
    let ln_c2 = match inputs.param_mode {
        ParamMode::Derived => -ln_zeta + 0.5 * base.ln(),
        ParamMode::PaperLiteral => -ln_zeta + 0.5 * (base * inputs.psi).ln(),
    };
    let ln_u2 = -d.ln() - ln_gamma(d)? + d * ln_c2;
    Ok(combine_asymptotic(fbl, ln_u1, ln_u2))
}

/// High-SNR BLER for per-element coefficients; slope -shape/2 in log-log.
pub fn bler_asymptotic_nonuniform(inputs: &ClosedFormInputs) -> Result<AsymptoticEval> {
    let FitSet::Nonuniform {
        cascade,
        rispower,
        m_nd,
        omega_nd,
        n_elements,
    } = inputs.fits
    else {
        return Err(Error::domain("bler_asymptotic_nonuniform needs non-uniform fits"));
    };
    let fbl = &inputs.fbl;
    let d = cascade.shape;
    let base = fbl.midpoint() / inputs.rho;
    let ln_zeta = cascade.scale.ln();
    let ln_u1 = match inputs.noise_mode {
        NoiseMode::NoRisNoise => f64::NEG_INFINITY,
        NoiseMode::WithRisNoise => {
            let ln_c = -ln_zeta + 0.5 * (base * inputs.psi).ln();
            match inputs.param_mode {
                ParamMode::Derived => ln_moment_power(rispower.shape, d, rispower.scale.ln(), ln_c)?,
                ParamMode::PaperLiteral => {
                    ln_moment_power(m_nd * n_elements as f64, d, (omega_nd / m_nd).ln(), ln_c)?
                }
            }
        }
    };
    let ln_c2 = match inputs.param_mode {
        ParamMode::Derived => -ln_zeta + 0.5 * base.ln(),
        ParamMode::PaperLiteral => -ln_zeta + 0.5 * (base * inputs.psi).ln(),
    };
    let ln_u2 = -d.ln() - ln_gamma(d)? + d * ln_c2;
    Ok(combine_asymptotic(fbl, ln_u1, ln_u2))
}

pub fn bler_asymptotic(inputs: &ClosedFormInputs) -> Result<AsymptoticEval> {
    match inputs.fits {
        FitSet::Uniform { .. } => bler_asymptotic_uniform(inputs),
        FitSet::Nonuniform { .. } => bler_asymptotic_nonuniform(inputs),
    }
}

/// High-SNR diversity order, shape / 2.
pub fn diversity_order(fit: &GammaFit) -> f64 {
    fit.shape / 2.0
}

/// Goodput in bits and nats per channel use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Goodput {
    pub bits: f64,
}

impl Goodput {
    pub fn nats(&self) -> f64 {
        self.bits * LN_2
    }
}

/// (1 - 1/chi) r (1 - bler) with chi = Xi + varrho.
pub fn goodput(fbl: &FblParams, training_uses_varrho: u64, bler: f64) -> Result<Goodput> {
    if !(0.0..=1.0).contains(&bler) {
        return Err(Error::domain(format!("BLER must lie in [0, 1], got {bler}")));
    }
    let chi = (fbl.blocklength_xi + training_uses_varrho) as f64;
    Ok(Goodput {
        bits: (1.0 - 1.0 / chi) * fbl.rate_r * (1.0 - bler),
    })
}

/// Which curve a power search runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    Analytical,
    Asymptotic,
}

/// Transmit power (dBm) at which a decreasing BLER curve hits `target`.
///
/// Bisection on [lo, hi] until the BLER is within 1e-3 relative of the target
/// or the bracket is narrower than 0.01 dB.
pub fn required_power_for_curve<F>(target: f64, curve: F, lo: f64, hi: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::domain(format!("target BLER must lie in (0, 1), got {target}")));
    }
    let close = |v: f64| ((v - target) / target).abs() <= 1e-3;
    let (f_lo, f_hi) = (curve(lo)?, curve(hi)?);
    if close(f_lo) {
        return Ok(lo);
    }
    if close(f_hi) {
        return Ok(hi);
    }
    if !(f_lo > target && f_hi < target) {
        return Err(Error::Bracket { target, lo, hi });
    }
    let (mut a, mut b) = (lo, hi);
    loop {
        let mid = 0.5 * (a + b);
        let v = curve(mid)?;
        if close(v) || b - a < 0.01 {
            return Ok(mid);
        }
        if v > target {
            a = mid;
        } else {
            b = mid;
        }
    }
}

/// Required power on [-80, 0] dBm for a scenario.
pub fn required_power_for_bler(
    target: f64,
    scn: &Scenario,
    curve: CurveKind,
    noise_mode: NoiseMode,
    param_mode: ParamMode,
) -> Result<f64> {
    required_power_for_curve(
        target,
        |p| {
            let inputs = ClosedFormInputs::new(scn, p, noise_mode, param_mode)?;
            match curve {
                CurveKind::Analytical => bler_closed_form(&inputs).map(|e| e.bler),
                CurveKind::Asymptotic => bler_asymptotic(&inputs).map(|e| e.bler),
            }
        },
        -80.0,
        0.0,
    )
}
