//! Two-moment Gamma fits of the cascaded amplitude sum and of the weighted
//! RIS-receiver power sum.

use serde::{Deserialize, Serialize};

use crate::channel::{NakagamiLink, RisConfig};
use crate::error::{Error, Result};
use crate::specfun::{ln_gamma, regularized_lower_gamma};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitKind {
    CascadeUniform,
    CascadeNonuniform,
    RispowerNonuniform,
}

/// Selects how the non-uniform parameters are built.
///
/// `Derived` matches the first two moments of sum sqrt(beta_n)|h_bn||h_nd|
/// exactly. `PaperLiteral` keeps beta_n / beta_n^2 weights and
/// shape = mu / sigma^2, and uses psi-hat = (sigma_r^2/sigma_d^2) sum beta_n
/// downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamMode {
    #[serde(alias = "paper")]
    PaperLiteral,
    #[default]
    Derived,
}

impl std::str::FromStr for ParamMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" | "paper-literal" => Ok(Self::PaperLiteral),
            "derived" => Ok(Self::Derived),
            other => Err(Error::config("param_mode", format!("unknown mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for ParamMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::PaperLiteral => "paper-literal",
            Self::Derived => "derived",
        })
    }
}

/// Gamma(shape, scale) matched to a variate with mean `mu` and variance `sigma_sq`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub mu: f64,
    pub sigma_sq: f64,
    pub shape: f64,
    pub scale: f64,
    pub kind: FitKind,
}

impl GammaFit {
    fn from_moments(mu: f64, sigma_sq: f64, kind: FitKind) -> Result<Self> {
        Self::with_shape(mu, sigma_sq, mu * mu / sigma_sq, kind)
    }

    fn with_shape(mu: f64, sigma_sq: f64, shape: f64, kind: FitKind) -> Result<Self> {
        let scale = sigma_sq / mu;
        if !(shape > 0.0 && shape.is_finite() && scale > 0.0 && scale.is_finite()) {
            return Err(Error::domain(format!(
                "degenerate Gamma fit (mu = {mu}, sigma^2 = {sigma_sq})"
            )));
        }
        Ok(Self {
            mu,
            sigma_sq,
            shape,
            scale,
            kind,
        })
    }

    /// P(V <= v) for the fitted variate V.
    pub fn cdf(&self, v: f64) -> Result<f64> {
        if v <= 0.0 {
            return Ok(0.0);
        }
        regularized_lower_gamma(self.shape, v / self.scale)
    }

    /// P(V^2 <= x), the CDF used for the squared amplitude sum.
    pub fn cdf_of_square(&self, x: f64) -> Result<f64> {
        self.cdf(x.max(0.0).sqrt())
    }

    pub fn ln_pdf(&self, v: f64) -> Result<f64> {
        if v <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok((self.shape - 1.0) * v.ln() - v / self.scale - ln_gamma(self.shape)? - self.shape * self.scale.ln())
    }
}

/// (E[|h_bn||h_nd|], Var[|h_bn||h_nd|]) for one element.
fn product_moments(bn: &NakagamiLink, nd: &NakagamiLink) -> Result<(f64, f64)> {
    let ln_r = ln_gamma(bn.m + 0.5)? - ln_gamma(bn.m)? + ln_gamma(nd.m + 0.5)? - ln_gamma(nd.m)?;
    let r = ln_r.exp();
    let power = bn.omega * nd.omega;
    let mean = r * (power / (bn.m * nd.m)).sqrt();
    let var = power * (1.0 - r * r / (bn.m * nd.m));
    Ok((mean, var))
}

/// Fit of S = sum_n |h_bn,n||h_nd,n| for N identical elements.
pub fn fit_cascade_uniform(bn: &NakagamiLink, nd: &NakagamiLink, n_elements: usize) -> Result<GammaFit> {
    if n_elements == 0 {
        return Err(Error::domain("cascade fit needs at least one element"));
    }
    let (mean, var) = product_moments(bn, nd)?;
    let n = n_elements as f64;
    GammaFit::from_moments(n * mean, n * var, FitKind::CascadeUniform)
}

/// Fit of S-hat = sum_n sqrt(beta_n) |h_bn,n||h_nd,n|.
pub fn fit_cascade_nonuniform(
    bn: &NakagamiLink,
    nd: &NakagamiLink,
    ris: &RisConfig,
    mode: ParamMode,
) -> Result<GammaFit> {
    let (mean, var) = product_moments(bn, nd)?;
    let beta = ris.beta();
    match mode {
        ParamMode::Derived => {
            let mu = mean * beta.iter().map(|b| b.sqrt()).sum::<f64>();
            let sigma_sq = var * beta.iter().sum::<f64>();
            GammaFit::from_moments(mu, sigma_sq, FitKind::CascadeNonuniform)
        }
        ParamMode::PaperLiteral => {
            let mu = mean * beta.iter().sum::<f64>();
            let sigma_sq = var * beta.iter().map(|b| b * b).sum::<f64>();
            GammaFit::with_shape(mu, sigma_sq, mu / sigma_sq, FitKind::CascadeNonuniform)
        }
    }
}

/// Fit of Z = sum_n beta_n |h_nd,n|^2; exact when all beta_n agree.
pub fn fit_rispower_nonuniform(nd: &NakagamiLink, ris: &RisConfig) -> Result<GammaFit> {
    let beta = ris.beta();
    let mu = nd.omega * beta.iter().sum::<f64>();
    let sigma_sq = nd.omega * nd.omega / nd.m * beta.iter().map(|b| b * b).sum::<f64>();
    GammaFit::from_moments(mu, sigma_sq, FitKind::RispowerNonuniform)
}

/// Number of series terms for a fitted shape: nearest integer, halves away from zero, at least 1.
pub fn integer_series_order(shape: f64) -> usize {
    (shape.round() as usize).max(1)
}
