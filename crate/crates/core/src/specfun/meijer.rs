//! The two Meijer-G families used by the closed-form BLER expressions.
//!
//! `G^{2,1}_{1,2}(x | a1; 0, 1/2)` has three independent evaluation routes:
//!
//! * Slater expansion into two Kummer series,
//!   `G = sqrt(pi) Gamma(alpha) M(alpha, 1/2, x) - 2 sqrt(pi) Gamma(alpha + 1/2) sqrt(x) M(alpha + 1/2, 3/2, x)`
//!   with `alpha = 1 - a1`. Exact for all x, but the two terms cancel as x grows.
//! * Laplace integral `G = sqrt(pi) int_0^inf t^{alpha-1} exp(-t - 2 sqrt(x t)) dt`,
//!   integrated in log-time around its single peak. Used whenever the series
//!   loses too much to cancellation (see [`MeijerG2112Args::condition_guard`]).
//! * Mellin-Barnes contour integral on the vertical line through the real
//!   saddle point. It shares no code path with the other two and is exposed
//!   as a cross-check.
//!
//! Everything is computed as ln G; G is strictly positive for a1 < 1.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::gamma::{ln_gamma, ln_gamma_complex};
use super::incgamma::lower_incomplete_gamma;
use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOptions};

const LN_SQRT_PI: f64 = 0.572_364_942_924_700_1;
/// Fixed lower parameters (b1, b2).
pub const LOWER_PARAMS: (f64, f64) = (0.0, 0.5);
/// Slater terms overflow before this argument; skip straight to quadrature.
const SLATER_MAX_X: f64 = 600.0;
/// Integrand drop (in nats) treated as negligible when truncating integrals.
const TAIL_NATS: f64 = 50.0;

/// Arguments of `G^{2,1}_{1,2}(x | a1; 0, 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeijerG2112Args {
    pub x: f64,
    pub a1: f64,
    /// Largest |a1| accepted; catches runaway series indices.
    pub a1_guard: f64,
    /// Largest cancellation factor tolerated on the Slater route, weighted by
    /// 1 + |ln G| because the two terms are formed from their logarithms.
    pub condition_guard: f64,
}

impl MeijerG2112Args {
    pub fn new(x: f64, a1: f64) -> Result<Self> {
        Self::with_limits(x, a1, 1e4, 1e6)
    }

    pub fn with_limits(x: f64, a1: f64, a1_guard: f64, condition_guard: f64) -> Result<Self> {
        Self {
            x,
            a1,
            a1_guard,
            condition_guard,
        }
        .validated()
    }

    pub fn with_guards(mut self, a1_guard: f64, condition_guard: f64) -> Result<Self> {
        self.a1_guard = a1_guard;
        self.condition_guard = condition_guard;
        self.validated()
    }

    fn validated(self) -> Result<Self> {
        if !(self.x > 0.0) || !self.x.is_finite() {
            return Err(Error::domain(format!("G^21_12 needs finite x > 0, got {}", self.x)));
        }
        if !self.a1.is_finite() || self.a1.abs() > self.a1_guard {
            return Err(Error::domain(format!(
                "G^21_12 upper parameter {} outside guard {}",
                self.a1, self.a1_guard
            )));
        }
        if self.a1 >= 1.0 {
            return Err(Error::domain(format!("G^21_12 needs a1 < 1, got {}", self.a1)));
        }
        let (b1, b2) = LOWER_PARAMS;
        debug_assert!(((b1 - b2).fract()).abs() > 0.0, "lower parameters must not differ by an integer");
        Ok(self)
    }

    /// alpha = 1 - a1 > 0.
    fn alpha(&self) -> f64 {
        1.0 - self.a1
    }
}

/// Which route produced a [`meijer_g_2112`] value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum G2112Route {
    Slater,
    Laplace,
}

#[derive(Debug, Clone, Copy)]
pub struct G2112Value {
    pub ln_value: f64,
    pub route: G2112Route,
}

/// Kummer M(a, b, x) for a, b, x > 0, returned as ln M.
fn ln_kummer_positive(a: f64, b: f64, x: f64) -> Result<f64> {
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for k in 0..200_000usize {
        let kf = k as f64;
        let ratio = (a + kf) * x / ((b + kf) * (kf + 1.0));
        term *= ratio;
        sum += term;
        if !sum.is_finite() {
            return Err(Error::Overflow("Kummer series"));
        }
        // Once the ratio is below one the remaining tail is bounded geometrically.
        let next = (a + kf + 1.0) * x / ((b + kf + 1.0) * (kf + 2.0));
        if next < 1.0 && term * next / (1.0 - next) <= 1e-17 * sum {
            return Ok(sum.ln());
        }
    }
    Err(Error::NonConvergence {
        what: "Kummer series",
        iterations: 200_000,
    })
}

/// Slater route: ln G and the cancellation factor (T1 + T2) / (T1 - T2).
pub fn meijer_g_2112_slater(args: &MeijerG2112Args) -> Result<(f64, f64)> {
    let alpha = args.alpha();
    let x = args.x;
    if x > SLATER_MAX_X {
        return Err(Error::Overflow("Slater expansion"));
    }
    let ln_t1 = LN_SQRT_PI + ln_gamma(alpha)? + ln_kummer_positive(alpha, 0.5, x)?;
    let ln_t2 = std::f64::consts::LN_2
        + LN_SQRT_PI
        + ln_gamma(alpha + 0.5)?
        + 0.5 * x.ln()
        + ln_kummer_positive(alpha + 0.5, 1.5, x)?;
    let r = (ln_t2 - ln_t1).exp();
    if r >= 1.0 {
        return Ok((f64::NAN, f64::INFINITY));
    }
    let cond = (1.0 + r) / (1.0 - r);
    Ok((ln_t1 + (-(ln_t2 - ln_t1).exp_m1()).ln(), cond))
}

/// Laplace route: sqrt(pi) int exp(alpha s - e^s - 2 sqrt(x) e^{s/2}) ds over the real line.
pub fn meijer_g_2112_laplace(args: &MeijerG2112Args) -> Result<f64> {
    let alpha = args.alpha();
    let sx = args.x.sqrt();
    // Peak: v^2 + sqrt(x) v = alpha with v = e^{s/2}.
    let v = 2.0 * alpha / (sx + (args.x + 4.0 * alpha).sqrt());
    let s_peak = 2.0 * v.ln();
    let f_peak = alpha * s_peak - v * v - 2.0 * sx * v;
    // exponent relative to the peak, u = s - s_peak; expm1 avoids cancelling
    // the large terms of f against f_peak
    let g = |u: f64| alpha * u - v * v * u.exp_m1() - 2.0 * sx * v * (0.5 * u).exp_m1();
    let curvature = v * v + 0.5 * sx * v;
    let width = 1.0 / curvature.sqrt();
    let left = -TAIL_NATS / alpha - 2.0;
    let mut right = width.max(0.5);
    while g(right) > -TAIL_NATS {
        right *= 2.0;
    }
    let breaks: Vec<f64> = [-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0]
        .iter()
        .map(|k| k * width)
        .filter(|u| *u > left && *u < right)
        .collect();
    let opts = QuadOptions {
        rel_tol: 1e-14,
        ..Default::default()
    };
    let integral = integrate(|u| g(u).exp(), left, right, &breaks, opts)?;
    Ok(LN_SQRT_PI + f_peak + integral.ln())
}

/// Mellin-Barnes route: (1/2 pi i) int Gamma(-s) Gamma(1/2 - s) Gamma(alpha + s) x^s ds.
pub fn meijer_g_2112_mellin_barnes(args: &MeijerG2112Args) -> Result<f64> {
    let alpha = args.alpha();
    let lnx = args.x.ln();
    let phi = |c: f64| -> f64 {
        ln_gamma(-c).unwrap_or(f64::INFINITY)
            + ln_gamma(0.5 - c).unwrap_or(f64::INFINITY)
            + ln_gamma(alpha + c).unwrap_or(f64::INFINITY)
            + c * lnx
    };
    // phi is convex on (-alpha, 0); golden-section search for the saddle.
    let (mut lo, mut hi) = (-alpha * (1.0 - 1e-12), -alpha * 1e-12);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c1 = hi - g * (hi - lo);
    let mut c2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (phi(c1), phi(c2));
    for _ in 0..200 {
        if f1 < f2 {
            hi = c2;
            c2 = c1;
            f2 = f1;
            c1 = hi - g * (hi - lo);
            f1 = phi(c1);
        } else {
            lo = c1;
            c1 = c2;
            f1 = f2;
            c2 = lo + g * (hi - lo);
            f2 = phi(c2);
        }
        if (hi - lo).abs() < 1e-13 * alpha.max(1.0) {
            break;
        }
    }
    let c = 0.5 * (lo + hi);
    let phi_c = phi(c);
    let log_integrand = |t: f64| -> Complex64 {
        ln_gamma_complex(Complex64::new(-c, -t))
            + ln_gamma_complex(Complex64::new(0.5 - c, -t))
            + ln_gamma_complex(Complex64::new(alpha + c, t))
            + Complex64::new(c, t) * lnx
            - phi_c
    };
    let mut t_max = 1.0;
    while log_integrand(t_max).re > -TAIL_NATS {
        t_max *= 1.5;
        if t_max > 1e4 {
            return Err(Error::NonConvergence {
                what: "Mellin-Barnes contour truncation",
                iterations: 0,
            });
        }
    }
    let n_breaks = (t_max.ceil() as usize).min(400);
    let breaks: Vec<f64> = (1..n_breaks).map(|k| t_max * k as f64 / n_breaks as f64).collect();
    let opts = QuadOptions {
        rel_tol: 1e-13,
        abs_tol: 1e-300,
        max_panels: 20_000,
    };
    let integral = integrate(|t| log_integrand(t).exp().re, 0.0, t_max, &breaks, opts)?;
    if !(integral > 0.0) {
        return Err(Error::NonConvergence {
            what: "Mellin-Barnes integral sign",
            iterations: 0,
        });
    }
    Ok(phi_c + (integral / PI).ln())
}

/// ln G^{2,1}_{1,2}(x | a1; 0, 1/2), choosing the Slater or Laplace route.
pub fn ln_meijer_g_2112(args: &MeijerG2112Args) -> Result<G2112Value> {
    if args.x <= SLATER_MAX_X {
        if let Ok((ln_value, cond)) = meijer_g_2112_slater(args) {
            if cond.is_finite() && ln_value.is_finite() && cond * (1.0 + ln_value.abs()) <= args.condition_guard {
                return Ok(G2112Value {
                    ln_value,
                    route: G2112Route::Slater,
                });
            }
        }
    }
    let ln_value = meijer_g_2112_laplace(args)?;
    if !ln_value.is_finite() {
        return Err(Error::NonConvergence {
            what: "G^21_12 evaluation",
            iterations: 0,
        });
    }
    Ok(G2112Value {
        ln_value,
        route: G2112Route::Laplace,
    })
}

/// G^{2,1}_{1,2}(x | a1; 0, 1/2).
pub fn meijer_g_2112(args: &MeijerG2112Args) -> Result<f64> {
    let v = ln_meijer_g_2112(args)?.ln_value;
    if v > f64::MAX.ln() {
        return Err(Error::Overflow("meijer_g_2112"));
    }
    Ok(v.exp())
}

/// Arguments of `G^{1,1}_{1,2}(x | a1; b1, b2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeijerG1112Args {
    pub x: f64,
    pub a1: f64,
    pub b1: f64,
    pub b2: f64,
}

impl MeijerG1112Args {
    /// The pattern `G^{1,1}_{1,2}(x | 1; shape, 0)` that equals gamma(shape, x).
    pub fn incomplete_gamma(x: f64, shape: f64) -> Self {
        Self { x, a1: 1.0, b1: shape, b2: 0.0 }
    }
}

/// G^{1,1}_{1,2}(x | 1; b1, 0) = gamma(b1, x), routed through the incomplete gamma.
pub fn meijer_g_1112(args: &MeijerG1112Args) -> Result<f64> {
    if args.a1 != 1.0 || args.b2 != 0.0 {
        return Err(Error::domain(format!(
            "G^11_12 is only supported as (x | 1; b1, 0), got a1 = {}, b2 = {}",
            args.a1, args.b2
        )));
    }
    if !(args.b1 > 0.0) || !(args.x >= 0.0) {
        return Err(Error::domain("G^11_12 needs b1 > 0 and x >= 0"));
    }
    lower_incomplete_gamma(args.b1, args.x)
}

/// General residue series
/// `x^{b1} Gamma(1 - a1 + b1) / Gamma(1 + b1 - b2) 1F1(1 - a1 + b1; 1 + b1 - b2; -x)`.
///
/// Alternating, so only trustworthy for moderate x. Kept for testing the
/// identity used by [`meijer_g_1112`].
pub fn meijer_g_1112_series(args: &MeijerG1112Args) -> Result<f64> {
    let a = 1.0 - args.a1 + args.b1;
    let b = 1.0 + args.b1 - args.b2;
    let x = args.x;
    if x == 0.0 {
        return Ok(if args.b1 > 0.0 { 0.0 } else { f64::NAN });
    }
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut max_term = 1.0f64;
    for k in 0..100_000usize {
        let kf = k as f64;
        term *= -(a + kf) * x / ((b + kf) * (kf + 1.0));
        sum += term;
        max_term = max_term.max(term.abs());
        if term.abs() < 1e-17 * sum.abs() && kf > x {
            let prefactor = args.b1 * x.ln() + ln_gamma(a)? - ln_gamma(b)?;
            if max_term / sum.abs() > 1e8 {
                return Err(Error::NonConvergence {
                    what: "G^11_12 residue series (cancellation)",
                    iterations: k,
                });
            }
            return Ok(prefactor.exp() * sum);
        }
    }
    Err(Error::NonConvergence {
        what: "G^11_12 residue series",
        iterations: 100_000,
    })
}
