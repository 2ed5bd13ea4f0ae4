//! Lower incomplete gamma function, plain and regularized.
//!
//! Power series for x < a + 1, Lentz continued fraction for the upper
//! function otherwise. The common prefactor x^a e^{-x} / Gamma(a+1) goes
//! through [`ln_poisson_kernel`] so that a ~ 500 keeps relative accuracy.

use super::gamma::{gamma_fn, ln_gamma, ln_poisson_kernel, GAMMA_MAX_ARG};
use crate::error::{Error, Result};

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 100_000;
const TINY: f64 = 1e-300;

fn check(a: f64, x: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(format!("incomplete gamma needs a > 0, got a = {a}")));
    }
    if !(x >= 0.0) {
        return Err(Error::domain(format!("incomplete gamma needs x >= 0, got x = {x}")));
    }
    Ok(())
}

/// Sum_{n>=0} x^n / ((a+1)...(a+n)).
fn lower_series(a: f64, x: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut ap = a;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term < sum * EPS {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence {
        what: "incomplete gamma series",
        iterations: MAX_ITER,
    })
}

/// Continued fraction h with Gamma(a, x) = x^a e^{-x} h.
fn upper_fraction(a: f64, x: f64) -> Result<f64> {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            return Ok(h);
        }
    }
    Err(Error::NonConvergence {
        what: "incomplete gamma continued fraction",
        iterations: MAX_ITER,
    })
}

/// (P, Q) = regularized (lower, upper) incomplete gamma.
fn regularized_pair(a: f64, x: f64) -> Result<(f64, f64)> {
    check(a, x)?;
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    if x.is_infinite() {
        return Ok((1.0, 0.0));
    }
    let kernel = ln_poisson_kernel(a, x)?;
    if x < a + 1.0 {
        let p = kernel.exp() * lower_series(a, x)?;
        Ok((p.min(1.0), (1.0 - p).max(0.0)))
    } else {
        // x^a e^{-x} / Gamma(a) = a * exp(kernel)
        let q = a * kernel.exp() * upper_fraction(a, x)?;
        Ok(((1.0 - q).max(0.0), q.min(1.0)))
    }
}

/// P(a, x) = gamma(a, x) / Gamma(a).
pub fn regularized_lower_gamma(a: f64, x: f64) -> Result<f64> {
    regularized_pair(a, x).map(|(p, _)| p)
}

/// Q(a, x) = 1 - P(a, x), accurate in the upper tail.
pub fn regularized_upper_gamma(a: f64, x: f64) -> Result<f64> {
    regularized_pair(a, x).map(|(_, q)| q)
}

/// ln P(a, x), usable where P underflows.
pub fn ln_regularized_lower_gamma(a: f64, x: f64) -> Result<f64> {
    check(a, x)?;
    if x == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if x < a + 1.0 {
        Ok(ln_poisson_kernel(a, x)? + lower_series(a, x)?.ln())
    } else {
        let (_, q) = regularized_pair(a, x)?;
        Ok((-q).ln_1p())
    }
}

/// Lower incomplete gamma gamma(a, x) = integral_0^x t^{a-1} e^{-t} dt.
///
/// Overflows for large `a`; see [`ln_lower_incomplete_gamma`].
pub fn lower_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    check(a, x)?;
    if a > GAMMA_MAX_ARG {
        let ln = ln_lower_incomplete_gamma(a, x)?;
        if ln > f64::MAX.ln() {
            return Err(Error::Overflow("lower_incomplete_gamma"));
        }
        return Ok(ln.exp());
    }
    Ok(regularized_lower_gamma(a, x)? * gamma_fn(a)?)
}

/// ln gamma(a, x).
pub fn ln_lower_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    Ok(ln_regularized_lower_gamma(a, x)? + ln_gamma(a)?)
}
