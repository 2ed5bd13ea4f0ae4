//! Finite-blocklength reliability of RIS-assisted links whose passive
//! elements re-radiate thermal noise.
//!
//! * [`specfun`]: Gamma, incomplete gamma, Gaussian Q and the Meijer-G families.
//! * [`channel`]: Nakagami links, RIS configuration, Johnson-Nyquist noise, exact SINR.
//! * [`momentfit`]: moment-matched Gamma fits of the cascaded channel and the RIS noise sum.
//! * [`scenario`]: a complete link with reference defaults.
//! * [`fbl`]: closed-form, asymptotic and goodput expressions.
//! * [`mc`]: seeded, worker-count-invariant Monte Carlo oracle.
//! * [`sweep`]: experiment configuration, presets, CSV output and crossover reports.

// `!(x > 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod fbl;
pub mod mc;
pub mod momentfit;
pub mod quad;
pub mod scenario;
pub mod specfun;
pub mod sweep;
pub mod units;

pub use error::{Error, Result};
