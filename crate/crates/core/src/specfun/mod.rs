//! Special functions behind the closed-form BLER expressions.
//!
//! All functions are pure and thread-safe.

mod gamma;
mod incgamma;
mod meijer;

pub use gamma::{gamma_fn, ln_gamma, ln_gamma_complex, ln_gamma_ratio, GAMMA_MAX_ARG};
pub use incgamma::{
    ln_lower_incomplete_gamma, ln_regularized_lower_gamma, lower_incomplete_gamma, regularized_lower_gamma,
    regularized_upper_gamma,
};
pub use meijer::{
    ln_meijer_g_2112, meijer_g_1112, meijer_g_1112_series, meijer_g_2112, meijer_g_2112_laplace,
    meijer_g_2112_mellin_barnes, meijer_g_2112_slater, G2112Route, G2112Value, MeijerG1112Args, MeijerG2112Args,
    LOWER_PARAMS,
};

/// Gaussian tail Q(x) = erfc(x / sqrt 2) / 2.
pub fn gaussian_q(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    0.5 * libm::erfc(x * std::f64::consts::FRAC_1_SQRT_2)
}
