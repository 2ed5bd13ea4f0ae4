//! Reference implementations shared by the integration tests. Nothing here
//! calls into the crate's special functions or quadrature.

#![allow(dead_code)]

use statrs::function::gamma::{gamma_lr, ln_gamma};

use risfbl::channel::RisConfig;
use risfbl::fbl::{ClosedFormInputs, FitSet, NoiseMode};
use risfbl::momentfit::{integer_series_order, ParamMode};
use risfbl::scenario::Scenario;

/// Tanh-sinh quadrature on [a, b], halving the step until two levels agree.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    use std::f64::consts::FRAC_PI_2;
    let d = 0.5 * (b - a);
    let t_max = 3.5;
    let node = |t: f64| {
        let s = FRAC_PI_2 * t.sinh();
        let (x, w) = (s.tanh(), FRAC_PI_2 * t.cosh() / s.cosh().powi(2));
        // distance from the nearer endpoint, computed without cancellation
        let gap = 1.0 / (s.abs().exp() * s.cosh());
        (x, w, gap)
    };
    let eval = |t: f64| {
        let (x, w, gap) = node(t);
        if w == 0.0 || gap == 0.0 {
            return 0.0;
        }
        let at = if x < 0.0 { a + d * gap } else { b - d * gap };
        let v = f(at);
        if v.is_finite() {
            w * v
        } else {
            0.0
        }
    };
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    while k as f64 * h <= t_max {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut prev = sum * h * d;
    for _ in 0..12 {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= t_max {
            let t = k as f64 * h;
            sum += eval(t) + eval(-t);
            k += 2;
        }
        let cur = sum * h * d;
        if (cur - prev).abs() <= rel_tol * cur.abs() {
            return cur;
        }
        prev = cur;
    }
    prev
}

/// ln P(a, x) for the regularized lower incomplete gamma.
pub fn ln_reg_lower_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if x < a + 1.0 {
        // sum_k x^k / ((a+1)...(a+k))
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        while term > 1e-18 * sum {
            term *= x / (a + k);
            sum += term;
            k += 1.0;
        }
        a * x.ln() - x - ln_gamma(a + 1.0) + sum.ln()
    } else {
        gamma_lr(a, x).ln()
    }
}

/// Integrate over [0, hi] in equal panels; the integrands here are smooth bumps.
pub fn panels<F: Fn(f64) -> f64>(f: F, hi: f64, n: usize, rel_tol: f64) -> f64 {
    let w = hi / n as f64;
    (0..n).map(|i| tanh_sinh(&f, i as f64 * w, (i + 1) as f64 * w, rel_tol)).sum()
}

/// Gamma(shape, scale) log-density.
pub fn ln_gamma_pdf(z: f64, shape: f64, scale: f64) -> f64 {
    (shape - 1.0) * z.ln() - z / scale - ln_gamma(shape) - shape * scale.ln()
}

/// E_Z[P(n, c sqrt(Z))] for Z ~ Gamma(shape, scale), by direct quadrature.
pub fn noise_term_by_quadrature(n: f64, c: f64, shape: f64, scale: f64) -> f64 {
    // the integrand peaks near (shape + n/2) * scale; cover it generously
    let centre = shape + 0.5 * n;
    let hi_u = centre + 40.0 * centre.sqrt() + 60.0;
    let f = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let z = u * scale;
        (ln_reg_lower_gamma(n, c * z.sqrt()) + ln_gamma_pdf(u, shape, 1.0)).exp()
    };
    panels(f, hi_u, 400, 1e-12)
}

/// The two bound probabilities of the closed form, evaluated directly:
/// ups1 from the expectation over the RIS-receiver power (integer order),
/// ups2 from the Gamma CDF of the amplitude sum.
pub fn bound_probabilities_direct(inputs: &ClosedFormInputs) -> (f64, f64) {
    let lam = inputs.fbl.midpoint();
    let rho = inputs.rho;
    let (cascade, beta, z_shape, z_scale) = match inputs.fits {
        FitSet::Uniform {
            cascade,
            beta,
            m_nd,
            omega_nd,
            n_elements,
        } => (cascade, beta, m_nd * n_elements as f64, omega_nd / m_nd),
        FitSet::Nonuniform { cascade, rispower, .. } => (cascade, 1.0, rispower.shape, rispower.scale),
    };
    let ups2 = ln_reg_lower_gamma(cascade.shape, (lam / (rho * beta)).sqrt() / cascade.scale).exp();
    let ups1 = match inputs.noise_mode {
        NoiseMode::NoRisNoise => 0.0,
        NoiseMode::WithRisNoise => {
            let n = integer_series_order(cascade.shape) as f64;
            let c = (lam * inputs.psi / (rho * beta)).sqrt() / cascade.scale;
            noise_term_by_quadrature(n, c, z_shape, z_scale)
        }
    };
    (ups1, ups2)
}

pub fn combined(u1: f64, u2: f64) -> f64 {
    u1 + u2 - u1 * u2
}

pub fn table1(n: usize, beta: f64) -> Scenario {
    Scenario::table1(RisConfig::uniform(n, beta).unwrap()).unwrap()
}

pub const FIG2_N10: [f64; 10] = [0.7, 0.7, 0.7, 0.7, 0.9, 0.9, 0.9, 0.9, 0.6, 0.6];

pub fn fig2_n15() -> Vec<f64> {
    let mut b = FIG2_N10.to_vec();
    b.extend([0.4, 0.4, 0.8, 0.8, 0.8]);
    b
}

pub fn table1_betas(beta: Vec<f64>) -> Scenario {
    Scenario::table1(RisConfig::from_betas(beta).unwrap()).unwrap()
}

pub fn inputs(scn: &Scenario, p: f64, mode: NoiseMode) -> ClosedFormInputs {
    ClosedFormInputs::new(scn, p, mode, ParamMode::Derived).unwrap()
}

/// Kolmogorov distance between a sorted sample and a CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let f = cdf(*x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Evenly spaced grid including both ends.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// Non-regularized lower incomplete gamma by the power series below a + 1
/// and Legendre's continued fraction above.
pub fn lower_incomplete_gamma_ref(a: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let ln_pre = a * x.ln() - x;
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut k = 1.0;
        while term > 1e-18 * sum {
            term *= x / (a + k);
            sum += term;
            k += 1.0;
        }
        (ln_pre + sum.ln()).exp()
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-17 {
                break;
            }
        }
        statrs::function::gamma::gamma(a) - (ln_pre + h.ln()).exp()
    }
}
