mod common;

use proptest::prelude::*;

use common::*;
use risfbl::channel::{sinr, sinr_bounds, sinr_nonuniform, sinr_uniform, ChannelRealization, RisConfig};
use risfbl::fbl::{bler_closed_form, goodput, FblParams, NoiseMode};
use risfbl::specfun::{gaussian_q, meijer_g_1112, regularized_lower_gamma, regularized_upper_gamma, MeijerG1112Args};
use risfbl::sweep::{Experiment, ExperimentConfig};

fn amplitudes(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(1e-4f64..2e-3, n),
        prop::collection::vec(0.05f64..1.0, n),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn q_is_symmetric(x in -30.0f64..30.0) {
        prop_assert!((gaussian_q(x) + gaussian_q(-x) - 1.0).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&gaussian_q(x)));
    }

    #[test]
    fn regularized_gamma_is_a_cdf(a in 0.1f64..200.0, x in 0.0f64..400.0, dx in 0.0f64..5.0) {
        let p = regularized_lower_gamma(a, x).unwrap();
        let q = regularized_upper_gamma(a, x).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p + q - 1.0).abs() < 1e-13);
        prop_assert!(regularized_lower_gamma(a, x + dx).unwrap() >= p);
    }

    #[test]
    fn g1112_is_lower_incomplete_gamma(a in 0.5f64..40.0, t in 0.01f64..3.0) {
        let x = t * a;
        let g = meijer_g_1112(&MeijerG1112Args::incomplete_gamma(x, a)).unwrap();
        let r = lower_incomplete_gamma_ref(a, x);
        prop_assert!((g - r).abs() <= 1e-12 * r, "{} vs {}", g, r);
    }

    #[test]
    fn sinr_ordering_and_sandwich(
        (bn, nd) in amplitudes(10),
        p in -70.0f64..-20.0,
        dp in 0.1f64..10.0,
    ) {
        let scn = table1(10, 0.9);
        let real = ChannelRealization::new(bn, nd).unwrap();
        let quiet = scn.noise.without_ris_noise();
        let (r1, r2) = (scn.rho(p), scn.rho(p + dp));
        let g = sinr(&real, &scn.ris, &scn.noise, r1).unwrap();
        prop_assert!(sinr(&real, &scn.ris, &scn.noise, r2).unwrap() > g);
        prop_assert!(sinr(&real, &scn.ris, &quiet, r1).unwrap() >= g);
        let (lb, ub) = sinr_bounds(&real, &scn.ris, &scn.noise, r1).unwrap();
        prop_assert!(lb <= g * (1.0 + 1e-12) && g <= ub * (1.0 + 1e-12), "{} {} {}", lb, g, ub);
    }

    #[test]
    fn constant_beta_surfaces_agree((bn, nd) in amplitudes(12), beta in 0.05f64..1.0, p in -60.0f64..-30.0) {
        let uni = table1(12, beta);
        let real = ChannelRealization::new(bn, nd).unwrap();
        let rho = uni.rho(p);
        let a = sinr_uniform(&real, &uni.ris, &uni.noise, rho).unwrap();
        let b = sinr_nonuniform(&real, &uni.ris, &uni.noise, rho).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn closed_form_bler_is_a_probability_falling_in_power(n in 5usize..25, beta in 0.1f64..1.0, p in -65.0f64..-25.0) {
        let scn = table1(n, beta);
        for mode in [NoiseMode::WithRisNoise, NoiseMode::NoRisNoise] {
            let lo = bler_closed_form(&inputs(&scn, p, mode)).unwrap().bler;
            let hi = bler_closed_form(&inputs(&scn, p + 1.0, mode)).unwrap().bler;
            prop_assert!((0.0..=1.0).contains(&lo));
            prop_assert!(hi <= lo * (1.0 + 1e-12), "{:?} P={}: {} then {}", mode, p, lo, hi);
        }
    }

    #[test]
    fn fbl_knots_bracket_the_threshold(xi in 101u64..50_000, frac in 0.05f64..0.9) {
        let theta = frac * xi as f64;
        if let Ok(f) = FblParams::new(xi, theta) {
            prop_assert!(0.0 < f.eps1 && f.eps1 < f.lambda_cap && f.lambda_cap < f.eps2);
            prop_assert!((f.midpoint() - f.lambda_cap).abs() <= 1e-12 * f.lambda_cap);
            prop_assert!((f.prefactor() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn goodput_is_linear_in_success_probability(xi in 200u64..5000, varrho in 0u64..200, b in 0.0f64..1.0) {
        let f = FblParams::new(xi, 0.3 * xi as f64).unwrap();
        let full = goodput(&f, varrho, 0.0).unwrap().bits;
        let g = goodput(&f, varrho, b).unwrap().bits;
        prop_assert!((g - full * (1.0 - b)).abs() <= 1e-15 * full);
        prop_assert!(goodput(&f, varrho, 1.0 + b + 1e-9).is_err());
    }

    #[test]
    fn wrong_beta_length_names_the_series(n in 2usize..30, k in 1usize..30) {
        prop_assume!(n != k);
        let text = format!(r#"{{"series": [{{"n_elements": {n}, "beta": {:?}}}]}}"#, vec![0.5; k]);
        let err = ExperimentConfig::from_json_str(&text, Some(Experiment::Custom)).unwrap_err().to_string();
        prop_assert!(err.contains("series[0].beta"), "{}", err);
    }

    #[test]
    fn ris_config_rejects_out_of_range_coefficients(b in prop_oneof![-1.0f64..-1e-9, 1.0 + 1e-9..3.0]) {
        prop_assert!(RisConfig::from_betas(vec![0.5, b]).is_err());
    }
}
