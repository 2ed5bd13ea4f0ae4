mod common;

use statrs::distribution::{ContinuousCDF, Normal};

use common::*;
use risfbl::channel::NakagamiLink;
use risfbl::fbl::{bler_closed_form, NoiseMode};
use risfbl::mc::{
    empirical_sinr_cdf, estimate_bler, estimate_bler_grid, estimate_goodput, GridPoint, McRunSpec,
};

fn spec(n: usize, p: f64, trials: u64, seed: u64) -> McRunSpec {
    McRunSpec::new(table1(n, 0.9), p, trials, seed)
}

/// Q((C - r) / sqrt(V / Xi)) straight from the capacity and dispersion formulas.
fn normal_approx_direct(gamma: f64, xi: f64, payload: f64) -> f64 {
    let log2e = std::f64::consts::LOG2_E;
    let c = (1.0 + gamma).log2();
    let v = (1.0 - (1.0 + gamma).powi(-2)) * log2e * log2e;
    let z = (c - payload / xi) / (v / xi).sqrt();
    Normal::standard().sf(z)
}

#[test]
fn no_signal_drives_bler_to_one() {
    let e = estimate_bler(&spec(10, -200.0, 5000, 3)).unwrap();
    assert!(1.0 - e.mean <= 3.0 * e.std_error + 1e-12, "{e:?}");
}

#[test]
fn ris_noise_never_lowers_bler_on_shared_draws() {
    let grid: Vec<GridPoint> = linspace(-60.0, -30.0, 16)
        .into_iter()
        .map(|p| GridPoint {
            tx_power_dbm: p,
            fbl: table1(10, 0.9).fbl,
        })
        .collect();
    let est = estimate_bler_grid(&spec(10, 0.0, 4000, 5), &grid).unwrap();
    for (g, e) in grid.iter().zip(&est) {
        assert!(
            e.with_ris_noise.mean >= e.without_ris_noise.mean,
            "P={}: {} < {}",
            g.tx_power_dbm,
            e.with_ris_noise.mean,
            e.without_ris_noise.mean
        );
    }
}

#[test]
fn nearly_deterministic_channel_matches_direct_q() {
    let m = 1e6;
    let mut scn = table1_betas(FIG2_N10.to_vec());
    let (obn, ond) = (scn.link_bn.omega, scn.link_nd.omega);
    scn.link_bn = NakagamiLink::new(m, obn).unwrap();
    scn.link_nd = NakagamiLink::new(m, ond).unwrap();
    let beta = &FIG2_N10;
    let signal: f64 = beta.iter().map(|b| b.sqrt()).sum::<f64>().powi(2) * obn * ond;
    let ratio = scn.noise.noise_ratio(&scn.ris);
    let interference = 1.0 + ratio * beta.iter().sum::<f64>() * ond;
    // aim just above the rate so the BLER sits mid-range
    let gamma_bar = 0.33;
    let rho = gamma_bar * interference / signal;
    let p_dbm = 10.0 * (rho * scn.noise.sigma_d_sq).log10() + 30.0;
    let direct = normal_approx_direct(gamma_bar, 500.0, 200.0);
    assert!((0.05..0.95).contains(&direct), "{direct}");

    let e = estimate_bler(&McRunSpec::new(scn, p_dbm, 20_000, 9)).unwrap();
    assert!(e.std_error > 0.0);
    assert!((e.mean - direct).abs() <= 3.0 * e.std_error, "{} vs {direct} (se {})", e.mean, e.std_error);
}

#[test]
fn goodput_at_zero_bler_is_rate_less_one_use() {
    for varrho in [0, 100] {
        let mut s = spec(10, 40.0, 2000, 1);
        s.training_uses_varrho = varrho;
        let g = estimate_goodput(&s).unwrap();
        let chi = (500 + varrho) as f64;
        let expect = (1.0 - 1.0 / chi) * 200.0 / 500.0;
        assert_eq!(g.std_error, 0.0);
        assert!((g.mean - expect).abs() < 1e-15, "{} vs {expect}", g.mean);
    }
}

#[test]
fn goodput_is_identical_across_worker_counts() {
    let mut s = spec(20, -47.0, 30_000, 77);
    let a = estimate_goodput(&s).unwrap();
    s.workers = 8;
    let b = estimate_goodput(&s).unwrap();
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
}

#[test]
fn debug_run_checks_phase_alignment_and_sandwich() {
    let mut s = McRunSpec::new(table1_betas(fig2_n15()), -45.0, 3000, 21);
    s.debug_checks = true;
    let a = estimate_bler(&s).unwrap();
    s.debug_checks = false;
    let b = estimate_bler(&s).unwrap();
    assert!((a.mean - b.mean).abs() <= 1e-12 * b.mean.max(1e-300), "{a:?} {b:?}");
}

#[test]
fn cdf_reaches_one_above_the_support() {
    let c = empirical_sinr_cdf(&spec(10, -40.0, 3000, 2), &[1e12]).unwrap();
    assert_eq!(c.sinr[0].mean, 1.0);
    assert_eq!(c.lower_bound[0].mean, 1.0);
    assert_eq!(c.upper_bound[0].mean, 1.0);
}

#[test]
fn sinr_cdf_sits_between_bound_cdfs() {
    let grid: Vec<f64> = (0..40).map(|k| 10f64.powf(-3.0 + 0.1 * k as f64)).collect();
    for mode in [NoiseMode::WithRisNoise, NoiseMode::NoRisNoise] {
        let mut s = McRunSpec::new(table1_betas(FIG2_N10.to_vec()), -45.0, 5000, 8);
        s.noise_mode = mode;
        let c = empirical_sinr_cdf(&s, &grid).unwrap();
        for (k, y) in grid.iter().enumerate() {
            let (lb, g, ub) = (c.lower_bound[k].mean, c.sinr[k].mean, c.upper_bound[k].mean);
            assert!(ub <= g && g <= lb, "{mode:?} y={y}: {ub} {g} {lb}");
        }
    }
}

#[test]
fn unsorted_cdf_grid_is_rejected() {
    assert!(empirical_sinr_cdf(&spec(10, -40.0, 10, 2), &[1.0, 0.5]).is_err());
}

/// Closed-form outage at the midpoint threshold against the empirical SINR
/// CDF, allowing 0.02 plus three standard errors.
#[test]
fn closed_form_cdf_at_threshold_matches_empirical() {
    let mut worst = (0.0, String::new());
    for n in [10, 20] {
        let scn = table1(n, 0.9);
        let lam = scn.fbl.midpoint();
        for mode in [NoiseMode::WithRisNoise, NoiseMode::NoRisNoise] {
            for p in linspace(-60.0, -30.0, 13) {
                let cf = bler_closed_form(&inputs(&scn, p, mode)).unwrap();
                let closed = combined(cf.upsilon1, cf.upsilon2);
                let mut s = McRunSpec::new(scn.clone(), p, 20_000, 31);
                s.noise_mode = mode;
                let e = &empirical_sinr_cdf(&s, &[lam]).unwrap().sinr[0];
                let excess = (closed - e.mean).abs() - (0.02 + 3.0 * e.std_error);
                if excess > worst.0 {
                    worst = (excess, format!("N={n} {mode:?} P={p}: closed {closed:.4} vs empirical {:.4}", e.mean));
                }
            }
        }
    }
    assert!(worst.0 <= 0.0, "worst excess {:.4} at {}", worst.0, worst.1);
}

#[test]
fn zero_trials_is_an_error() {
    let mut s = spec(10, -40.0, 0, 1);
    assert!(estimate_bler(&s).is_err());
    s.trials = 10;
    s.workers = 0;
    assert!(estimate_bler(&s).is_err());
}
