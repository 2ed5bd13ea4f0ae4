//! Globally adaptive Gauss-Legendre quadrature on finite intervals.
//!
//! Each panel is integrated with 10- and 20-point rules; the difference is
//! the panel error estimate and the 20-point value is kept. The panel with
//! the largest estimate is bisected until the total estimate meets the
//! tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
fn legendre_rule(n: usize) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Rule { nodes, weights }
}

fn rules() -> &'static (Rule, Rule) {
    static RULES: OnceLock<(Rule, Rule)> = OnceLock::new();
    RULES.get_or_init(|| (legendre_rule(10), legendre_rule(20)))
}

fn apply<F: Fn(f64) -> f64>(rule: &Rule, f: &F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let (lo, hi) = rules();
    let coarse = apply(lo, f, a, b);
    let fine = apply(hi, f, a, b);
    Panel {
        a,
        b,
        value: fine,
        err: (fine - coarse).abs(),
    }
}

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 0.0,
            max_panels: 4000,
        }
    }
}

/// Integral of `f` over [a, b], split at the given interior `breaks`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], opts: QuadOptions) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain("integrate needs finite limits"));
    }
    if a == b {
        return Ok(0.0);
    }
    let mut cuts: Vec<f64> = std::iter::once(a)
        .chain(breaks.iter().copied().filter(|x| *x > a.min(b) && *x < a.max(b)))
        .chain(std::iter::once(b))
        .collect();
    let last = cuts.len() - 1;
    if a > b {
        cuts[1..last].sort_by(|x, y| y.total_cmp(x));
    } else {
        cuts[1..last].sort_by(f64::total_cmp);
    }
    let mut heap: BinaryHeap<Panel> = cuts.windows(2).map(|w| panel(&f, w[0], w[1])).collect();
    loop {
        let total: f64 = heap.iter().map(|p| p.value).sum();
        let err: f64 = heap.iter().map(|p| p.err).sum();
        if !total.is_finite() {
            return Err(Error::domain("integrand is not finite"));
        }
        if err <= opts.abs_tol.max(opts.rel_tol * total.abs()) {
            return Ok(total);
        }
        if heap.len() >= opts.max_panels {
            return Err(Error::NonConvergence {
                what: "adaptive quadrature",
                iterations: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid == worst.a || mid == worst.b {
            // Panel cannot be split further; accept it.
            heap.push(Panel { err: 0.0, ..worst });
            continue;
        }
        heap.push(panel(&f, worst.a, mid));
        heap.push(panel(&f, mid, worst.b));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let (_, r20) = rules();
        let v = apply(r20, &|x: f64| x.powi(38), -1.0, 1.0);
        assert!((v - 2.0 / 39.0).abs() < 1e-15);
    }

    #[test]
    fn smooth_integrals() {
        let v = integrate(|x: f64| x.sin(), 0.0, std::f64::consts::PI, &[], QuadOptions::default()).unwrap();
        assert!((v - 2.0).abs() < 1e-13);
        let v = integrate(|x: f64| (-x).exp(), 0.0, 50.0, &[], QuadOptions::default()).unwrap();
        assert!((v - (1.0 - (-50.0f64).exp())).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity() {
        // integral_0^1 x^{-1/2} dx = 2
        let opts = QuadOptions { rel_tol: 1e-10, ..Default::default() };
        let v = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, &[], opts).unwrap();
        assert!((v - 2.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let v = integrate(|x: f64| x * x, 3.0, 0.0, &[1.0], QuadOptions::default()).unwrap();
        assert!((v + 9.0).abs() < 1e-13);
    }
}
