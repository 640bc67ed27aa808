//! Numerical quadrature: Gauss-Legendre / Gauss-Hermite node generation
//! and an adaptive panel integrator used by the analytics layer and the
//! oracle suite.
//!
//! Nodes are generated at runtime from the orthogonal-polynomial
//! recurrences (no hard-coded tables) and cached behind `OnceLock`.

use crate::error::{Error, Result};
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Gauss-Legendre nodes and weights on [-1, 1].
///
/// Newton iteration on the Legendre recurrence with the classical
/// cosine initial guesses; converges to machine precision in a handful
/// of steps.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Value and derivative of the Legendre polynomial `P_n` at `x`.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss-Hermite nodes and weights for the weight `exp(-x^2)` on the
/// whole real line.
///
/// Roots are isolated by interlacing (each `p_k` root bracket comes from
/// the roots of `p_{k-1}`), then polished with Newton on the orthonormal
/// recurrence; weights use the Christoffel sum `1 / sum_k p_k(x)^2`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    // roots[k] holds the roots of the orthonormal Hermite polynomial p_k.
    let mut roots: Vec<Vec<f64>> = vec![vec![], vec![0.0]];
    for k in 2..=n {
        let prev = &roots[k - 1];
        // Outer bound: all roots lie within sqrt(2k+1).
        let bound = (2.0 * k as f64 + 1.0).sqrt() + 1.0;
        let mut brackets = Vec::with_capacity(k + 1);
        brackets.push(-bound);
        brackets.extend(prev.iter().copied());
        brackets.push(bound);
        let mut rk = Vec::with_capacity(k);
        for w in brackets.windows(2) {
            rk.push(hermite_root_in(k, w[0], w[1]));
        }
        roots.push(rk);
    }
    let nodes = roots[n].clone();
    let weights = nodes
        .iter()
        .map(|&x| {
            let mut sum = 0.0;
            let mut p0 = PI.powf(-0.25);
            let mut p1 = std::f64::consts::SQRT_2 * x * p0;
            sum += p0 * p0;
            if n > 1 {
                sum += p1 * p1;
            }
            for k in 1..n - 1 {
                let kf = k as f64;
                let p2 = x * (2.0 / (kf + 1.0)).sqrt() * p1 - (kf / (kf + 1.0)).sqrt() * p0;
                p0 = p1;
                p1 = p2;
                sum += p1 * p1;
            }
            1.0 / sum
        })
        .collect();
    (nodes, weights)
}

/// Orthonormal Hermite polynomial value at `x` (weight `exp(-x^2)`).
fn hermite_orthonormal(k: usize, x: f64) -> f64 {
    let mut p0 = PI.powf(-0.25);
    if k == 0 {
        return p0;
    }
    let mut p1 = std::f64::consts::SQRT_2 * x * p0;
    for j in 1..k {
        let jf = j as f64;
        let p2 = x * (2.0 / (jf + 1.0)).sqrt() * p1 - (jf / (jf + 1.0)).sqrt() * p0;
        p0 = p1;
        p1 = p2;
    }
    p1
}

fn hermite_root_in(k: usize, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = hermite_orthonormal(k, lo);
    // Bisection to a tight bracket, then Newton via p'_k = sqrt(2k) p_{k-1}.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fmid = hermite_orthonormal(k, mid);
        if (flo > 0.0) == (fmid > 0.0) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..8 {
        let p = hermite_orthonormal(k, x);
        let dp = (2.0 * k as f64).sqrt() * hermite_orthonormal(k - 1, x);
        if dp == 0.0 {
            break;
        }
        let dx = p / dp;
        x -= dx;
        if dx.abs() < 1e-16 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

fn gl_cached(n: usize, slot: &'static OnceLock<(Vec<f64>, Vec<f64>)>) -> &'static (Vec<f64>, Vec<f64>) {
    slot.get_or_init(|| gauss_legendre(n))
}

static GL16: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
static GL32: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();

fn panel_estimates<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let (n16, w16) = gl_cached(16, &GL16);
    let (n32, w32) = gl_cached(32, &GL32);
    let coarse: f64 = n16
        .iter()
        .zip(w16)
        .map(|(&x, &w)| w * f(mid + half * x))
        .sum();
    let fine: f64 = n32
        .iter()
        .zip(w32)
        .map(|(&x, &w)| w * f(mid + half * x))
        .sum();
    (coarse * half, fine * half)
}

/// Tolerances and subdivision budget for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadCtrl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadCtrl {
    fn default() -> Self {
        Self {
            rel_tol: 1e-11,
            abs_tol: 1e-300,
            max_panels: 20_000,
        }
    }
}

/// Adaptive Gauss-Legendre integration of `f` over the finite interval
/// `[a, b]`.
///
/// Each panel compares 16- and 32-node estimates; panels whose
/// discrepancy exceeds their pro-rata share of the tolerance are
/// bisected.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, ctrl: QuadCtrl) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let total_len = (b - a).abs();
    // First sweep to seed the magnitude scale for relative tolerance.
    let (_, first) = panel_estimates(&f, a, b);
    let mut scale = first.abs().max(ctrl.abs_tol);

    let mut stack = vec![(a, b)];
    let mut accepted = 0.0;
    let mut panels = 0usize;
    while let Some((lo, hi)) = stack.pop() {
        panels += 1;
        if panels > ctrl.max_panels {
            return Err(Error::QuadratureFailure(format!(
                "exceeded {} panels on [{a}, {b}]",
                ctrl.max_panels
            )));
        }
        let (coarse, fine) = panel_estimates(&f, lo, hi);
        let share = (hi - lo).abs() / total_len;
        let tol = (ctrl.rel_tol * scale * share).max(ctrl.abs_tol);
        let len_floor = (hi - lo).abs() < 1e-15 * total_len;
        if (fine - coarse).abs() <= tol || len_floor {
            accepted += fine;
            scale = scale.max(accepted.abs());
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid));
            stack.push((mid, hi));
        }
    }
    Ok(accepted)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_nodes_integrate_polynomials_exactly() {
        let (x, w) = gauss_legendre(16);
        // Exact for degree <= 31.
        for deg in [0usize, 3, 10, 31] {
            let got: f64 = x.iter().zip(&w).map(|(&x, &w)| w * x.powi(deg as i32)).sum();
            let expect = if deg % 2 == 1 {
                0.0
            } else {
                2.0 / (deg as f64 + 1.0)
            };
            assert!((got - expect).abs() < 1e-13, "degree {deg}");
        }
    }

    #[test]
    fn hermite_nodes_integrate_gaussian_moments() {
        for n in [1usize, 2, 7, 64, 65] {
            let (x, w) = gauss_hermite(n);
            assert_eq!(x.len(), n);
            let m0: f64 = w.iter().sum();
            assert!((m0 - PI.sqrt()).abs() < 1e-12, "n={n}: m0={m0}");
            if n >= 2 {
                let m2: f64 = x.iter().zip(&w).map(|(&x, &w)| w * x * x).sum();
                assert!((m2 - 0.5 * PI.sqrt()).abs() < 1e-12, "n={n}: m2={m2}");
            }
            if n >= 3 {
                let m4: f64 = x.iter().zip(&w).map(|(&x, &w)| w * x.powi(4)).sum();
                assert!((m4 - 0.75 * PI.sqrt()).abs() < 1e-11, "n={n}: m4={m4}");
            }
        }
    }

    #[test]
    fn hermite_high_order_stays_finite_and_symmetric() {
        let (x, w) = gauss_hermite(128);
        assert!(x.iter().all(|v| v.is_finite()));
        assert!(w.iter().all(|v| v.is_finite() && *v > 0.0));
        for i in 0..64 {
            assert!((x[i] + x[127 - i]).abs() < 1e-10);
        }
    }

    #[test]
    fn adaptive_integrator_handles_smooth_and_peaked_integrands() {
        let got = integrate(|x: f64| x.exp(), 0.0, 1.0, QuadCtrl::default()).unwrap();
        assert!((got - (1f64.exp() - 1.0)).abs() < 1e-13);

        // Narrow Gaussian inside a wide interval.
        let s = 1e-3;
        let got = integrate(
            |x: f64| (-0.5 * (x / s) * (x / s)).exp(),
            -1.0,
            1.0,
            QuadCtrl::default(),
        )
        .unwrap();
        let expect = s * (2.0 * PI).sqrt();
        assert!((got / expect - 1.0).abs() < 1e-9, "got {got}");
    }

    #[test]
    fn integrator_reports_budget_exhaustion() {
        let ctrl = QuadCtrl {
            max_panels: 2,
            rel_tol: 1e-15,
            ..QuadCtrl::default()
        };
        let r = integrate(|x: f64| (1e6 * x).sin().abs(), 0.0, 1.0, ctrl);
        assert!(matches!(r, Err(Error::QuadratureFailure(_))));
    }
}
