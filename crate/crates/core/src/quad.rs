//! Quadrature rules used across the crate.
//!
//! * Gauss–Legendre panels for smooth (possibly oscillatory) integrands.
//! * Tanh–sinh (double exponential) for integrands with algebraic or
//!   logarithmic endpoint singularities. The integrand receives the distance
//!   to each endpoint as well as the abscissa, so factors like (1 − x)^(−1/2)
//!   can be formed without cancellation.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Nodes and weights of the n-point Gauss–Legendre rule on [−1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_and_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrates `f` over [a, b] split into `panels` equal pieces.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let panels = panels.max(1);
        let w = (b - a) / panels as f64;
        let half = 0.5 * w;
        let mut total = 0.0;
        for k in 0..panels {
            let mid = a + (k as f64 + 0.5) * w;
            let mut s = 0.0;
            for (x, wt) in self.nodes.iter().zip(&self.weights) {
                s += wt * f(mid + half * x);
            }
            total += s * half;
        }
        total
    }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared 20-point rule.
pub fn gauss_legendre_20() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(20))
}

/// Shared 12-point rule, used as the lower-order companion for error estimates.
pub fn gauss_legendre_12() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(12))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Tanh–sinh quadrature of `f(x, x − a, b − x)` over [a, b].
///
/// Refines by halving the step until two successive levels agree to
/// `max(abs_tol, rel_tol·|I|)`.
pub fn tanh_sinh<F>(a: f64, b: f64, abs_tol: f64, rel_tol: f64, mut f: F) -> Result<QuadResult>
where
    F: FnMut(f64, f64, f64) -> f64,
{
    const MAX_LEVEL: usize = 12;
    const T_MAX: f64 = 6.5;
    let half = 0.5 * (b - a);
    let mut evaluations = 0usize;

    let mut eval_at = |t: f64, evaluations: &mut usize| -> f64 {
        let s = 0.5 * PI * t.sinh();
        let cosh_s = s.cosh();
        // e^{-2|s|} gives the complementary distances without cancellation
        let e = (-2.0 * s.abs()).exp();
        let near = 2.0 * half * e / (1.0 + e);
        let (da, db) = if s >= 0.0 {
            (2.0 * half - near, near)
        } else {
            (near, 2.0 * half - near)
        };
        if da <= 0.0 || db <= 0.0 {
            return 0.0;
        }
        let x = if s >= 0.0 { b - db } else { a + da };
        let w = 0.5 * PI * t.cosh() / (cosh_s * cosh_s);
        *evaluations += 1;
        let v = f(x, da, db);
        if v.is_finite() {
            w * v
        } else {
            0.0
        }
    };

    let mut h = 1.0;
    let mut sum = eval_at(0.0, &mut evaluations);
    let mut k = 1;
    while (k as f64) * h <= T_MAX {
        let t = k as f64 * h;
        sum += eval_at(t, &mut evaluations) + eval_at(-t, &mut evaluations);
        k += 1;
    }
    let mut estimate = sum * h * half;
    let mut err = f64::INFINITY;
    for level in 1..=MAX_LEVEL {
        h *= 0.5;
        let mut add = 0.0;
        let mut k = 1;
        while (k as f64) * h <= T_MAX {
            let t = k as f64 * h;
            add += eval_at(t, &mut evaluations) + eval_at(-t, &mut evaluations);
            k += 2;
        }
        sum += add;
        let next = sum * h * half;
        err = (next - estimate).abs();
        estimate = next;
        if err <= abs_tol.max(rel_tol * estimate.abs()) && level >= 3 {
            return Ok(QuadResult {
                value: estimate,
                error_estimate: err,
                evaluations,
            });
        }
    }
    Err(Error::Convergence(format!(
        "tanh-sinh did not reach tolerance (last change {err:e}, value {estimate:e})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let rule = GaussLegendre::new(20);
        let s: f64 = rule.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        // degree 39 is integrated exactly
        let v = rule.integrate(-1.0, 1.0, 1, |x| x.powi(38));
        assert!((v - 2.0 / 39.0).abs() < 1e-14);
        let v = rule.integrate(0.0, 3.0, 7, |x| x.cos());
        assert!((v - 3f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularities() {
        // ∫₀¹ x^{-1/2} dx = 2
        let r = tanh_sinh(0.0, 1.0, 1e-14, 1e-13, |_, da, _| da.powf(-0.5)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12, "{}", r.value);
        // ∫₀¹ (1−x)^{-1/2} dx = 2 using the complementary distance
        let r = tanh_sinh(0.0, 1.0, 1e-14, 1e-13, |_, _, db| db.powf(-0.5)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
        // ∫₀¹ ln x dx = −1
        let r = tanh_sinh(0.0, 1.0, 1e-14, 1e-13, |x, _, _| x.ln()).unwrap();
        assert!((r.value + 1.0).abs() < 1e-12);
        // ∫_{-1}^{1} (1−x²)^{-1/2} dx = π
        let r = tanh_sinh(-1.0, 1.0, 1e-14, 1e-13, |_, da, db| (da * db).powf(-0.5)).unwrap();
        assert!((r.value - PI).abs() < 1e-12);
    }
}
