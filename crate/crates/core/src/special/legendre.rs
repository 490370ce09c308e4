//! Legendre polynomials P_ℓ by three-term recurrence, and the
//! Mehler–Dirichlet integral representation used to cross-check them.

use std::f64::consts::PI;

use super::AccuracyPolicy;
use crate::error::{domain, Error, Result};

fn check_arg(t: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&t) {
        return domain(format!("Legendre argument {t} outside [-1, 1]"));
    }
    Ok(())
}

/// P_ℓ(t) by the recurrence (ℓ+1)P_{ℓ+1} = (2ℓ+1) t P_ℓ − ℓ P_{ℓ−1}.
pub fn legendre_p(ell: usize, t: f64) -> Result<f64> {
    check_arg(t)?;
    Ok(legendre_unchecked(ell, t))
}

pub(crate) fn legendre_unchecked(ell: usize, t: f64) -> f64 {
    if ell == 0 {
        return 1.0;
    }
    let mut p0 = 1.0;
    let mut p1 = t;
    for k in 1..ell {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * t * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// P_0(t), …, P_{l_max}(t).
pub fn legendre_batch(l_max: usize, t: f64) -> Result<Vec<f64>> {
    check_arg(t)?;
    let mut out = Vec::with_capacity(l_max + 1);
    legendre_fill(l_max, t, &mut out);
    Ok(out)
}

pub(crate) fn legendre_fill(l_max: usize, t: f64, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    if l_max == 0 {
        return;
    }
    out.push(t);
    for k in 1..l_max {
        let kf = k as f64;
        let p = ((2.0 * kf + 1.0) * t * out[k] - kf * out[k - 1]) / (kf + 1.0);
        out.push(p);
    }
}

/// 1 − P_ℓ(cos θ) for ℓ = 0..=l_max without the cancellation of forming
/// 1 − P_ℓ directly at small θ.
///
/// With h = 1 − cos θ = 2 sin²(θ/2) and u_ℓ = 1 − P_ℓ, the Legendre recurrence
/// becomes (ℓ+1) u_{ℓ+1} = (2ℓ+1)(h + (1 − h) u_ℓ) − ℓ u_{ℓ−1}.
pub fn legendre_complement(l_max: usize, theta: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(l_max + 1);
    legendre_complement_fill(l_max, theta, &mut out);
    out
}

pub(crate) fn legendre_complement_fill(l_max: usize, theta: f64, out: &mut Vec<f64>) {
    let sh = (0.5 * theta).sin();
    let h = 2.0 * sh * sh;
    out.clear();
    out.push(0.0);
    if l_max == 0 {
        return;
    }
    out.push(h);
    let one_minus_h = 1.0 - h;
    for k in 1..l_max {
        let kf = k as f64;
        let u = ((2.0 * kf + 1.0) * (h + one_minus_h * out[k]) - kf * out[k - 1]) / (kf + 1.0);
        out.push(u);
    }
}

/// P_ℓ(cos θ) from the Mehler–Dirichlet integral
/// (√2/π) ∫₀^θ cos((ℓ+½)ψ) (cos ψ − cos θ)^{−1/2} dψ.
///
/// The substitution sin(ψ/2) = sin(θ/2)·cos t removes the endpoint
/// singularity and leaves (1/π) ∫₀^π cos((ℓ+½)ψ(t)) (1 − s² cos² t)^{−1/2} dt
/// with s = sin(θ/2), a smooth even periodic integrand for which the
/// trapezoidal rule converges geometrically. Nodes are doubled until two
/// successive estimates agree.
pub fn mehler_dirichlet_p(ell: usize, theta: f64, policy: &AccuracyPolicy) -> Result<f64> {
    if !(theta > 0.0 && theta < PI) {
        if theta == 0.0 {
            return Ok(1.0);
        }
        return domain(format!("Mehler-Dirichlet angle {theta} outside (0, pi)"));
    }
    let s = (0.5 * theta).sin();
    let c = (0.5 * theta).cos();
    // 1 − s, accurate when θ is close to π
    let one_minus_s = c * c / (1.0 + s);
    let freq = ell as f64 + 0.5;
    let g = |t: f64| -> f64 {
        let x = t.cos();
        let sx = s * x;
        let ax = x.abs();
        // 1 − s|x| = (1 − s) + s(1 − |x|), with 1 − |x| = 2 sin²(t'/2)
        let t_fold = if x >= 0.0 { t } else { PI - t };
        let sh = (0.5 * t_fold).sin();
        let one_minus_sax = one_minus_s + s * 2.0 * sh * sh;
        let denom = (one_minus_sax * (1.0 + s * ax)).sqrt();
        let psi = 2.0 * sx.asin();
        (freq * psi).cos() / denom
    };

    let mut n = 32usize.max(4 * (ell + 1)).next_power_of_two();
    let trapezoid = |n: usize| -> f64 {
        let h = PI / n as f64;
        let mut acc = 0.5 * (g(0.0) + g(PI));
        for k in 1..n {
            acc += g(k as f64 * h);
        }
        acc * h / PI
    };
    let mut prev = trapezoid(n);
    let mut agreed = 0;
    while n < policy.quadrature_nodes {
        // reuse the previous nodes: add only the odd midpoints
        let h = PI / (2 * n) as f64;
        let mut add = 0.0;
        for k in 0..n {
            add += g((2 * k + 1) as f64 * h);
        }
        let next = 0.5 * prev + add * h / PI;
        n *= 2;
        let diff = (next - prev).abs();
        prev = next;
        if diff <= policy.abs_tol.max(policy.rel_tol * next.abs()) {
            agreed += 1;
            if agreed >= 2 {
                return Ok(next);
            }
        } else {
            agreed = 0;
        }
    }
    Err(Error::Convergence(format!(
        "Mehler-Dirichlet quadrature for l={ell}, theta={theta} did not settle within {} nodes",
        policy.quadrature_nodes
    )))
}
