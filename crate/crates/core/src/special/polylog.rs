//! The polylogarithm Li_s(e^{iψ}) on the unit circle for real s > 1.
//!
//! Two routes:
//! * near z = 1 the expansion in powers of iψ
//!   (Γ(1−s)(−iψ)^{s−1} + Σ ζ(s−k)(iψ)^k/k!, or its logarithmic form for
//!   integer s), which converges for |ψ| < 2π;
//! * elsewhere the direct sum, with its tail Σ_{k≥N} w^k k^{−s} replaced by
//!   w^N Σ_j c_j(w) f^{(j)}(N) where 1/(1 − w e^t) = Σ c_j t^j and
//!   f(k) = k^{−s}.

use std::f64::consts::PI;

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use super::zeta::{harmonic_number, zeta_real};
use super::AccuracyPolicy;
use crate::error::{domain, Error, Result};

/// |ψ| below which [`polylog`] uses the expansion around z = 1.
pub const EXPANSION_CROSSOVER: f64 = 0.5;

const MAX_SERIES_TERMS: usize = 80;

/// Reduces ψ to (−π, π].
fn reduce_angle(psi: f64) -> f64 {
    let r = psi.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

fn integer_order(s: f64) -> Option<u32> {
    if s.fract() == 0.0 && s >= 2.0 && s < 1e6 {
        Some(s as u32)
    } else {
        None
    }
}

/// Li_s(e^{iψ}) for real s > 1.
pub fn polylog(s: f64, psi: f64, policy: &AccuracyPolicy) -> Result<Complex64> {
    if !(s > 1.0) {
        return domain(format!("polylog requires s > 1, got {s}"));
    }
    if !psi.is_finite() {
        return domain("polylog angle must be finite");
    }
    let r = reduce_angle(psi);
    if r == 0.0 {
        return Ok(Complex64::new(zeta_real(s), 0.0));
    }
    if r.abs() < EXPANSION_CROSSOVER {
        PolylogSeries::new(s).evaluate(r, false)
    } else {
        polylog_direct(s, r, policy)
    }
}

/// Accelerated direct summation; valid for any ψ not too close to 0 mod 2π.
pub fn polylog_direct(s: f64, psi: f64, policy: &AccuracyPolicy) -> Result<Complex64> {
    let r = reduce_angle(psi);
    let dist = r.abs().min(2.0 * PI - r.abs());
    if dist == 0.0 {
        return domain("direct polylog summation is singular at z = 1");
    }
    let n = 128usize.max((40.0 / dist).ceil() as usize);
    if n > policy.max_terms {
        return Err(Error::Budget(format!(
            "direct polylog at psi={psi} needs {n} terms"
        )));
    }
    let mut head = Complex64::new(0.0, 0.0);
    for k in (1..n).rev() {
        let kf = k as f64;
        head += Complex64::from_polar(kf.powf(-s), kf * r);
    }
    let w = Complex64::from_polar(1.0, r);
    let one_minus_w = Complex64::new(1.0, 0.0) - w;
    let ratio = w / one_minus_w;
    let nf = n as f64;

    let mut c: Vec<Complex64> = vec![Complex64::new(1.0, 0.0) / one_minus_w];
    // 1/(j−i)! for the recursion c_j = w/(1−w) Σ_{i<j} c_i/(j−i)!
    let mut inv_fact = vec![1.0f64];
    let mut deriv = nf.powf(-s); // |f^{(j)}(N)|
    let mut tail = c[0] * deriv;
    let mut converged = false;
    // some c_j vanish identically (e.g. all even j ≥ 2 at ψ = π), so require
    // two consecutive negligible terms
    let mut small_run = 0;
    for j in 1..MAX_SERIES_TERMS {
        inv_fact.push(inv_fact[j - 1] / j as f64);
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, ci) in c.iter().enumerate() {
            acc += ci * inv_fact[j - i];
        }
        let cj = ratio * acc;
        c.push(cj);
        deriv *= -(s + (j - 1) as f64) / nf;
        let term = cj * deriv;
        tail += term;
        if term.norm() <= 1e-17 * (head.norm() + tail.norm()) {
            small_run += 1;
            if small_run == 2 {
                converged = true;
                break;
            }
        } else {
            small_run = 0;
        }
    }
    if !converged {
        return Err(Error::Convergence(format!(
            "polylog tail series did not converge at s={s}, psi={psi}"
        )));
    }
    Ok(head + Complex64::from_polar(1.0, nf * r) * tail)
}

/// The expansion of Li_s(e^{iψ}) around ψ = 0 truncated after the
/// (iψ)^order term.
///
/// Valid for s > 1 and 0 < |ψ| < 2π; integer s uses the logarithmic form
/// with the harmonic number H_{s−1}.
pub fn polylog_expansion(s: f64, psi: f64, order: usize) -> Result<Complex64> {
    if !(s > 1.0) {
        return domain(format!("polylog expansion requires s > 1, got {s}"));
    }
    if !(psi != 0.0 && psi.abs() < 2.0 * PI) {
        return domain(format!("expansion angle {psi} outside 0 < |psi| < 2pi"));
    }
    Ok(PolylogSeries::new(s).truncated(psi, order, false))
}

/// Li_s(e^{iψ}) − ζ(s), computed without cancellation for small ψ.
pub fn polylog_minus_zeta(s: f64, psi: f64, policy: &AccuracyPolicy) -> Result<Complex64> {
    let r = reduce_angle(psi);
    if r == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if r.abs() < EXPANSION_CROSSOVER {
        PolylogSeries::new(s).evaluate(r, true)
    } else {
        Ok(polylog(s, r, policy)? - zeta_real(s))
    }
}

/// Cached coefficients of the expansion around z = 1 for a fixed s.
#[derive(Debug, Clone)]
pub struct PolylogSeries {
    s: f64,
    integer: Option<u32>,
    zetas: Vec<f64>,
    /// Γ(1−s) for non-integer s, H_{n−1} for integer n.
    singular_coeff: f64,
}

impl PolylogSeries {
    pub fn new(s: f64) -> Self {
        let integer = integer_order(s);
        let zetas = (0..MAX_SERIES_TERMS)
            .map(|k| {
                let arg = s - k as f64;
                if arg == 1.0 {
                    f64::NAN
                } else {
                    zeta_real(arg)
                }
            })
            .collect();
        let singular_coeff = match integer {
            Some(n) => harmonic_number(u64::from(n - 1)),
            None => gamma(1.0 - s),
        };
        Self {
            s,
            integer,
            zetas,
            singular_coeff,
        }
    }

    /// The non-analytic part: Γ(1−s)(−iψ)^{s−1}, or for integer n
    /// (iψ)^{n−1}/(n−1)!·[H_{n−1} − ln(−iψ)].
    fn singular_part(&self, psi: f64) -> Complex64 {
        let mu = Complex64::new(0.0, psi);
        match self.integer {
            Some(n) => {
                let f: f64 = (1..n).map(|j| j as f64).product();
                let log_minus_mu = Complex64::new(psi.abs().ln(), -0.5 * PI * psi.signum());
                mu.powu(n - 1) / f * (self.singular_coeff - log_minus_mu)
            }
            None => {
                let arg = -0.5 * PI * psi.signum() * (self.s - 1.0);
                Complex64::from_polar(self.singular_coeff * psi.abs().powf(self.s - 1.0), arg)
            }
        }
    }

    fn skip_term(&self, k: usize) -> bool {
        matches!(self.integer, Some(n) if k + 1 == n as usize)
    }

    fn truncated(&self, psi: f64, order: usize, drop_constant: bool) -> Complex64 {
        let mu = Complex64::new(0.0, psi);
        let mut sum = self.singular_part(psi);
        let mut pow = Complex64::new(1.0, 0.0);
        for k in 0..=order.min(MAX_SERIES_TERMS - 1) {
            if k > 0 {
                pow = pow * mu / k as f64;
            }
            if (k == 0 && drop_constant) || self.skip_term(k) {
                continue;
            }
            sum += pow * self.zetas[k];
        }
        sum
    }

    /// Sums the expansion until two consecutive nonzero terms are negligible.
    pub fn evaluate(&self, psi: f64, drop_constant: bool) -> Result<Complex64> {
        let mu = Complex64::new(0.0, psi);
        let mut sum = self.singular_part(psi);
        let mut pow = Complex64::new(1.0, 0.0);
        let mut small = 0;
        for k in 0..MAX_SERIES_TERMS {
            if k > 0 {
                pow = pow * mu / k as f64;
            }
            if (k == 0 && drop_constant) || self.skip_term(k) {
                continue;
            }
            let term = pow * self.zetas[k];
            sum += term;
            if term.norm() <= 1e-17 * sum.norm() {
                small += 1;
                if small >= 2 {
                    return Ok(sum);
                }
            } else if term.norm() != 0.0 {
                small = 0;
            }
        }
        Err(Error::Convergence(format!(
            "polylog expansion at s={}, psi={psi} did not converge",
            self.s
        )))
    }
}
