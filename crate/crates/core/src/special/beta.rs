//! Incomplete Beta and the log-weighted Beta integral.

use statrs::function::beta::checked_beta_inc;

use super::AccuracyPolicy;
use crate::error::{domain, Error, Result};
use crate::quad::tanh_sinh;

/// B(y; a, b) = ∫₀^y x^{a−1}(1−x)^{b−1} dx.
pub fn incomplete_beta(y: f64, a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&y) || !(a > 0.0) || !(b > 0.0) {
        return domain(format!("incomplete beta needs y in [0,1], a,b > 0 (got y={y}, a={a}, b={b})"));
    }
    checked_beta_inc(a, b, y).map_err(|e| Error::Domain(e.to_string()))
}

/// B_ln(a, b) = ∫₀¹ x^{a−1} ln x · (1−x)^{b−1} dx, by tanh–sinh quadrature.
pub fn b_ln(a: f64, b: f64, policy: &AccuracyPolicy) -> Result<f64> {
    if !(a > 0.0) || !(b > 0.0) {
        return domain(format!("B_ln needs a, b > 0 (got a={a}, b={b})"));
    }
    let r = tanh_sinh(0.0, 1.0, policy.abs_tol, policy.rel_tol, |x, from0, to1| {
        let ln_x = if x < 0.5 { from0.ln() } else { (-to1).ln_1p() };
        from0.powf(a - 1.0) * ln_x * to1.powf(b - 1.0)
    })?;
    Ok(r.value)
}
