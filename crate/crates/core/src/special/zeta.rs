//! Riemann zeta on the real line and harmonic numbers.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{domain, Result};

/// B_2, B_4, …, B_24.
const BERNOULLI_EVEN: [f64; 12] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
];

/// ζ(s) for real s > 1.
pub fn riemann_zeta(s: f64) -> Result<f64> {
    if !(s > 1.0) {
        return domain(format!("zeta requires s > 1, got {s}"));
    }
    Ok(zeta_real(s))
}

/// ζ(x) for any real x ≠ 1 (analytic continuation).
///
/// Euler–Maclaurin with 20 explicit terms and 12 Bernoulli corrections for
/// x ≥ 0; the functional equation for x < 0.
pub(crate) fn zeta_real(x: f64) -> f64 {
    debug_assert!(x != 1.0);
    if x < 0.0 {
        if x.fract() == 0.0 && (x as i64) % 2 == 0 {
            return 0.0;
        }
        let y = 1.0 - x;
        return 2f64.powf(x) * PI.powf(x - 1.0) * (0.5 * PI * x).sin() * gamma(y) * zeta_real(y);
    }
    const N: usize = 20;
    let nf = N as f64;
    let mut sum = 0.0;
    for k in (1..N).rev() {
        sum += (k as f64).powf(-x);
    }
    let n_pow = nf.powf(-x);
    sum += nf * n_pow / (x - 1.0) + 0.5 * n_pow;
    // Σ_j B_2j/(2j)! · x(x+1)…(x+2j−2) · N^{−x−2j+1}
    let mut rising = x; // x(x+1)…(x+2j−2)
    let mut fact = 2.0; // (2j)!
    let mut npow = n_pow / nf; // N^{−x−2j+1}
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        let term = b / fact * rising * npow;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
        let jj = (j + 1) as f64;
        rising *= (x + 2.0 * jj - 1.0) * (x + 2.0 * jj);
        fact *= (2.0 * jj + 1.0) * (2.0 * jj + 2.0);
        npow /= nf * nf;
    }
    sum
}

/// H_n = Σ_{j=1}^n 1/j, with H_0 = 0.
pub fn harmonic_number(n: u64) -> f64 {
    (1..=n).map(|j| 1.0 / j as f64).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classical_values() {
        assert!((riemann_zeta(2.0).unwrap() - PI * PI / 6.0).abs() < 1e-14);
        assert!((riemann_zeta(4.0).unwrap() - PI.powi(4) / 90.0).abs() < 1e-14);
        assert!((riemann_zeta(3.0).unwrap() - 1.202_056_903_159_594_3).abs() < 1e-14);
        assert!(riemann_zeta(1.0).is_err());
        assert!(riemann_zeta(0.5).is_err());
    }

    #[test]
    fn continuation_values() {
        assert!((zeta_real(0.0) + 0.5).abs() < 1e-14);
        assert!((zeta_real(-1.0) + 1.0 / 12.0).abs() < 1e-14);
        assert_eq!(zeta_real(-2.0), 0.0);
        assert!((zeta_real(-3.0) - 1.0 / 120.0).abs() < 1e-14);
        // ζ(1/2) = −1.4603545088095868
        assert!((zeta_real(0.5) + 1.460_354_508_809_586_8).abs() < 1e-13);
        // ζ(−1/2) = −0.2078862249773545
        assert!((zeta_real(-0.5) + 0.207_886_224_977_354_5).abs() < 1e-13);
    }

    #[test]
    fn brute_force_with_integral_tail() {
        // Σ_{k≤N} k^{-s} + ∫_{N+1/2}^∞ x^{-s} dx, summed smallest-first
        let s = 2.5;
        let n = 10_000_000u64;
        let mut direct = 0.0;
        for k in (1..=n).rev() {
            direct += (k as f64).powf(-s);
        }
        direct += (n as f64 + 0.5).powf(1.0 - s) / (s - 1.0);
        assert!((riemann_zeta(s).unwrap() - direct).abs() < 1e-10);
    }

    #[test]
    fn harmonic_numbers() {
        assert_eq!(harmonic_number(0), 0.0);
        assert_eq!(harmonic_number(1), 1.0);
        assert!((harmonic_number(3) - 11.0 / 6.0).abs() < 1e-15);
    }
}
