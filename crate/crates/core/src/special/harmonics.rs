//! Orthonormal spherical harmonics.
//!
//! Y_ℓm(ϑ, φ) = P̄_ℓm(cos ϑ) e^{imφ} where P̄_ℓm carries the Condon–Shortley
//! phase and the normalization that makes
//! Σ_m conj(Y_ℓm(x)) Y_ℓm(y) = (2ℓ+1)/(4π) P_ℓ(⟨x, y⟩), with
//! Y_{ℓ,−m} = (−1)^m conj(Y_ℓm).
//!
//! The sectoral seeds P̄_mm ∝ sin^m ϑ underflow for large m near the poles
//! while the columns they start can grow back to O(1) at higher ℓ, so the
//! recurrence runs in a scaled representation (value · 2^(−600·k)); entries
//! still carrying a scale are below 2^−600 and are emitted as zero.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::point::SpherePoint;

const SCALE: f64 = 4.149515568880993e180; // 2^600
const INV_SCALE: f64 = 2.409919865102884e-181; // 2^-600

/// Recurrence tables for P̄_ℓm with ℓ ≤ l_max.
#[derive(Debug, Clone)]
pub struct NormalizedLegendre {
    l_max: usize,
    sqrt_int: Vec<f64>,
}

impl NormalizedLegendre {
    pub fn new(l_max: usize) -> Self {
        let sqrt_int = (0..=2 * l_max + 3).map(|k| (k as f64).sqrt()).collect();
        Self { l_max, sqrt_int }
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    /// Visits every order m = 0..=max_m with the column P̄_ℓm(cos θ),
    /// ℓ = m..=l_max (slice index ℓ − m).
    pub fn for_each_column<F>(&self, theta: f64, max_m: usize, mut visit: F)
    where
        F: FnMut(usize, &[f64]),
    {
        let l_max = self.l_max;
        let max_m = max_m.min(l_max);
        let x = theta.cos();
        let st = theta.sin().abs();
        let sq = &self.sqrt_int;
        let mut column = vec![0.0; l_max + 1];

        // P̄_mm in scaled form: actual = pmm · 2^(−600·pmm_scale)
        let mut pmm = 1.0 / (4.0 * PI).sqrt();
        let mut pmm_scale: u32 = 0;
        for m in 0..=max_m {
            if m > 0 {
                if st == 0.0 {
                    for v in column.iter_mut().take(l_max - m + 1) {
                        *v = 0.0;
                    }
                    visit(m, &column[..l_max - m + 1]);
                    continue;
                }
                pmm *= -(sq[2 * m + 1] / sq[2 * m]) * st;
                if pmm.abs() < INV_SCALE {
                    pmm *= SCALE;
                    pmm_scale += 1;
                }
            }
            let len = l_max - m + 1;
            let col = &mut column[..len];
            let mut scale = pmm_scale;
            col[0] = if scale == 0 { pmm } else { 0.0 };
            if len > 1 {
                let mf = m;
                // P̄_{m+1,m} = √(2m+3) x P̄_mm
                let mut p_prev = pmm;
                let mut p_cur = sq[2 * mf + 3] * x * pmm;
                let mut a_prev = sq[2 * mf + 3];
                col[1] = if scale == 0 { p_cur } else { 0.0 };
                for (i, slot) in col.iter_mut().enumerate().skip(2) {
                    let l = mf + i;
                    let a = sq[2 * l - 1] * sq[2 * l + 1] / (sq[l - mf] * sq[l + mf]);
                    let p_next = a * (x * p_cur - p_prev / a_prev);
                    p_prev = p_cur;
                    p_cur = p_next;
                    a_prev = a;
                    if scale > 0 && p_cur.abs() >= 1.0 {
                        p_cur *= INV_SCALE;
                        p_prev *= INV_SCALE;
                        scale -= 1;
                    }
                    *slot = if scale == 0 { p_cur } else { 0.0 };
                }
            }
            visit(m, col);
        }
    }
}

/// Y_ℓm at `point` in the orthonormal, Condon–Shortley convention.
pub fn spherical_harmonic(ell: usize, m: i64, point: &SpherePoint) -> Result<Complex64> {
    let am = m.unsigned_abs() as usize;
    if am > ell {
        return domain(format!("order |m| = {am} exceeds degree {ell}"));
    }
    let table = NormalizedLegendre::new(ell);
    let mut value = 0.0;
    let theta = point.theta();
    table.for_each_column(theta, am, |mm, col| {
        if mm == am {
            value = col[ell - am];
        }
    });
    let phase = Complex64::from_polar(1.0, am as f64 * point.phi());
    let y = value * phase;
    if m >= 0 {
        Ok(y)
    } else if am.is_multiple_of(2) {
        Ok(y.conj())
    } else {
        Ok(-y.conj())
    }
}

/// Index of (ℓ, m), m ≥ 0, in the triangular layout used by [`ylm_nonnegative`].
pub fn triangular_index(ell: usize, m: usize) -> usize {
    ell * (ell + 1) / 2 + m
}

/// Y_ℓm(point) for 0 ≤ m ≤ ℓ ≤ l_max in triangular order.
pub fn ylm_nonnegative(table: &NormalizedLegendre, point: &SpherePoint) -> Vec<Complex64> {
    let l_max = table.l_max();
    let mut out = vec![Complex64::new(0.0, 0.0); triangular_index(l_max, l_max) + 1];
    let phi = point.phi();
    table.for_each_column(point.theta(), l_max, |m, col| {
        let phase = Complex64::from_polar(1.0, m as f64 * phi);
        for (i, &p) in col.iter().enumerate() {
            out[triangular_index(m + i, m)] = p * phase;
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::legendre_p;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn north_pole_values() {
        let n = SpherePoint::NORTH_POLE;
        let y = spherical_harmonic(3, 0, &n).unwrap();
        assert!((y.re - (7.0 / (4.0 * PI)).sqrt()).abs() < 1e-15);
        assert_eq!(y.im, 0.0);
        assert_eq!(spherical_harmonic(3, 2, &n).unwrap(), Complex64::new(0.0, 0.0));
        assert!(spherical_harmonic(3, 4, &n).is_err());
    }

    #[test]
    fn closed_forms() {
        let p = SpherePoint::from_angles(0.7, 1.3);
        let (t, f) = (0.7f64, 1.3f64);
        let y10 = spherical_harmonic(1, 0, &p).unwrap();
        assert!((y10.re - (3.0 / (4.0 * PI)).sqrt() * t.cos()).abs() < 1e-14);
        let y11 = spherical_harmonic(1, 1, &p).unwrap();
        let expect = -(3.0 / (8.0 * PI)).sqrt() * t.sin() * Complex64::from_polar(1.0, f);
        assert!((y11 - expect).norm() < 1e-14);
        let y22 = spherical_harmonic(2, 2, &p).unwrap();
        let expect = 0.25 * (15.0 / (2.0 * PI)).sqrt() * t.sin().powi(2) * Complex64::from_polar(1.0, 2.0 * f);
        assert!((y22 - expect).norm() < 1e-14);
        let y2m1 = spherical_harmonic(2, -1, &p).unwrap();
        let y21 = spherical_harmonic(2, 1, &p).unwrap();
        assert!((y2m1 + y21.conj()).norm() < 1e-15);
    }

    #[test]
    fn addition_theorem() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x = SpherePoint::random(&mut rng);
            let y = SpherePoint::random(&mut rng);
            let mut sum = Complex64::new(0.0, 0.0);
            for m in -5..=5 {
                sum += spherical_harmonic(5, m, &x).unwrap().conj() * spherical_harmonic(5, m, &y).unwrap();
            }
            let rhs = 11.0 / (4.0 * PI) * legendre_p(5, x.dot(&y).clamp(-1.0, 1.0)).unwrap();
            assert!((sum.re - rhs).abs() < 1e-10);
            assert!(sum.im.abs() < 1e-10);
        }
    }

    #[test]
    fn addition_theorem_at_high_degree_near_pole() {
        // exercises the scaled recurrence: sin^m θ underflows for m ~ 1000 at θ = 0.05
        let l = 3000usize;
        let table = NormalizedLegendre::new(l);
        for &theta in &[0.05, 0.3, 1.5] {
            let mut sum = 0.0;
            table.for_each_column(theta, l, |m, col| {
                let p = col[l - m];
                sum += if m == 0 { p * p } else { 2.0 * p * p };
            });
            let rhs = (2 * l + 1) as f64 / (4.0 * PI);
            assert!((sum / rhs - 1.0).abs() < 1e-10, "theta={theta}: {sum} vs {rhs}");
        }
    }
}
