//! The zonal bump δ_ε(θ) = Σ_ℓ b_ℓ(ε)(2ℓ+1)/(4π)·P_ℓ(cos θ).
//!
//! The kernel Ĝ of order n is the n-fold self-convolution of the triangle
//! p(s) = max(0, 1 − n|s|), supported in [−1, 1]; order 2 is p⋆p with
//! p(s) = max(0, 1 − 2|s|). Writing h = 1/n, each triangle is h⁻¹ times a
//! box of width h convolved with itself, so
//! Ĝ(s) = h^{n−1}·M_{2n}(s/h) with M_k the centred cardinal B-spline, and
//! ∫Ĝ(s)e^{−isu} ds = [h·sinc²(uh/2)]ⁿ.
//!
//! b_ℓ(ε) = ∫Ĝ(s)e^{−isε√(ℓ(ℓ+1))} ds is computed by quadrature; the closed
//! form serves as an oracle.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::field::HarmonicCoefficients;
use crate::quad::{gauss_legendre_12, gauss_legendre_20};
use crate::series::{odd_weight_power_tail, Truncated};
use crate::special::legendre_fill;
use crate::spectra::PowerSpectrum;

pub const MAX_ORDER: usize = 8;

/// Ĝ as a piecewise polynomial (a scaled cardinal B-spline).
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingKernel {
    order: usize,
    binom: Vec<f64>,
    inv_fact: Vec<f64>,
}

impl SmoothingKernel {
    pub fn new(order: usize) -> Result<Self> {
        if !(2..=MAX_ORDER).contains(&order) {
            return domain(format!("convolution order must be in 2..={MAX_ORDER}, got {order}"));
        }
        let k = 2 * order;
        let mut binom = vec![1.0; k + 1];
        for j in 1..=k {
            binom[j] = binom[j - 1] * (k + 1 - j) as f64 / j as f64;
        }
        let mut inv_fact = vec![1.0; k + 1];
        for j in 1..=k {
            inv_fact[j] = inv_fact[j - 1] / j as f64;
        }
        Ok(Self { order, binom, inv_fact })
    }

    /// p⋆p with p(s) = max(0, 1 − 2|s|).
    pub fn standard() -> Self {
        Self::new(2).expect("order 2 is valid")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Half-width 1/n of each triangle factor and knot spacing of Ĝ.
    pub fn half_width(&self) -> f64 {
        1.0 / self.order as f64
    }

    /// Number of continuous derivatives of Ĝ.
    pub fn smoothness(&self) -> usize {
        2 * self.order - 2
    }

    /// ∫Ĝ = hⁿ.
    pub fn mass(&self) -> f64 {
        self.half_width().powi(self.order as i32)
    }

    /// Non-centred B-spline of order k (degree k − 1) on [0, k], evaluated
    /// from the nearer end of its support.
    fn bspline(&self, k: usize, x: f64) -> f64 {
        if !(x > 0.0 && x < k as f64) {
            return 0.0;
        }
        let y = if x > 0.5 * k as f64 { k as f64 - x } else { x };
        let deg = (k - 1) as i32;
        let mut sum = 0.0;
        let mut c = 1.0; // C(k, j)
        for j in 0..=(y.floor() as usize).min(k) {
            if j > 0 {
                c *= (k + 1 - j) as f64 / j as f64;
            }
            let t = c * (y - j as f64).powi(deg);
            sum += if j % 2 == 0 { t } else { -t };
        }
        sum * self.inv_fact[k - 1]
    }

    /// Ĝ(s).
    pub fn ghat(&self, s: f64) -> f64 {
        let n = self.order;
        let h = self.half_width();
        if s.abs() >= 1.0 {
            return 0.0;
        }
        // evaluate from the support edge so that Ĝ is exactly even
        h.powi(n as i32 - 1) * self.bspline(2 * n, n as f64 - s.abs() / h)
    }

    /// The r-th derivative of Ĝ (one-sided at knots where it jumps).
    pub fn ghat_derivative(&self, r: usize, s: f64) -> f64 {
        let n = self.order;
        let k = 2 * n;
        if r == 0 {
            return self.ghat(s);
        }
        if r >= k || s.abs() >= 1.0 {
            return 0.0;
        }
        let h = self.half_width();
        let x = s / h + n as f64;
        let mut c = 1.0;
        let mut sum = 0.0;
        for j in 0..=r {
            if j > 0 {
                c *= (r + 1 - j) as f64 / j as f64;
            }
            let t = c * self.bspline(k - r, x - j as f64);
            sum += if j % 2 == 0 { t } else { -t };
        }
        h.powi(n as i32 - 1 - r as i32) * sum
    }

    /// K_r = sup |Ĝ^{(r)}|, sampled densely on every polynomial piece.
    pub fn derivative_sup(&self, r: usize) -> f64 {
        let pieces = 2 * self.order;
        let per_piece = 400;
        let h = self.half_width();
        let mut sup = 0.0f64;
        for p in 0..pieces {
            let a = -1.0 + p as f64 * h;
            for i in 0..=per_piece {
                // stay inside the piece so jumps are sampled from both sides
                let s = a + h * (1e-9 + (1.0 - 2e-9) * i as f64 / per_piece as f64);
                sup = sup.max(self.ghat_derivative(r, s).abs());
            }
        }
        sup
    }

    /// Closed form of ∫Ĝ(s)e^{−isu} ds = [h·sinc²(uh/2)]ⁿ.
    pub fn transform(&self, u: f64) -> f64 {
        let h = self.half_width();
        let s = sinc(0.5 * u * h);
        (h * s * s).powi(self.order as i32)
    }

    /// |transform(u)| ≤ hⁿ·min(1, (2/(uh))^{2n}).
    pub fn transform_bound(&self, u: f64) -> f64 {
        let h = self.half_width();
        let r = (2.0 / (u.abs() * h)).min(1.0);
        self.mass() * r.powi(2 * self.order as i32)
    }

    /// 2∫₀¹ Ĝ(s) cos(su) ds by Gauss–Legendre panels on each polynomial
    /// piece, with the panel count growing with u.
    pub fn cosine_transform(&self, u: f64) -> Result<f64> {
        let pieces = self.order;
        let h = self.half_width();
        let mut panels = ((u.abs() * h / 4.0).ceil() as usize).max(1);
        for _ in 0..4 {
            let (hi, lo) = self.panel_pair(pieces, h, panels, |s| s * u, f64::cos);
            if (hi - lo).abs() <= 1e-14 * self.mass() + 1e-12 * hi.abs() {
                return Ok(2.0 * hi);
            }
            panels *= 2;
        }
        Err(Error::Convergence(format!(
            "cosine transform of the bump kernel did not converge at u={u}"
        )))
    }

    /// ∫_{−1}^{1} Ĝ(s)e^{−isu} ds evaluated as a complex integral.
    pub fn operator_transform(&self, u: f64) -> Result<Complex64> {
        let h = self.half_width();
        let panels = ((u.abs() * h / 4.0).ceil() as usize).max(1);
        let rule = gauss_legendre_20();
        let mut re = 0.0;
        let mut im = 0.0;
        for p in 0..2 * self.order {
            let a = -1.0 + p as f64 * h;
            re += rule.integrate(a, a + h, panels, |s| self.ghat(s) * (s * u).cos());
            im -= rule.integrate(a, a + h, panels, |s| self.ghat(s) * (s * u).sin());
        }
        Ok(Complex64::new(re, im))
    }

    fn panel_pair(
        &self,
        pieces: usize,
        h: f64,
        panels: usize,
        phase: impl Fn(f64) -> f64,
        trig: fn(f64) -> f64,
    ) -> (f64, f64) {
        let (r20, r12) = (gauss_legendre_20(), gauss_legendre_12());
        let mut hi = 0.0;
        let mut lo = 0.0;
        for p in 0..pieces {
            let a = p as f64 * h;
            hi += r20.integrate(a, a + h, panels, |s| self.ghat(s) * trig(phase(s)));
            lo += r12.integrate(a, a + h, panels, |s| self.ghat(s) * trig(phase(s)));
        }
        (hi, lo)
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Ĝ(s) for `kernel`.
pub fn ghat_eval(kernel: &SmoothingKernel, s: f64) -> f64 {
    kernel.ghat(s)
}

/// The displayed transform of p⋆p: G(u) = (2/π)²(1 − cos(u/2))²u⁻⁴,
/// written as (16/π²)·sin⁴(u/4)/u⁴ to avoid cancellation.
pub fn g_closed_form(u: f64) -> f64 {
    let s = sinc(0.25 * u) * 0.25;
    16.0 / (PI * PI) * s.powi(4)
}

/// (quadrature of the operator integral) / G(u) for the order-2 kernel.
pub fn transform_normalization(u: f64) -> Result<f64> {
    Ok(SmoothingKernel::standard().cosine_transform(u)? / g_closed_form(u))
}

/// b_ℓ(ε) = ∫Ĝ(s) cos(sε√(ℓ(ℓ+1))) ds.
pub fn b_ell(kernel: &SmoothingKernel, epsilon: f64, ell: usize) -> Result<f64> {
    check_epsilon(epsilon)?;
    if ell == 0 {
        return Err(Error::Range("b_l is defined for l >= 1".into()));
    }
    kernel.cosine_transform(epsilon * mu(ell))
}

fn mu(ell: usize) -> f64 {
    let l = ell as f64;
    (l * (l + 1.0)).sqrt()
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < PI) {
        return domain(format!("epsilon must lie in (0, pi), got {epsilon}"));
    }
    Ok(())
}

/// The coefficients b_ℓ(ε), 1 ≤ ℓ ≤ l_max.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpProfile {
    kernel: SmoothingKernel,
    epsilon: f64,
    /// b[ℓ]; b[0] is unused and zero.
    b: Vec<f64>,
}

impl BumpProfile {
    pub fn new(kernel: &SmoothingKernel, epsilon: f64, l_max: usize) -> Result<Self> {
        check_epsilon(epsilon)?;
        if l_max < 1 {
            return domain("l_max must be at least 1");
        }
        let mut b = vec![0.0];
        let rest: Vec<f64> = (1..=l_max)
            .into_par_iter()
            .map(|l| kernel.cosine_transform(epsilon * mu(l)))
            .collect::<Result<_>>()?;
        b.extend(rest);
        Ok(Self {
            kernel: kernel.clone(),
            epsilon,
            b,
        })
    }

    /// Wraps explicit coefficients (b[0] is ignored).
    pub fn from_coefficients(kernel: &SmoothingKernel, epsilon: f64, b: Vec<f64>) -> Result<Self> {
        check_epsilon(epsilon)?;
        if b.len() < 2 {
            return domain("need at least b_1");
        }
        let mut b = b;
        b[0] = 0.0;
        Ok(Self {
            kernel: kernel.clone(),
            epsilon,
            b,
        })
    }

    pub fn kernel(&self) -> &SmoothingKernel {
        &self.kernel
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn l_max(&self) -> usize {
        self.b.len() - 1
    }

    pub fn b(&self, ell: usize) -> f64 {
        self.b[ell]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.b
    }

    /// κ_ℓm = √((2ℓ+1)/(4π))·b_ℓ for m = 0, else 0.
    pub fn kappa(&self, ell: usize, m: i64) -> f64 {
        if m != 0 || ell == 0 || ell > self.l_max() {
            return 0.0;
        }
        ((2 * ell + 1) as f64 / (4.0 * PI)).sqrt() * self.b[ell]
    }

    /// κ as a harmonic coefficient array.
    pub fn to_harmonic_coefficients(&self) -> HarmonicCoefficients {
        let mut c = HarmonicCoefficients::zeros(self.l_max());
        for l in 1..=self.l_max() {
            c.set(l, 0, Complex64::new(self.kappa(l, 0), 0.0))
                .expect("index in range");
        }
        c
    }

    /// Bound on Σ_{ℓ>L} |b_ℓ|(2ℓ+1)/(4π).
    pub fn delta_tail_bound(&self) -> f64 {
        let n = self.kernel.order;
        let h = self.kernel.half_width();
        let l = self.l_max();
        // |b_ℓ| ≤ hⁿ(2/(εℓh))^{2n} once εℓh ≥ 2, using ε√(ℓ(ℓ+1)) ≥ εℓ
        let start = ((2.0 / (self.epsilon * h)).ceil() as usize).max(l);
        let mut head = 0.0;
        for k in l + 1..=start {
            head += (2 * k + 1) as f64 * self.kernel.mass();
        }
        let c = self.kernel.mass() * (2.0 / (self.epsilon * h)).powi(2 * n as i32);
        (head + c * odd_weight_power_tail(start, (2 * n) as f64)) / (4.0 * PI)
    }

    /// δ_ε(θ) with its truncation bound.
    pub fn delta(&self, theta: f64) -> Result<Truncated> {
        if !(0.0..=PI).contains(&theta) {
            return domain(format!("angle {theta} outside [0, pi]"));
        }
        let mut p = Vec::new();
        legendre_fill(self.l_max(), theta.cos(), &mut p);
        Ok(Truncated::new(self.sum_with(&p), self.delta_tail_bound(), self.l_max()))
    }

    fn sum_with(&self, p: &[f64]) -> f64 {
        let mut s = 0.0;
        for l in (1..=self.l_max()).rev() {
            s += self.b[l] * (2 * l + 1) as f64 * p[l];
        }
        s / (4.0 * PI)
    }

    /// δ_ε at every angle of `thetas`.
    pub fn delta_grid(&self, thetas: &[f64]) -> Result<Vec<f64>> {
        thetas
            .par_iter()
            .map(|&t| self.delta(t).map(|d| d.value))
            .collect()
    }

    /// δ_ε(0) = Σ b_ℓ(2ℓ+1)/(4π).
    pub fn delta_at_pole(&self) -> f64 {
        let mut s = 0.0;
        for l in (1..=self.l_max()).rev() {
            s += self.b[l] * (2 * l + 1) as f64;
        }
        s / (4.0 * PI)
    }

    /// sup over ℓ ∈ [l_from, l_max] of |b_ℓ|(εℓ)².
    pub fn decay_sup(&self, l_from: usize) -> f64 {
        (l_from.max(1)..=self.l_max())
            .map(|l| self.b[l].abs() * (self.epsilon * l as f64).powi(2))
            .fold(0.0, f64::max)
    }

    /// Empirical (c₄, c₅) = (max |b_ℓ|, max |κ_ℓ0|/√(2ℓ+1)).
    pub fn coefficient_constants(&self) -> (f64, f64) {
        let c4 = self.b.iter().map(|b| b.abs()).fold(0.0, f64::max);
        let c5 = (1..=self.l_max())
            .map(|l| self.kappa(l, 0).abs() / ((2 * l + 1) as f64).sqrt())
            .fold(0.0, f64::max);
        (c4, c5)
    }
}

/// δ_ε(θ) for a profile.
pub fn delta_eval(profile: &BumpProfile, theta: f64) -> Result<Truncated> {
    profile.delta(theta)
}

/// c₃ = (2π)⁻¹∫₀^∞ b(u)u du for the kernel's own transform b(u).
///
/// Integrated with Gauss–Legendre panels up to U = 2000/h and an averaged
/// tail ∫_U^∞ (mean of sin^{2n})·hⁿ(2/(uh))^{2n}u du beyond.
pub fn c3_reference(kernel: &SmoothingKernel) -> f64 {
    let h = kernel.half_width();
    let n = kernel.order as i32;
    let period = 2.0 * PI / h;
    let periods = 2000;
    let upper = periods as f64 * period;
    let rule = gauss_legendre_20();
    let body = rule.integrate(0.0, upper, 4 * periods, |u| kernel.transform(u) * u);
    // mean of sin^{2n} over a period is C(2n, n)/4ⁿ
    let mut mean = 1.0;
    for j in 1..=n {
        mean *= (n + j) as f64 / j as f64 / 4.0;
    }
    let tail = kernel.mass() * (2.0 / h).powi(2 * n) * mean * upper.powi(2 - 2 * n) / (2 * n - 2) as f64;
    (body + tail) / (2.0 * PI)
}

#[derive(Debug, Clone, PartialEq)]
pub struct C3Report {
    pub epsilons: Vec<f64>,
    pub delta_at_pole: Vec<f64>,
    /// δ_ε(0)·ε².
    pub scaled: Vec<f64>,
    pub c3_reference: f64,
    /// scaled / c3_reference.
    pub ratios: Vec<f64>,
    /// max scaled / min scaled − 1.
    pub spread: f64,
}

/// δ_ε(0)·ε² over `epsilon_grid` ⊂ (0, 0.2] against the limit c₃.
pub fn c3_check(kernel: &SmoothingKernel, epsilon_grid: &[f64], l_max: usize) -> Result<C3Report> {
    if epsilon_grid.is_empty() {
        return domain("epsilon grid is empty");
    }
    for &e in epsilon_grid {
        if !(e > 0.0 && e <= 0.2) {
            return domain(format!("c3 check needs epsilon in (0, 0.2], got {e}"));
        }
    }
    let c3 = c3_reference(kernel);
    let mut delta0 = Vec::new();
    for &e in epsilon_grid {
        delta0.push(BumpProfile::new(kernel, e, l_max)?.delta_at_pole());
    }
    let scaled: Vec<f64> = delta0.iter().zip(epsilon_grid).map(|(d, e)| d * e * e).collect();
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(C3Report {
        epsilons: epsilon_grid.to_vec(),
        delta_at_pole: delta0,
        ratios: scaled.iter().map(|s| s / c3).collect(),
        spread: max / min - 1.0,
        scaled,
        c3_reference: c3,
    })
}

/// Σ (2ℓ+1)/(4π)·b_ℓ²/C_ℓ, split at L = ⌊1/ε⌋.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralWeight {
    pub total: Truncated,
    pub split: usize,
    /// Terms ℓ ≤ split.
    pub head: f64,
    /// Terms split < ℓ ≤ l_max.
    pub tail: f64,
}

pub fn spectral_weight_sum(profile: &BumpProfile, spec: &PowerSpectrum) -> Result<SpectralWeight> {
    if profile.l_max() != spec.l_max() {
        return domain(format!(
            "bump profile l_max {} differs from spectrum l_max {}",
            profile.l_max(),
            spec.l_max()
        ));
    }
    let split = ((1.0 / profile.epsilon).floor() as usize).min(profile.l_max());
    let term = |l: usize| (2 * l + 1) as f64 / (4.0 * PI) * profile.b[l] * profile.b[l] / spec.value_unchecked(l);
    let head: f64 = (1..=split).rev().map(term).sum();
    let tail: f64 = (split + 1..=profile.l_max()).rev().map(term).sum();

    // b² ≤ h^{2n}(2/(εℓh))^{4n} and 1/C_ℓ ≤ c₀ℓ^{α_eff}
    let n = profile.kernel.order as i32;
    let h = profile.kernel.half_width();
    let l = profile.l_max();
    let p = (4 * n) as f64 - spec.effective_alpha();
    let tail_bound = if profile.epsilon * h * l as f64 >= 2.0 && p > 2.0 {
        let c = profile.kernel.mass().powi(2) * (2.0 / (profile.epsilon * h)).powi(4 * n) * spec.c0();
        c * odd_weight_power_tail(l, p) / (4.0 * PI)
    } else {
        f64::INFINITY
    };
    Ok(SpectralWeight {
        total: Truncated::new(head + tail, tail_bound, l),
        split,
        head,
        tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::synthesize;
    use crate::point::SpherePoint;
    use crate::quad::tanh_sinh;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ghat_examples() {
        let k = SmoothingKernel::standard();
        assert_eq!(ghat_eval(&k, 1.2), 0.0);
        for s in [0.1, 0.3, 0.7] {
            assert_eq!(k.ghat(s), k.ghat(-s));
        }
        // ∫p(t)² dt with p(t) = max(0, 1 − 2|t|)
        let p = |t: f64| (1.0 - 2.0 * t.abs()).max(0.0);
        let oracle = gauss_legendre_20().integrate(-0.5, 0.5, 2, |t| p(t) * p(t));
        assert!((k.ghat(0.0) - oracle).abs() < 1e-15);
        assert!((k.ghat(0.0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ghat_matches_numerical_convolution() {
        for order in 2..=4 {
            let k = SmoothingKernel::new(order).unwrap();
            let h = k.half_width();
            let tri = |t: f64| (1.0 - t.abs() / h).max(0.0);
            // one convolution step at a time on a fine grid would be slow;
            // check order 2 exactly and the mass for higher orders
            if order == 2 {
                for s in [0.0f64, 0.2, 0.49, 0.5, 0.77, 0.99] {
                    let mut knots = vec![-h, 0.0, h, s - h, s, s + h];
                    knots.retain(|t| (-h..=h).contains(t));
                    knots.sort_by(f64::total_cmp);
                    let v: f64 = knots
                        .windows(2)
                        .map(|w| gauss_legendre_20().integrate(w[0], w[1], 1, |t| tri(t) * tri(s - t)))
                        .sum();
                    assert!((k.ghat(s) - v).abs() < 1e-10, "s={s}");
                }
            }
            let mass = gauss_legendre_20().integrate(-1.0, 1.0, 2 * order, |s| k.ghat(s));
            assert!((mass - k.mass()).abs() < 1e-14);
        }
    }

    #[test]
    fn derivatives_integrate_back() {
        let k = SmoothingKernel::new(3).unwrap();
        for r in 1..=3 {
            for &s in &[-0.6, -0.1, 0.25, 0.8] {
                let d = 1e-6;
                let fd = (k.ghat_derivative(r - 1, s + d) - k.ghat_derivative(r - 1, s - d)) / (2.0 * d);
                assert!((fd - k.ghat_derivative(r, s)).abs() < 1e-5 * (1.0 + fd.abs()), "r={r} s={s}");
            }
        }
        assert!(k.derivative_sup(0) > 0.0);
    }

    #[test]
    fn closed_form_examples() {
        assert!((g_closed_form(1e-9) - 1.0 / (16.0 * PI * PI)).abs() < 1e-18);
        assert!((g_closed_form(2.0 * PI) - PI.powi(-6)).abs() < 1e-17);
        let u: f64 = 3.7;
        let direct = (2.0 / PI).powi(2) * (1.0 - (u / 2.0).cos()).powi(2) / u.powi(4);
        assert!((g_closed_form(u) - direct).abs() < 1e-16);
    }

    #[test]
    fn normalization_is_constant() {
        let ratios: Vec<f64> = [1.0, 3.0, 10.0].iter().map(|&u| transform_normalization(u).unwrap()).collect();
        for r in &ratios {
            assert!((r / ratios[0] - 1.0).abs() < 1e-10);
        }
        assert!((ratios[0] - 4.0 * PI * PI).abs() < 1e-9);
    }

    #[test]
    fn quadrature_matches_closed_transform() {
        for order in [2, 3, 5] {
            let k = SmoothingKernel::new(order).unwrap();
            for u in [0.0, 0.5, 7.0, 40.0, 333.3, 2500.0] {
                let q = k.cosine_transform(u).unwrap();
                assert!((q - k.transform(u)).abs() < 1e-14, "order={order} u={u}");
                assert!(k.transform(u).abs() <= k.transform_bound(u) * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn b_ell_properties() {
        let k = SmoothingKernel::standard();
        for &(e, l) in &[(0.1, 1), (0.1, 50), (0.05, 4000), (2.0, 3)] {
            let b = b_ell(&k, e, l).unwrap();
            assert!(b.abs() <= k.mass() + 1e-15);
            let z = k.operator_transform(e * mu(l)).unwrap();
            assert!(z.im.abs() < 1e-12);
            assert!((z.re - b).abs() < 1e-13);
        }
        assert!((b_ell(&k, 1e-9, 1).unwrap() - k.mass()).abs() < 1e-15);
        assert!(b_ell(&k, 0.0, 1).is_err());
        assert!(b_ell(&k, 0.1, 0).is_err());
    }

    #[test]
    fn c3_reference_closed_form() {
        // (2π)⁻¹·4∫₀^∞ sin⁴v/v³ dv = 2 ln 2/π
        let c3 = c3_reference(&SmoothingKernel::standard());
        assert!((c3 - 2.0 * 2f64.ln() / PI).abs() < 1e-8, "{c3}");
        let integral = tanh_sinh(0.0, 1.0, 1e-9, 1e-7, |x, _, to1| {
            let v = x / to1;
            let s = if v < 1e-4 { v * (1.0 - v * v / 6.0) } else { v.sin() };
            s.powi(4) / v.powi(3) / (to1 * to1)
        })
        .unwrap();
        assert!((integral.value - 2f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn reconstruction_through_harmonics() {
        let prof = BumpProfile::new(&SmoothingKernel::standard(), 0.3, 120).unwrap();
        let coeffs = prof.to_harmonic_coefficients();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let thetas: Vec<f64> = (0..20).map(|_| rng.random_range(0.0..PI)).collect();
        let pts: Vec<SpherePoint> = thetas.iter().map(|&t| SpherePoint::from_angles(t, rng.random_range(0.0..6.0))).collect();
        let synth = synthesize(&coeffs, &pts).unwrap();
        for (t, s) in thetas.iter().zip(synth) {
            assert!((prof.delta(*t).unwrap().value - s).abs() < 1e-10);
        }
    }

    #[test]
    fn spectral_weight_single_term() {
        let k = SmoothingKernel::standard();
        let prof = BumpProfile::from_coefficients(&k, 0.1, vec![0.0, 1.0]).unwrap();
        let spec = PowerSpectrum::power_law(3.0, 1).unwrap();
        let w = spectral_weight_sum(&prof, &spec).unwrap();
        assert!((w.total.value - 3.0 / (4.0 * PI)).abs() < 1e-16);
        let spec2 = PowerSpectrum::power_law(3.0, 2).unwrap();
        assert!(spectral_weight_sum(&prof, &spec2).is_err());
    }

    #[test]
    fn coefficient_bounds() {
        let prof = BumpProfile::new(&SmoothingKernel::standard(), 0.2, 400).unwrap();
        let (c4, c5) = prof.coefficient_constants();
        assert!(c4 <= prof.kernel().mass() + 1e-15);
        assert!(c5 <= c4 / (4.0 * PI).sqrt() + 1e-15);
        assert_eq!(prof.kappa(3, 1), 0.0);
    }

    proptest! {
        #[test]
        fn ghat_is_even_nonnegative_and_supported(order in 2usize..=6, s in -1.5f64..1.5) {
            let k = SmoothingKernel::new(order).unwrap();
            let g = k.ghat(s);
            prop_assert!(g >= 0.0);
            prop_assert_eq!(g, k.ghat(-s));
            if s.abs() >= 1.0 {
                prop_assert_eq!(g, 0.0);
            }
        }
    }
}
