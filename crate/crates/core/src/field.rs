//! Field realizations T(x) = Σ_{ℓ≥1} Σ_m a_ℓm Y_ℓm(x): sampling, synthesis,
//! exact covariance and the pseudo-differential operator (1 − Δ)^{k/2}.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::point::SpherePoint;
use crate::rng::{substream, Purpose};
use crate::series::Truncated;
use crate::special::{legendre_fill, NormalizedLegendre};
use crate::spectra::PowerSpectrum;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Relative size of Im T(x) tolerated before synthesis reports a broken
/// real-field symmetry.
pub const IMAGINARY_TOLERANCE: f64 = 1e-9;

/// a_ℓm for 1 ≤ ℓ ≤ l_max, −ℓ ≤ m ≤ ℓ, stored at ℓ² − 1 + (m + ℓ).
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicCoefficients {
    l_max: usize,
    a: Vec<Complex64>,
}

impl HarmonicCoefficients {
    pub fn zeros(l_max: usize) -> Self {
        Self {
            l_max,
            a: vec![ZERO; (l_max + 1) * (l_max + 1) - 1],
        }
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    fn index(ell: usize, m: i64) -> usize {
        (ell * ell + ell - 1).wrapping_add_signed(m as isize)
    }

    fn check(&self, ell: usize, m: i64) -> Result<()> {
        if ell == 0 || ell > self.l_max || m.unsigned_abs() as usize > ell {
            return Err(Error::Range(format!(
                "(l, m) = ({ell}, {m}) outside 1 <= l <= {}, |m| <= l",
                self.l_max
            )));
        }
        Ok(())
    }

    pub fn get(&self, ell: usize, m: i64) -> Result<Complex64> {
        self.check(ell, m)?;
        Ok(self.a[Self::index(ell, m)])
    }

    /// Sets a single entry without touching its partner a_{ℓ,−m}.
    pub fn set_raw(&mut self, ell: usize, m: i64, value: Complex64) -> Result<()> {
        self.check(ell, m)?;
        self.a[Self::index(ell, m)] = value;
        Ok(())
    }

    /// Sets a_ℓm and a_{ℓ,−m} = (−1)^m conj(a_ℓm); for m = 0 the imaginary
    /// part is discarded.
    pub fn set(&mut self, ell: usize, m: i64, value: Complex64) -> Result<()> {
        self.check(ell, m)?;
        if m == 0 {
            self.a[Self::index(ell, 0)] = Complex64::new(value.re, 0.0);
            return Ok(());
        }
        let (mp, v) = if m > 0 {
            (m, value)
        } else {
            (-m, value.conj() * sign(-m))
        };
        self.a[Self::index(ell, mp)] = v;
        self.a[Self::index(ell, -mp)] = v.conj() * sign(mp);
        Ok(())
    }

    /// Largest |a_{ℓ,−m} − (−1)^m conj(a_ℓm)| and |Im a_ℓ0|.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for l in 1..=self.l_max {
            worst = worst.max(self.a[Self::index(l, 0)].im.abs());
            for m in 1..=l as i64 {
                let d = self.a[Self::index(l, -m)] - self.a[Self::index(l, m)].conj() * sign(m);
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// Coefficient-wise sum; both operands must share l_max.
    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if self.l_max != other.l_max {
            return domain("coefficient arrays have different l_max");
        }
        Ok(Self {
            l_max: self.l_max,
            a: self.a.iter().zip(&other.a).map(|(x, y)| x + y).collect(),
        })
    }

    /// a_ℓm ↦ f(ℓ)·a_ℓm.
    pub fn scale_by_degree(&self, f: impl Fn(usize) -> f64) -> Self {
        let mut out = self.clone();
        for l in 1..=self.l_max {
            let s = f(l);
            let base = l * l - 1;
            for v in &mut out.a[base..base + 2 * l + 1] {
                *v *= s;
            }
        }
        out
    }

    /// (ℓ, m, a_ℓm) in storage order: ℓ ascending, m from −ℓ to ℓ.
    pub fn iter(&self) -> impl Iterator<Item = (usize, i64, Complex64)> + '_ {
        (1..=self.l_max).flat_map(move |l| {
            (-(l as i64)..=l as i64).map(move |m| (l, m, self.a[Self::index(l, m)]))
        })
    }
}

fn sign(m: i64) -> f64 {
    if m % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Independent a_ℓm with E|a_ℓm|² = C_ℓ and the real-field symmetry.
///
/// Draw order is fixed (ℓ ascending, m = 0..ℓ; real part before imaginary)
/// so a given stream always yields the same array.
pub fn sample_coefficients<R: Rng + ?Sized>(spec: &PowerSpectrum, rng: &mut R) -> HarmonicCoefficients {
    let mut out = HarmonicCoefficients::zeros(spec.l_max());
    for l in 1..=spec.l_max() {
        let c = spec.value_unchecked(l);
        let sd0 = c.sqrt();
        let sd = (0.5 * c).sqrt();
        let z: f64 = rng.sample(StandardNormal);
        out.a[HarmonicCoefficients::index(l, 0)] = Complex64::new(sd0 * z, 0.0);
        for m in 1..=l as i64 {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let v = Complex64::new(sd * re, sd * im);
            out.a[HarmonicCoefficients::index(l, m)] = v;
            out.a[HarmonicCoefficients::index(l, -m)] = v.conj() * sign(m);
        }
    }
    out
}

/// One sampled field together with the spectrum it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRealization {
    coefficients: HarmonicCoefficients,
    spectrum: PowerSpectrum,
    seed: u64,
    replicate: u64,
}

impl FieldRealization {
    /// Draws replicate `replicate` of the experiment seeded by `seed`.
    pub fn sample(spec: &PowerSpectrum, seed: u64, replicate: u64) -> Self {
        let mut rng = substream(seed, replicate, Purpose::Coefficients);
        Self {
            coefficients: sample_coefficients(spec, &mut rng),
            spectrum: spec.clone(),
            seed,
            replicate,
        }
    }

    /// Wraps explicit coefficients; l_max must match the spectrum.
    pub fn from_coefficients(coefficients: HarmonicCoefficients, spectrum: PowerSpectrum) -> Result<Self> {
        if coefficients.l_max() != spectrum.l_max() {
            return domain("coefficient and spectrum l_max differ");
        }
        Ok(Self {
            coefficients,
            spectrum,
            seed: 0,
            replicate: 0,
        })
    }

    pub fn coefficients(&self) -> &HarmonicCoefficients {
        &self.coefficients
    }

    pub fn spectrum(&self) -> &PowerSpectrum {
        &self.spectrum
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replicate(&self) -> u64 {
        self.replicate
    }

    /// True when the spectrum's infinite series Σ(2ℓ+1)C_ℓ diverges, i.e.
    /// the field only exists because of the truncation.
    pub fn variance_diverges_in_limit(&self) -> bool {
        !(self.spectrum.effective_alpha() > 2.0)
    }

    pub fn evaluate(&self, points: &[SpherePoint]) -> Result<Vec<f64>> {
        synthesize(&self.coefficients, points)
    }
}

/// T(x) at every point.
///
/// Points sharing a colatitude reuse one pass of the associated Legendre
/// recurrence, so evaluation along a ring costs O(l_max²) once plus
/// O(l_max) per point.
pub fn synthesize(coeffs: &HarmonicCoefficients, points: &[SpherePoint]) -> Result<Vec<f64>> {
    let mut rings: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        rings.entry(p.theta().to_bits()).or_default().push(i);
    }
    let table = NormalizedLegendre::new(coeffs.l_max);
    let rings: Vec<(f64, Vec<usize>)> = rings.into_iter().map(|(k, v)| (f64::from_bits(k), v)).collect();
    let per_ring: Vec<Vec<f64>> = rings
        .par_iter()
        .map(|(theta, idx)| synthesize_ring(coeffs, &table, *theta, idx.iter().map(|&i| points[i].phi())))
        .collect::<Result<_>>()?;
    let mut out = vec![0.0; points.len()];
    for ((_, idx), vals) in rings.iter().zip(per_ring) {
        for (&i, v) in idx.iter().zip(vals) {
            out[i] = v;
        }
    }
    Ok(out)
}

fn synthesize_ring(
    coeffs: &HarmonicCoefficients,
    table: &NormalizedLegendre,
    theta: f64,
    phis: impl Iterator<Item = f64>,
) -> Result<Vec<f64>> {
    let l_max = coeffs.l_max;
    let mut pos = vec![ZERO; l_max + 1];
    let mut neg = vec![ZERO; l_max + 1];
    table.for_each_column(theta, l_max, |m, col| {
        let mi = m as i64;
        let (mut sp, mut sn) = (ZERO, ZERO);
        for (i, &p) in col.iter().enumerate() {
            let l = m + i;
            if l == 0 {
                continue;
            }
            sp += coeffs.a[HarmonicCoefficients::index(l, mi)] * p;
            if m > 0 {
                sn += coeffs.a[HarmonicCoefficients::index(l, -mi)] * p;
            }
        }
        pos[m] = sp;
        neg[m] = sn * sign(mi);
    });
    let magnitude: f64 = pos.iter().chain(&neg).map(|z| z.norm()).sum();
    phis.map(|phi| {
        let step = Complex64::from_polar(1.0, phi);
        let mut rot = Complex64::new(1.0, 0.0);
        let mut t = pos[0];
        for m in 1..=l_max {
            // resynchronize the rotating phase to keep its error at rounding level
            rot = if m % 64 == 0 {
                Complex64::from_polar(1.0, m as f64 * phi)
            } else {
                rot * step
            };
            t += pos[m] * rot + neg[m] * rot.conj();
        }
        if t.im.abs() > IMAGINARY_TOLERANCE * magnitude.max(f64::MIN_POSITIVE) {
            return Err(Error::Consistency(format!(
                "field value has imaginary part {:e} (scale {:e}); coefficients break the real-field symmetry",
                t.im, magnitude
            )));
        }
        Ok(t.re)
    })
    .collect()
}

/// E T(x)T(y) = Σ (2ℓ+1)/(4π)·C_ℓ·P_ℓ(⟨x, y⟩).
pub fn covariance(spec: &PowerSpectrum, x: &SpherePoint, y: &SpherePoint) -> Truncated {
    covariance_at(spec, x.dot(y).clamp(-1.0, 1.0))
}

/// The covariance as a function of t = cos θ.
pub fn covariance_at(spec: &PowerSpectrum, t: f64) -> Truncated {
    let l_max = spec.l_max();
    let mut p = Vec::new();
    legendre_fill(l_max, t.clamp(-1.0, 1.0), &mut p);
    let mut sum = 0.0;
    for l in (1..=l_max).rev() {
        sum += (2 * l + 1) as f64 * spec.value_unchecked(l) * p[l];
    }
    let fpi = 4.0 * PI;
    Truncated::new(sum / fpi, spec.odd_weight_tail(l_max) / fpi, l_max)
}

/// (1 + ℓ(ℓ+1))^{k/2}.
pub fn pseudo_diff_factor(ell: usize, k: u32) -> f64 {
    let x = 1.0 + (ell * (ell + 1)) as f64;
    let half = x.powi((k / 2) as i32);
    if k.is_multiple_of(2) {
        half
    } else {
        half * x.sqrt()
    }
}

/// T^{(k)} = (1 − Δ)^{k/2} T: coefficients scaled by (1 + ℓ(ℓ+1))^{k/2}.
///
/// Never fails: the truncated field always has finite variance. Use
/// [`FieldRealization::variance_diverges_in_limit`] to detect spectra whose
/// untruncated counterpart would not.
pub fn pseudo_diff(realization: &FieldRealization, k: u32) -> FieldRealization {
    FieldRealization {
        coefficients: realization
            .coefficients
            .scale_by_degree(|l| pseudo_diff_factor(l, k)),
        spectrum: realization.spectrum.derived_unchecked(k),
        seed: realization.seed,
        replicate: realization.replicate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::random_rotation;
    use crate::special::spherical_harmonic;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn direct_eval(c: &HarmonicCoefficients, p: &SpherePoint) -> Complex64 {
        c.iter()
            .map(|(l, m, a)| a * spherical_harmonic(l, m, p).unwrap())
            .sum()
    }

    #[test]
    fn symmetry_of_samples() {
        let spec = PowerSpectrum::power_law(3.0, 6).unwrap();
        let f = FieldRealization::sample(&spec, 1, 0);
        let c = f.coefficients();
        assert_eq!(c.get(3, -2).unwrap(), c.get(3, 2).unwrap().conj());
        assert_eq!(c.get(3, -1).unwrap(), -c.get(3, 1).unwrap().conj());
        assert_eq!(c.symmetry_defect(), 0.0);
        assert!(c.get(0, 0).is_err() && c.get(7, 0).is_err() && c.get(2, 3).is_err());
    }

    #[test]
    fn synthesis_examples() {
        let mut c = HarmonicCoefficients::zeros(5);
        let pts: Vec<SpherePoint> = (0..7).map(|i| SpherePoint::from_angles(0.4 * i as f64, 1.1 * i as f64)).collect();
        assert!(synthesize(&c, &pts).unwrap().iter().all(|v| *v == 0.0));
        c.set(1, 0, Complex64::new(1.0, 0.0)).unwrap();
        for (p, v) in pts.iter().zip(synthesize(&c, &pts).unwrap()) {
            assert!((v - (3.0 / (4.0 * PI)).sqrt() * p.cos_theta()).abs() < 1e-15);
        }
    }

    #[test]
    fn synthesis_matches_direct_harmonic_sum() {
        let spec = PowerSpectrum::power_law(2.5, 12).unwrap();
        let f = FieldRealization::sample(&spec, 5, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut pts: Vec<SpherePoint> = (0..10).map(|_| SpherePoint::random(&mut rng)).collect();
        pts.push(SpherePoint::NORTH_POLE);
        pts.push(SpherePoint::from_angles(PI, 0.0));
        pts.push(SpherePoint::from_angles(PI / 2.0, 0.3));
        pts.push(SpherePoint::from_angles(PI / 2.0, 2.3));
        let fast = f.evaluate(&pts).unwrap();
        for (p, v) in pts.iter().zip(fast) {
            let d = direct_eval(f.coefficients(), p);
            assert!((d.re - v).abs() < 1e-12, "{} vs {v}", d.re);
            assert!(d.im.abs() < 1e-12);
        }
    }

    #[test]
    fn broken_symmetry_is_reported() {
        let mut c = HarmonicCoefficients::zeros(3);
        c.set_raw(2, 1, Complex64::new(1.0, 0.0)).unwrap();
        let r = synthesize(&c, &[SpherePoint::from_angles(1.0, 0.5)]);
        assert!(matches!(r, Err(Error::Consistency(_))));
    }

    #[test]
    fn covariance_examples() {
        let spec = PowerSpectrum::power_law(3.0, 40).unwrap();
        let x = SpherePoint::from_angles(0.3, 0.2);
        assert_eq!(covariance(&spec, &x, &x).value, spec.total_variance().value);
        let one = PowerSpectrum::power_law(3.0, 1).unwrap();
        let a = SpherePoint::NORTH_POLE;
        let b = SpherePoint::from_angles(PI / 2.0, 0.0);
        assert!(covariance(&one, &a, &b).value.abs() < 1e-16);
    }

    #[test]
    fn covariance_is_rotation_invariant() {
        let spec = PowerSpectrum::power_law(3.5, 30).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let x = SpherePoint::random(&mut rng);
            let y = SpherePoint::random(&mut rng);
            let r = random_rotation(&mut rng);
            let c1 = covariance(&spec, &x, &y).value;
            let c2 = covariance(&spec, &x.rotate(&r), &y.rotate(&r)).value;
            assert!((c1 - c2).abs() < 1e-12);
        }
    }

    #[test]
    fn pseudo_diff_examples() {
        let spec = PowerSpectrum::power_law(5.0, 4).unwrap();
        let mut c = HarmonicCoefficients::zeros(4);
        c.set(1, 0, Complex64::new(1.0, 0.0)).unwrap();
        let f = FieldRealization::from_coefficients(c, spec.clone()).unwrap();
        let d = pseudo_diff(&f, 1);
        assert!((d.coefficients().get(1, 0).unwrap().re - 3f64.sqrt()).abs() < 1e-15);
        // spectral factor (1 + 12)² at ℓ = 3, k = 2
        assert_eq!(pseudo_diff_factor(3, 2).powi(2), 169.0);
        let s7 = PowerSpectrum::power_law(7.0, 5).unwrap();
        assert_eq!(s7.derived(2).unwrap().value(3).unwrap() / s7.value(3).unwrap(), 169.0);
        assert!(!d.variance_diverges_in_limit());
        assert!(pseudo_diff(&f, 2).variance_diverges_in_limit());

        let g = FieldRealization::sample(&PowerSpectrum::power_law(7.0, 20).unwrap(), 2, 0);
        let twice = pseudo_diff(&pseudo_diff(&g, 1), 1);
        let once = pseudo_diff(&g, 2);
        for ((_, _, a), (_, _, b)) in twice.coefficients().iter().zip(once.coefficients().iter()) {
            assert!((a - b).norm() <= 4.0 * f64::EPSILON * b.norm());
        }
        assert_eq!(twice.spectrum(), once.spectrum());
        assert_eq!(once.spectrum(), &g.spectrum().derived(2).unwrap());
    }

    #[test]
    fn sample_second_moments() {
        let spec = PowerSpectrum::power_law(3.0, 6).unwrap();
        let n = 4000;
        let mut s53 = 0.0;
        let mut s53_sq = 0.0;
        for r in 0..n {
            let f = FieldRealization::sample(&spec, 99, r);
            let v = f.coefficients().get(5, 3).unwrap().norm_sqr();
            s53 += v;
            s53_sq += v * v;
        }
        let mean = s53 / n as f64;
        let se = ((s53_sq / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - spec.value(5).unwrap()).abs() < 4.0 * se);
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = PowerSpectrum::power_law(3.0, 32).unwrap();
        assert_eq!(FieldRealization::sample(&spec, 3, 9), FieldRealization::sample(&spec, 3, 9));
        assert_ne!(FieldRealization::sample(&spec, 3, 9), FieldRealization::sample(&spec, 3, 10));
    }

    proptest! {
        #[test]
        fn synthesis_is_linear(seed in 0u64..1000, theta in 0.0f64..PI, phi in 0.0f64..6.0) {
            let spec = PowerSpectrum::power_law(3.0, 24).unwrap();
            let a = FieldRealization::sample(&spec, seed, 0);
            let b = FieldRealization::sample(&spec, seed, 1);
            let sum = a.coefficients().try_add(b.coefficients()).unwrap();
            let p = [SpherePoint::from_angles(theta, phi)];
            let lhs = synthesize(&sum, &p).unwrap()[0];
            let rhs = a.evaluate(&p).unwrap()[0] + b.evaluate(&p).unwrap()[0];
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }

        #[test]
        fn set_enforces_symmetry(l in 1usize..10, m in -9i64..10, re in -1.0f64..1.0, im in -1.0f64..1.0) {
            prop_assume!(m.unsigned_abs() as usize <= l);
            let mut c = HarmonicCoefficients::zeros(10);
            c.set(l, m, Complex64::new(re, im)).unwrap();
            prop_assert_eq!(c.symmetry_defect(), 0.0);
        }
    }
}
