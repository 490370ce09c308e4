//! Conditional variances Var(T(x₀) | T(x₁), …, T(x_n)) and scans of their
//! small-scale order (strong local nondeterminism).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{domain, Error, Result};
use crate::field::covariance_at;
use crate::point::{rotation_to_north, SpherePoint};
use crate::rng::{substream, Purpose};
use crate::special::{linear_fit, ylm_nonnegative, NormalizedLegendre};
use crate::spectra::{PowerSpectrum, ScalingFunction};
use crate::variogram::resolution_l_max;

/// Eigenvalues of the Gram matrix below this fraction of its trace are
/// treated as zero.
pub const EIGEN_CUTOFF: f64 = 1e-10;
/// Eigenvalues below −NEGATIVE_TOLERANCE·trace signal a broken covariance.
pub const NEGATIVE_TOLERANCE: f64 = 1e-9;
/// Cap on l_max in scans.
pub const SCAN_L_CAP: usize = 4096;
/// A scan flags ε whose minimum ratio falls below this fraction of the
/// largest per-ε minimum.
pub const COLLAPSE_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct ConditioningConfig {
    pub x0: SpherePoint,
    pub points: Vec<SpherePoint>,
    pub spec: PowerSpectrum,
}

impl ConditioningConfig {
    pub fn new(x0: SpherePoint, points: Vec<SpherePoint>, spec: PowerSpectrum) -> Result<Self> {
        if points.is_empty() {
            return domain("at least one conditioning point is required");
        }
        for p in std::iter::once(&x0).chain(&points) {
            if !(p.norm_defect() < 1e-9) {
                return domain(format!("{p:?} is not on the unit sphere"));
            }
        }
        Ok(Self { x0, points, spec })
    }

    /// Minimum geodesic distance from x₀ to the conditioning points.
    pub fn min_distance(&self) -> f64 {
        self.points
            .iter()
            .map(|p| self.x0.distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// The same configuration moved by `r`.
    pub fn rotated(&self, r: &nalgebra::Rotation3<f64>) -> Self {
        Self {
            x0: self.x0.rotate(r),
            points: self.points.iter().map(|p| p.rotate(r)).collect(),
            spec: self.spec.clone(),
        }
    }
}

/// σ₀₀ − cᵀΣ⁺c with Σ⁺ a spectral pseudo-inverse.
pub fn conditional_variance(cfg: &ConditioningConfig) -> Result<f64> {
    let n = cfg.points.len();
    let cov = |a: &SpherePoint, b: &SpherePoint| covariance_at(&cfg.spec, a.dot(b)).value;
    let s00 = covariance_at(&cfg.spec, 1.0).value;
    let mut gram = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = if i == j { s00 } else { cov(&cfg.points[i], &cfg.points[j]) };
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let c = DVector::from_iterator(n, cfg.points.iter().map(|p| cov(&cfg.x0, p)));
    let trace = gram.trace();
    let eig = SymmetricEigen::new(gram);
    let mut explained = 0.0;
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < -NEGATIVE_TOLERANCE * trace {
            return Err(Error::Numerical(format!(
                "conditioning Gram matrix has eigenvalue {lambda:e} (trace {trace:e})"
            )));
        }
        if lambda > EIGEN_CUTOFF * trace {
            let proj = eig.eigenvectors.column(k).dot(&c);
            explained += proj * proj / lambda;
        }
    }
    Ok((s00 - explained).max(0.0))
}

/// min over γ of E(T(x₀) − Σγ_jT(x_j))², computed in harmonic space after
/// rotating x₀ to the North Pole.
///
/// The residual of each (ℓ, m ≥ 0) row is weighted by √C_ℓ (√(2C_ℓ) for
/// m > 0, which accounts for −m) and the least-squares problem is solved by
/// Gram–Schmidt with reorthogonalization.
pub fn quadratic_form_min(cfg: &ConditioningConfig) -> Result<f64> {
    let rot = rotation_to_north(&cfg.x0);
    let pts: Vec<SpherePoint> = cfg.points.iter().map(|p| p.rotate(&rot)).collect();
    let l_max = cfg.spec.l_max();
    let table = NormalizedLegendre::new(l_max);
    let rows = (l_max + 1) * (l_max + 1) - 1;

    let weights: Vec<f64> = (0..=l_max)
        .map(|l| if l == 0 { 0.0 } else { cfg.spec.value_unchecked(l).sqrt() })
        .collect();
    let embed = |y: &[num_complex::Complex64]| -> Vec<f64> {
        let mut out = Vec::with_capacity(rows);
        for l in 1..=l_max {
            let base = l * (l + 1) / 2;
            out.push(weights[l] * y[base].re);
            for m in 1..=l {
                let v = y[base + m] * (weights[l] * std::f64::consts::SQRT_2);
                out.push(v.re);
                out.push(v.im);
            }
        }
        out
    };

    let mut target = vec![0.0; rows];
    let mut row = 0;
    for l in 1..=l_max {
        target[row] = weights[l] * ((2 * l + 1) as f64 / (4.0 * PI)).sqrt();
        row += 2 * l + 1;
    }
    let columns: Vec<Vec<f64>> = pts
        .par_iter()
        .map(|p| embed(&ylm_nonnegative(&table, p)))
        .collect();

    // orthonormal basis of the column span
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for col in columns {
        let norm0 = dot(&col, &col).sqrt();
        let mut v = col;
        for _ in 0..2 {
            for q in &basis {
                let r = dot(q, &v);
                axpy(-r, q, &mut v);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-5 * norm0 && norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    let mut r = target;
    for _ in 0..2 {
        for q in &basis {
            let c = dot(q, &r);
            axpy(-c, q, &mut r);
        }
    }
    Ok(dot(&r, &r))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// A random configuration: x₀ and `n` conditioning points, all uniform.
pub fn random_configuration<R: Rng + ?Sized>(spec: &PowerSpectrum, n: usize, rng: &mut R) -> Result<ConditioningConfig> {
    let x0 = SpherePoint::random(rng);
    let points = (0..n).map(|_| SpherePoint::random(rng)).collect();
    ConditioningConfig::new(x0, points, spec.clone())
}

/// How conditioning points are placed around x₀ at scale ε.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    /// n points at distance exactly ε, equally spaced in bearing.
    Ring,
    /// One point at distance ε, the rest at distances in [ε, 4ε] with
    /// uniform bearings.
    RandomCap,
    /// One point at distance ε, the rest in [ε, 1.5ε] crowded into a 30°
    /// sector on the same side.
    Adversarial,
}

impl Geometry {
    /// Points for scale `epsilon`. The draws from `rng` do not depend on ε,
    /// so one stream gives the same shape at every scale.
    pub fn place<R: Rng + ?Sized>(&self, n: usize, epsilon: f64, rng: &mut R) -> (SpherePoint, Vec<SpherePoint>) {
        let x0 = SpherePoint::random(rng);
        let b0: f64 = rng.random_range(0.0..2.0 * PI);
        let mut pts = Vec::with_capacity(n);
        for j in 0..n {
            let u: f64 = rng.random();
            let w: f64 = rng.random();
            let (dist, bearing) = match self {
                Geometry::Ring => (1.0, b0 + 2.0 * PI * j as f64 / n as f64),
                Geometry::RandomCap => (if j == 0 { 1.0 } else { 1.0 + 3.0 * u }, 2.0 * PI * w),
                Geometry::Adversarial => (if j == 0 { 1.0 } else { 1.0 + 0.5 * u }, b0 + PI / 6.0 * w),
            };
            pts.push(x0.offset(dist * epsilon, bearing));
        }
        (x0, pts)
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Geometry::Ring => "ring",
            Geometry::RandomCap => "random-cap",
            Geometry::Adversarial => "adversarial",
        })
    }
}

impl FromStr for Geometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ring" => Ok(Geometry::Ring),
            "random-cap" => Ok(Geometry::RandomCap),
            "adversarial" => Ok(Geometry::Adversarial),
            other => Err(Error::Parse(format!(
                "unknown geometry '{other}' (expected ring, random-cap or adversarial)"
            ))),
        }
    }
}

/// An empirical stand-in for a constant the theory only asserts exists.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantEstimate {
    pub name: String,
    pub value: f64,
    /// Hex SHA-256 of the configuration text that produced the estimate.
    pub config_digest: String,
    /// (smallest, largest) scale used.
    pub scale_range: (f64, f64),
}

impl ConstantEstimate {
    pub fn new(name: &str, value: f64, config_text: &str, scale_range: (f64, f64)) -> Result<Self> {
        if name.is_empty() {
            return domain("constant estimate needs a name");
        }
        if !value.is_finite() {
            return Err(Error::Numerical(format!("estimate {name} is not finite: {value}")));
        }
        Ok(Self {
            name: name.to_string(),
            value,
            config_digest: digest(config_text),
            scale_range,
        })
    }
}

pub fn digest(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub alpha: f64,
    pub epsilons: Vec<f64>,
    pub n: usize,
    pub geometry: Geometry,
    pub replicates: usize,
    pub seed: u64,
    /// Permit α ≥ 4, where no lower-bound form is asserted.
    pub exploratory: bool,
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        ScalingFunction::new(self.alpha)?;
        if self.alpha >= 4.0 && !self.exploratory {
            return domain("alpha >= 4 scans are exploratory; set the exploratory flag");
        }
        if self.epsilons.is_empty() {
            return domain("epsilon list is empty");
        }
        for &e in &self.epsilons {
            if !(e > 0.0 && e < 0.5) {
                return domain(format!("epsilon must lie in (0, 0.5), got {e}"));
            }
        }
        if self.n == 0 {
            return domain("n must be at least 1");
        }
        if self.replicates == 0 {
            return domain("replicates must be at least 1");
        }
        Ok(())
    }

    pub fn to_config_string(&self) -> String {
        let eps: Vec<String> = self.epsilons.iter().map(|e| format!("{e}")).collect();
        format!(
            "alpha={}\nepsilons={}\nn={}\ngeometry={}\nreplicates={}\nseed={}\nexploratory={}\n",
            self.alpha,
            eps.join(","),
            self.n,
            self.geometry,
            self.replicates,
            self.seed,
            self.exploratory
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub epsilon: f64,
    pub replicate: usize,
    pub min_dist: f64,
    pub var: f64,
    /// Var/ε^{α−2}.
    pub ratio_c2: f64,
    /// Var/ρ_α(min dist)²; NaN outside 2 < α < 4.
    pub ratio_nd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub rows: Vec<ScanRow>,
    pub l_max: Vec<usize>,
    pub min_ratio: Vec<f64>,
    /// Slope of log(min ratio_c2) against log ε.
    pub slope: f64,
    pub collapsed: Vec<bool>,
    pub estimate: ConstantEstimate,
    /// True when α ≥ 4: the output does not certify a lower bound.
    pub non_certifying: bool,
}

/// Var(T(x₀) | conditioning) over replicates and scales.
///
/// Replicate r draws its geometry from the same stream at every ε.
pub fn slnd_scan(cfg: &ScanConfig) -> Result<ScanReport> {
    cfg.validate()?;
    let rho = ScalingFunction::new(cfg.alpha)?;
    let fractal = cfg.alpha < 4.0;
    let specs: Vec<PowerSpectrum> = cfg
        .epsilons
        .iter()
        .map(|&e| PowerSpectrum::power_law(cfg.alpha, resolution_l_max(e, SCAN_L_CAP)))
        .collect::<Result<_>>()?;
    let tasks: Vec<(usize, usize)> = (0..cfg.epsilons.len())
        .flat_map(|i| (0..cfg.replicates).map(move |r| (i, r)))
        .collect();
    let rows: Vec<ScanRow> = tasks
        .par_iter()
        .map(|&(i, r)| {
            let eps = cfg.epsilons[i];
            let mut rng = substream(cfg.seed, r as u64, Purpose::Geometry);
            let (x0, pts) = cfg.geometry.place(cfg.n, eps, &mut rng);
            let c = ConditioningConfig::new(x0, pts, specs[i].clone())?;
            let var = conditional_variance(&c)?;
            let min_dist = c.min_distance();
            let ratio_nd = if fractal {
                var / rho.eval_unchecked(min_dist).powi(2)
            } else {
                f64::NAN
            };
            Ok(ScanRow {
                epsilon: eps,
                replicate: r,
                min_dist,
                var,
                ratio_c2: var / eps.powf(cfg.alpha - 2.0),
                ratio_nd,
            })
        })
        .collect::<Result<_>>()?;

    let min_ratio: Vec<f64> = (0..cfg.epsilons.len())
        .map(|i| {
            rows[i * cfg.replicates..(i + 1) * cfg.replicates]
                .iter()
                .map(|r| r.ratio_c2)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let top = min_ratio.iter().copied().fold(0.0, f64::max);
    let collapsed = min_ratio.iter().map(|&m| !(m > COLLAPSE_FRACTION * top)).collect();
    let slope = if cfg.epsilons.len() >= 2 && min_ratio.iter().all(|&m| m > 0.0) {
        let xs: Vec<f64> = cfg.epsilons.iter().map(|e| e.ln()).collect();
        let ys: Vec<f64> = min_ratio.iter().map(|m| m.ln()).collect();
        linear_fit(&xs, &ys).0
    } else {
        f64::NAN
    };
    let c2 = if fractal {
        rows.iter().map(|r| r.ratio_nd).fold(f64::INFINITY, f64::min)
    } else {
        min_ratio.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let lo = cfg.epsilons.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = cfg.epsilons.iter().copied().fold(0.0, f64::max);
    let estimate = ConstantEstimate::new("c2_empirical", c2, &cfg.to_config_string(), (lo, hi))?;
    Ok(ScanReport {
        rows,
        l_max: specs.iter().map(|s| s.l_max()).collect(),
        min_ratio,
        slope,
        collapsed,
        estimate,
        non_certifying: !fractal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::random_rotation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(l_max: usize) -> PowerSpectrum {
        PowerSpectrum::power_law(3.0, l_max).unwrap()
    }

    #[test]
    fn single_point_schur_complement() {
        let s = spec(64);
        let x0 = SpherePoint::from_angles(0.4, 1.0);
        let x1 = SpherePoint::from_angles(0.7, 1.3);
        let cfg = ConditioningConfig::new(x0, vec![x1], s.clone()).unwrap();
        let s00 = covariance_at(&s, 1.0).value;
        let s01 = covariance_at(&s, x0.dot(&x1)).value;
        let expect = s00 - s01 * s01 / s00;
        assert!((conditional_variance(&cfg).unwrap() - expect).abs() < 1e-14);
        assert!((quadratic_form_min(&cfg).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn duplicated_x0_is_predicted_exactly() {
        let s = spec(128);
        let x0 = SpherePoint::from_angles(1.0, 2.0);
        let cfg = ConditioningConfig::new(x0, vec![SpherePoint::from_angles(0.2, 0.1), x0, x0], s.clone()).unwrap();
        let s00 = covariance_at(&s, 1.0).value;
        assert!(conditional_variance(&cfg).unwrap() <= 1e-9 * s00);
        assert!(quadratic_form_min(&cfg).unwrap() <= 1e-9 * s00);
    }

    #[test]
    fn oracles_agree_on_random_configurations() {
        let s = spec(96);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=6 {
            let cfg = random_configuration(&s, n, &mut rng).unwrap();
            let a = conditional_variance(&cfg).unwrap();
            let b = quadratic_form_min(&cfg).unwrap();
            assert!((a - b).abs() <= 1e-8 * a, "n={n}: {a} vs {b}");
        }
    }

    #[test]
    fn rotation_invariance() {
        let s = spec(64);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cfg = random_configuration(&s, 4, &mut rng).unwrap();
        let v = quadratic_form_min(&cfg).unwrap();
        for _ in 0..10 {
            let r = random_rotation(&mut rng);
            assert!((quadratic_form_min(&cfg.rotated(&r)).unwrap() - v).abs() < 1e-9);
        }
    }

    #[test]
    fn antipodal_cluster_leaves_most_variance() {
        let s = spec(128);
        let x0 = SpherePoint::from_angles(0.3, 0.2);
        let anti = SpherePoint::from_vector(x0.vector().map(|c| -c)).unwrap();
        let pts: Vec<SpherePoint> = (0..4).map(|j| anti.offset(0.05, j as f64)).collect();
        let cfg = ConditioningConfig::new(x0, pts, s.clone()).unwrap();
        let s00 = covariance_at(&s, 1.0).value;
        let v = conditional_variance(&cfg).unwrap();
        assert!(v > 0.5 * s00 && v <= s00);
        assert!((quadratic_form_min(&cfg).unwrap() - v).abs() < 1e-8 * v);
    }

    #[test]
    fn geometry_distances() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for g in [Geometry::Ring, Geometry::RandomCap, Geometry::Adversarial] {
            let (x0, pts) = g.place(5, 0.05, &mut rng);
            let d: Vec<f64> = pts.iter().map(|p| x0.distance(p)).collect();
            assert!((d[0] - 0.05).abs() < 1e-12);
            assert!(d.iter().all(|&x| x >= 0.05 - 1e-12));
            assert_eq!(g.to_string().parse::<Geometry>().unwrap(), g);
        }
        assert!("star".parse::<Geometry>().is_err());
    }

    #[test]
    fn scan_is_deterministic_and_positive() {
        let cfg = ScanConfig {
            alpha: 3.0,
            epsilons: vec![0.2, 0.1],
            n: 3,
            geometry: Geometry::RandomCap,
            replicates: 6,
            seed: 9,
            exploratory: false,
        };
        let a = slnd_scan(&cfg).unwrap();
        let b = slnd_scan(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.rows.iter().all(|r| r.var > 0.0 && r.ratio_nd > 0.0));
        assert_eq!(a.estimate.config_digest.len(), 64);
        let bad = ScanConfig { alpha: 4.5, ..cfg };
        assert!(slnd_scan(&bad).is_err());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn adding_a_point_never_increases_variance(seed in 0u64..1000, n in 1usize..6) {
            let s = spec(48);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cfg = random_configuration(&s, n, &mut rng).unwrap();
            let mut bigger = cfg.clone();
            bigger.points.push(SpherePoint::random(&mut rng));
            let v0 = conditional_variance(&cfg).unwrap();
            let v1 = conditional_variance(&bigger).unwrap();
            proptest::prop_assert!(v1 <= v0 + 1e-9);
            proptest::prop_assert!(v0 <= covariance_at(&s, 1.0).value + 1e-12);
        }
    }
}
