//! Empirical uniform modulus of continuity: sup-ratio statistics over
//! finite pair families at dyadic scales.
//!
//! All pairs lie on the equator. By isotropy the law of T along one great
//! circle is the law along any other, and a single colatitude lets every
//! evaluation share one Legendre pass.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::field::{pseudo_diff, FieldRealization};
use crate::point::SpherePoint;
use crate::rng::{substream, Purpose};
use crate::slnd::ConstantEstimate;
use crate::spectra::{abs_log, PowerSpectrum, ScalingFunction};

/// Scales below RESOLVED_FACTOR/l_max are flagged under-resolved.
pub const RESOLVED_FACTOR: f64 = 10.0;
pub const MAX_LEVEL: u32 = 20;

/// 2ⁿ points x_{n,k} = (cos φ_k, sin φ_k, 0), φ_k = k·2^{−n}.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatedSequence {
    pub n: u32,
    pub points: Vec<SpherePoint>,
}

impl SeparatedSequence {
    pub fn spacing(&self) -> f64 {
        (-(self.n as f64)).exp2()
    }

    /// Largest deviation, over k ≥ 2, of min_{i<k} d(x_k, x_i) and
    /// d(x_k, x_{k−1}) from the spacing. Quadratic in the length.
    pub fn separation_defect(&self) -> f64 {
        let h = self.spacing();
        let mut worst = 0.0f64;
        for k in 1..self.points.len() {
            let near = (0..k)
                .map(|i| self.points[k].distance(&self.points[i]))
                .fold(f64::INFINITY, f64::min);
            let prev = self.points[k].distance(&self.points[k - 1]);
            worst = worst.max((near - h).abs()).max((prev - h).abs());
        }
        worst
    }
}

fn equator(phi: f64) -> SpherePoint {
    SpherePoint::from_vector([phi.cos(), phi.sin(), 0.0]).expect("unit vector")
}

pub fn separated_sequence(n: u32) -> Result<SeparatedSequence> {
    if n == 0 || n > MAX_LEVEL {
        return domain(format!("level must be in 1..={MAX_LEVEL}, got {n}"));
    }
    let h = (-(n as f64)).exp2();
    let points = (0..1usize << n).map(|k| equator(k as f64 * h)).collect();
    Ok(SeparatedSequence { n, points })
}

/// Choice of denominator in the sup ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatisticKind {
    /// ρ_α(d)·√|log ρ_α(d)|
    RhoForm,
    /// d^{(α−2)/2}·√|log d|
    GeodesicForm,
    /// d·|log d|
    Alpha4Form,
    /// ρ-form for T^{(k)} with index α − 2k.
    DerivativeForm,
}

impl StatisticKind {
    pub fn denominator(&self, alpha: f64, d: f64) -> f64 {
        match self {
            StatisticKind::RhoForm | StatisticKind::DerivativeForm => {
                let r = ScalingFunction::new(alpha)
                    .map(|f| f.eval_unchecked(d))
                    .unwrap_or(f64::NAN);
                r * abs_log(r).sqrt()
            }
            StatisticKind::GeodesicForm => d.powf(0.5 * (alpha - 2.0)) * abs_log(d).sqrt(),
            StatisticKind::Alpha4Form => d * abs_log(d),
        }
    }

    fn constant_name(&self) -> &'static str {
        match self {
            StatisticKind::RhoForm => "K1_empirical",
            StatisticKind::GeodesicForm => "K2_empirical",
            StatisticKind::Alpha4Form => "K3_empirical",
            StatisticKind::DerivativeForm => "K4_empirical",
        }
    }
}

impl fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StatisticKind::RhoForm => "rho_form",
            StatisticKind::GeodesicForm => "geodesic_form",
            StatisticKind::Alpha4Form => "alpha4_form",
            StatisticKind::DerivativeForm => "derivative_form",
        })
    }
}

impl FromStr for StatisticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "rho_form" => Ok(StatisticKind::RhoForm),
            "geodesic_form" => Ok(StatisticKind::GeodesicForm),
            "alpha4_form" => Ok(StatisticKind::Alpha4Form),
            "derivative_form" => Ok(StatisticKind::DerivativeForm),
            other => Err(Error::Parse(format!("unknown statistic kind '{other}'"))),
        }
    }
}

/// sup over pairs of |T(x) − T(y)| / denominator(d(x, y)).
pub fn modulus_statistic(values: &[(f64, f64)], distances: &[f64], alpha: f64, kind: StatisticKind) -> Result<f64> {
    if values.len() != distances.len() {
        return domain("values and distances differ in length");
    }
    let mut sup = 0.0f64;
    for (&(a, b), &d) in values.iter().zip(distances) {
        if !(d > 0.0) {
            return domain(format!("pair distance must be positive, got {d}"));
        }
        sup = sup.max((a - b).abs() / kind.denominator(alpha, d));
    }
    Ok(sup)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulusExperiment {
    pub spec: PowerSpectrum,
    /// Dyadic levels j; the scales are 2^{−j}.
    pub levels: Vec<u32>,
    pub replicates: usize,
    /// Random pairs added at each scale on top of the separated sequence.
    pub pairs_per_scale: usize,
    pub kind: StatisticKind,
    /// Derivative order k: T^{(k)} is analysed with index α − 2k.
    pub derivative_order: u32,
    pub seed: u64,
}

impl ModulusExperiment {
    pub fn scales(&self) -> Vec<f64> {
        self.levels.iter().map(|&j| (-(j as f64)).exp2()).collect()
    }

    pub fn effective_alpha(&self) -> f64 {
        self.spec.alpha() - 2.0 * self.derivative_order as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return domain("no scales given");
        }
        for w in self.levels.windows(2) {
            if w[1] <= w[0] {
                return domain("scales must be strictly decreasing");
            }
        }
        if self.levels[0] == 0 || *self.levels.last().unwrap() > MAX_LEVEL {
            return domain(format!("levels must be in 1..={MAX_LEVEL}"));
        }
        if self.replicates == 0 {
            return domain("replicates must be at least 1");
        }
        ScalingFunction::new(self.effective_alpha())?;
        if self.derivative_order > 0 && self.kind != StatisticKind::DerivativeForm {
            return domain("derivative order > 0 requires the derivative_form statistic");
        }
        Ok(())
    }

    pub fn to_config_string(&self) -> String {
        let lv: Vec<String> = self.levels.iter().map(|j| j.to_string()).collect();
        format!(
            "{}levels={}\nreplicates={}\npairs_per_scale={}\nkind={}\nk={}\nseed={}\n",
            self.spec.to_config_string(),
            lv.join(","),
            self.replicates,
            self.pairs_per_scale,
            self.kind,
            self.derivative_order,
            self.seed
        )
    }
}

/// l_max meeting the resolution rule 50·2^{j_max}, capped.
pub fn recommended_l_max(finest_level: u32, cap: usize) -> usize {
    ((50.0 * (finest_level as f64).exp2()).ceil() as usize).min(cap)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulusRow {
    pub scale: f64,
    pub replicate: usize,
    /// The requested statistic.
    pub statistic: f64,
    pub resolved: bool,
    pub rho_form: f64,
    pub geodesic_form: f64,
    /// max over consecutive separated pairs of |ΔT|/(2^{−j(α−2)/2}√j).
    pub witness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulusReport {
    /// Scale-major, then replicate.
    pub rows: Vec<ModulusRow>,
    pub scales: Vec<f64>,
    pub resolved: Vec<bool>,
    pub medians: Vec<f64>,
    pub maxima: Vec<f64>,
    /// max median / min median over all scales.
    pub median_spread: f64,
    /// Median at the finest resolved scale.
    pub estimate: Option<ConstantEstimate>,
    /// Some scale is finer than RESOLVED_FACTOR/l_max.
    pub under_resolved: bool,
}

struct PairFamily {
    /// Indices into the point list.
    pairs: Vec<(usize, usize)>,
    distances: Vec<f64>,
    /// Leading pairs that come from the separated sequence.
    consecutive: usize,
}

fn pair_families<R: Rng + ?Sized>(
    levels: &[u32],
    random_pairs: usize,
    rng: &mut R,
) -> (Vec<SpherePoint>, Vec<PairFamily>) {
    let mut points = Vec::new();
    let mut families = Vec::new();
    for &j in levels {
        let h = (-(j as f64)).exp2();
        let base = points.len();
        let count = 1usize << j;
        points.extend((0..count).map(|k| equator(k as f64 * h)));
        let mut pairs: Vec<(usize, usize)> = (1..count).map(|k| (base + k - 1, base + k)).collect();
        let mut distances = vec![h; count - 1];
        for _ in 0..random_pairs {
            let phi: f64 = rng.random_range(0.0..2.0 * PI);
            let d = h * (1.0 - rng.random::<f64>());
            let i = points.len();
            points.push(equator(phi));
            points.push(equator(phi + d));
            pairs.push((i, i + 1));
            distances.push(d);
        }
        families.push(PairFamily {
            pairs,
            distances,
            consecutive: count - 1,
        });
    }
    (points, families)
}

pub fn run_modulus_experiment(exp: &ModulusExperiment) -> Result<ModulusReport> {
    exp.validate()?;
    let alpha = exp.effective_alpha();
    let scales = exp.scales();
    let l_max = exp.spec.l_max();
    let resolved: Vec<bool> = scales.iter().map(|&s| s >= RESOLVED_FACTOR / l_max as f64).collect();

    let per_replicate: Vec<Vec<ModulusRow>> = (0..exp.replicates)
        .into_par_iter()
        .map(|r| {
            let mut field = FieldRealization::sample(&exp.spec, exp.seed, r as u64);
            if exp.derivative_order > 0 {
                field = pseudo_diff(&field, exp.derivative_order);
            }
            let mut rng = substream(exp.seed, r as u64, Purpose::Geometry);
            let (points, families) = pair_families(&exp.levels, exp.pairs_per_scale, &mut rng);
            let t = field.evaluate(&points)?;
            families
                .iter()
                .zip(&exp.levels)
                .enumerate()
                .map(|(s, (fam, &j))| {
                    let vals: Vec<(f64, f64)> = fam.pairs.iter().map(|&(a, b)| (t[a], t[b])).collect();
                    let norm = scales[s].powf(0.5 * (alpha - 2.0)) * (j as f64).sqrt();
                    let witness = vals[..fam.consecutive]
                        .iter()
                        .map(|(a, b)| (a - b).abs() / norm)
                        .fold(0.0, f64::max);
                    Ok(ModulusRow {
                        scale: scales[s],
                        replicate: r,
                        statistic: modulus_statistic(&vals, &fam.distances, alpha, exp.kind)?,
                        resolved: resolved[s],
                        rho_form: modulus_statistic(&vals, &fam.distances, alpha, StatisticKind::RhoForm)?,
                        geodesic_form: modulus_statistic(&vals, &fam.distances, alpha, StatisticKind::GeodesicForm)?,
                        witness,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(scales.len() * exp.replicates);
    for s in 0..scales.len() {
        for rep in &per_replicate {
            rows.push(rep[s]);
        }
    }
    let mut medians = Vec::new();
    let mut maxima = Vec::new();
    for s in 0..scales.len() {
        let mut v: Vec<f64> = rows[s * exp.replicates..(s + 1) * exp.replicates]
            .iter()
            .map(|r| r.statistic)
            .collect();
        v.sort_by(f64::total_cmp);
        medians.push(median_sorted(&v));
        maxima.push(*v.last().unwrap());
    }
    let hi = medians.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = medians.iter().copied().fold(f64::INFINITY, f64::min);
    let estimate = match resolved.iter().rposition(|&r| r) {
        Some(s) => Some(ConstantEstimate::new(
            exp.kind.constant_name(),
            medians[s],
            &exp.to_config_string(),
            (scales[scales.len() - 1], scales[0]),
        )?),
        None => None,
    };
    Ok(ModulusReport {
        rows,
        under_resolved: resolved.iter().any(|r| !r),
        scales,
        resolved,
        medians,
        maxima,
        median_spread: hi / lo,
        estimate,
    })
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn separated_sequence_examples() {
        let s = separated_sequence(3).unwrap();
        assert_eq!(s.points.len(), 8);
        for w in s.points.windows(2) {
            assert!((w[0].distance(&w[1]) - 0.125).abs() < 1e-12);
        }
        assert!(s.separation_defect() < 1e-12);
        let one = separated_sequence(1).unwrap();
        assert!((one.points[0].distance(&one.points[1]) - 0.5).abs() < 1e-15);
        assert!(separated_sequence(0).is_err());
    }

    #[test]
    fn separation_holds_up_to_level_ten() {
        for n in 1..=10 {
            assert!(separated_sequence(n).unwrap().separation_defect() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn statistic_examples() {
        assert_eq!(modulus_statistic(&[(0.3, 0.3)], &[0.01], 3.0, StatisticKind::RhoForm).unwrap(), 0.0);
        assert!(modulus_statistic(&[(0.3, 0.2)], &[0.0], 3.0, StatisticKind::RhoForm).is_err());
        let d = 1e-6;
        let r = StatisticKind::GeodesicForm.denominator(3.0, d) / StatisticKind::RhoForm.denominator(3.0, d);
        assert!((r / 2f64.sqrt() - 1.0).abs() < 0.01);
    }

    #[test]
    fn small_experiment_is_deterministic() {
        let exp = ModulusExperiment {
            spec: PowerSpectrum::power_law(3.0, 512).unwrap(),
            levels: vec![3, 4, 5],
            replicates: 3,
            pairs_per_scale: 20,
            kind: StatisticKind::RhoForm,
            derivative_order: 0,
            seed: 1,
        };
        let a = run_modulus_experiment(&exp).unwrap();
        assert_eq!(a, run_modulus_experiment(&exp).unwrap());
        assert_eq!(a.rows.len(), 9);
        assert!(a.rows.iter().all(|r| r.statistic > 0.0 && r.resolved));
        for r in &a.rows {
            assert!((r.rho_form / r.geodesic_form - 2f64.sqrt()).abs() < 1e-12);
        }
        assert!(a.estimate.is_some());
        let bad = ModulusExperiment { levels: vec![5, 4], ..exp.clone() };
        assert!(run_modulus_experiment(&bad).is_err());
        let bad = ModulusExperiment { derivative_order: 1, ..exp };
        assert!(run_modulus_experiment(&bad).is_err());
    }

    proptest! {
        #[test]
        fn statistic_is_homogeneous(lambda in -5.0f64..5.0, a in -1.0f64..1.0, b in -1.0f64..1.0, d in 1e-5f64..0.1) {
            let base = modulus_statistic(&[(a, b)], &[d], 3.0, StatisticKind::RhoForm).unwrap();
            let scaled = modulus_statistic(&[(lambda * a, lambda * b)], &[d], 3.0, StatisticKind::RhoForm).unwrap();
            prop_assert!((scaled - lambda.abs() * base).abs() <= 1e-12 * (1.0 + scaled.abs()));
        }

        #[test]
        fn adding_pairs_never_decreases(vals in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, 1e-4f64..0.1), 2..10)) {
            let v: Vec<(f64, f64)> = vals.iter().map(|x| (x.0, x.1)).collect();
            let d: Vec<f64> = vals.iter().map(|x| x.2).collect();
            let n = v.len();
            let part = modulus_statistic(&v[..n - 1], &d[..n - 1], 3.0, StatisticKind::GeodesicForm).unwrap();
            let all = modulus_statistic(&v, &d, 3.0, StatisticKind::GeodesicForm).unwrap();
            prop_assert!(all >= part);
        }
    }
}
