//! The series S_s(θ) = Σ_{ℓ≥1} ℓ^{−s} P_ℓ(cos θ) and its small-angle behaviour.
//!
//! Two evaluation routes:
//! * [`legendre_series_sum`] sums the series directly with a crude tail bound,
//!   which is only affordable for moderately large s;
//! * [`legendre_series_resummed`] inserts the Mehler–Dirichlet representation
//!   of P_ℓ and resums the cosine series as Re[e^{iψ/2} Li_s(e^{iψ})], giving
//!   ζ(s) − S_s(θ) as a single weakly singular integral that stays accurate
//!   for every s > 1 and arbitrarily small θ.

use std::f64::consts::PI;

use super::legendre::legendre_fill;
use super::polylog::{polylog_direct, PolylogSeries, EXPANSION_CROSSOVER};
use super::zeta::zeta_real;
use super::AccuracyPolicy;
use crate::error::{domain, Error, Result};
use crate::quad::tanh_sinh;
use crate::series::{power_tail, Truncated};

/// Direct partial sum of Σ ℓ^{−s} P_ℓ(cos θ), truncated at the first L with
/// Σ_{ℓ>L} ℓ^{−s} ≤ `policy.abs_tol`.
pub fn legendre_series_sum(s: f64, theta: f64, policy: &AccuracyPolicy) -> Result<Truncated> {
    if !(s > 1.0) {
        return domain(format!("series exponent must exceed 1, got {s}"));
    }
    if !(theta >= 0.0 && theta <= PI) {
        return domain(format!("angle {theta} outside [0, pi]"));
    }
    // L^{1−s}/(s−1) ≤ tol
    let needed = (policy.abs_tol * (s - 1.0)).powf(-1.0 / (s - 1.0)).ceil();
    if !(needed <= policy.max_terms as f64) {
        return Err(Error::Budget(format!(
            "direct Legendre series for s={s} needs {needed:e} terms (budget {})",
            policy.max_terms
        )));
    }
    let l_max = (needed as usize).max(1);
    let mut p = Vec::new();
    legendre_fill(l_max, theta.cos(), &mut p);
    let mut sum = 0.0;
    for l in (1..=l_max).rev() {
        sum += (l as f64).powf(-s) * p[l];
    }
    Ok(Truncated::new(sum, power_tail(l_max, s), l_max))
}

/// Resummed value of S_s(θ) together with the deficit ζ(s) − S_s(θ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResummedSum {
    pub sum: f64,
    pub deficit: f64,
    pub error_estimate: f64,
}

/// S_s(θ) for θ ∈ (0, π) via the Mehler–Dirichlet/polylogarithm resummation.
pub fn legendre_series_resummed(s: f64, theta: f64, policy: &AccuracyPolicy) -> Result<ResummedSum> {
    if !(s > 1.0) {
        return domain(format!("series exponent must exceed 1, got {s}"));
    }
    if !(theta > 0.0 && theta < PI) {
        return domain(format!("resummed series needs theta in (0, pi), got {theta}"));
    }
    let ctx = Resummation::new(s);
    ctx.evaluate(theta, policy)
}

struct Resummation {
    s: f64,
    zeta: f64,
    series: PolylogSeries,
}

impl Resummation {
    fn new(s: f64) -> Self {
        Self {
            s,
            zeta: zeta_real(s),
            series: PolylogSeries::new(s),
        }
    }

    /// Re[e^{iψ/2}(Li_s(e^{iψ}) − ζ(s))].
    fn kernel(&self, psi: f64, policy: &AccuracyPolicy) -> Result<f64> {
        let diff = if psi < EXPANSION_CROSSOVER {
            self.series.evaluate(psi, true)?
        } else {
            polylog_direct(self.s, psi, policy)? - self.zeta
        };
        let (sh, ch) = (0.5 * psi).sin_cos();
        Ok(ch * diff.re - sh * diff.im)
    }

    /// ζ(s) − S_s(θ) = −(√2/π)∫₀^θ Re[e^{iψ/2}(Li_s − ζ(s))](cos ψ − cos θ)^{−1/2} dψ,
    /// after the substitution sin(ψ/2) = sin(θ/2)·x.
    fn evaluate(&self, theta: f64, policy: &AccuracyPolicy) -> Result<ResummedSum> {
        let st = (0.5 * theta).sin();
        let ct = (0.5 * theta).cos();
        let one_minus_st = ct * ct / (1.0 + st);
        let mut failure: Option<Error> = None;
        let r = tanh_sinh(0.0, 1.0, f64::MIN_POSITIVE, policy.rel_tol, |x, _from0, to1| {
            let psi = 2.0 * (st * x).asin();
            let k = match self.kernel(psi, policy) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    return 0.0;
                }
            };
            let one_minus_sx = one_minus_st + st * to1;
            let w = 1.0 / ((to1 * (1.0 + x)) * (one_minus_sx * (1.0 + st * x))).sqrt();
            -k * w
        });
        if let Some(e) = failure {
            return Err(e);
        }
        let r = r?;
        let deficit = 2.0 / PI * r.value;
        Ok(ResummedSum {
            sum: self.zeta - deficit,
            deficit,
            error_estimate: 2.0 / PI * r.error_estimate,
        })
    }
}

/// Small-angle regimes of ζ(s) − S_s(θ).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumPolyCase {
    /// 1 < s < 3, s ≠ 2: order sin^{s−1}(θ/2).
    Less3,
    /// s = 2: 2·sin(θ/2) to leading order.
    EvenTwo,
    /// s = 3: sin²(θ/2)·|ln sin(θ/2)|.
    OddThree,
    /// Odd s ≥ 5: sin²(θ/2).
    OddFiveOrMore,
    /// Even s ≥ 4: sin²(θ/2).
    EvenFourOrMore,
    /// Non-integer s > 3: sin²(θ/2).
    Great3,
}

impl SumPolyCase {
    pub fn classify(s: f64) -> Self {
        if s.fract() == 0.0 {
            match s as u64 {
                2 => Self::EvenTwo,
                3 => Self::OddThree,
                n if n % 2 == 1 => Self::OddFiveOrMore,
                _ => Self::EvenFourOrMore,
            }
        } else if s < 3.0 {
            Self::Less3
        } else {
            Self::Great3
        }
    }

    /// Exponent of sin(θ/2) in the leading term.
    pub fn predicted_order(&self, s: f64) -> f64 {
        match self {
            Self::Less3 | Self::EvenTwo => s - 1.0,
            _ => 2.0,
        }
    }

    pub fn has_log_factor(&self) -> bool {
        matches!(self, Self::OddThree)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Less3 => "less3",
            Self::EvenTwo => "even-s2",
            Self::OddThree => "odd-s3",
            Self::OddFiveOrMore => "odd",
            Self::EvenFourOrMore => "even",
            Self::Great3 => "great3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumPolyRow {
    pub theta: f64,
    pub sum: f64,
    /// ζ(s) − S_s(θ).
    pub deficit: f64,
    /// deficit / sin(θ/2)^order; for s = 2 this tends to 2.
    pub ratio: f64,
}

/// Fit of deficit/sin²(θ/2) = a·|ln sin(θ/2)| + b.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogCorrectedFit {
    pub log_coefficient: f64,
    pub constant: f64,
    /// max over the grid of |model − deficit| / deficit.
    pub max_relative_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SumPolyReport {
    pub s: f64,
    pub case: SumPolyCase,
    pub predicted_order: f64,
    /// Slope of ln(ζ(s) − S) against ln sin(θ/2).
    pub fitted_slope: f64,
    /// Largest residual of that straight-line fit (natural-log units).
    pub slope_fit_residual: f64,
    pub log_fit: Option<LogCorrectedFit>,
    pub rows: Vec<SumPolyRow>,
}

/// Largest straight-line residual tolerated before a fit error is raised.
pub const MAX_SLOPE_FIT_RESIDUAL: f64 = 0.05;
/// Largest relative residual of the log-corrected model (s = 3).
pub const MAX_LOG_FIT_RESIDUAL: f64 = 0.01;

/// ζ(s) − S_s(θ) and its ratio to sin(θ/2)^order at each θ ∈ (0, π).
pub fn sum_poly_rows(s: f64, thetas: &[f64], policy: &AccuracyPolicy) -> Result<Vec<SumPolyRow>> {
    if !(s > 1.0) {
        return domain(format!("series exponent must exceed 1, got {s}"));
    }
    if let Some(t) = thetas.iter().find(|&&t| !(t > 0.0 && t < PI)) {
        return domain(format!("resummed series needs theta in (0, pi), got {t}"));
    }
    let order = SumPolyCase::classify(s).predicted_order(s);
    let ctx = Resummation::new(s);
    thetas
        .iter()
        .map(|&theta| {
            let r = ctx.evaluate(theta, policy)?;
            Ok(SumPolyRow {
                theta,
                sum: r.sum,
                deficit: r.deficit,
                ratio: r.deficit / (0.5 * theta).sin().powf(order),
            })
        })
        .collect()
}

/// Fits the small-angle order of ζ(s) − S_s(θ) on `theta_grid`.
pub fn sum_poly_asymptotic_check(s: f64, theta_grid: &[f64], policy: &AccuracyPolicy) -> Result<SumPolyReport> {
    if !(s > 1.0) {
        return domain(format!("series exponent must exceed 1, got {s}"));
    }
    validate_grid(theta_grid)?;
    let case = SumPolyCase::classify(s);
    let order = case.predicted_order(s);
    let rows = sum_poly_rows(s, theta_grid, policy)?;
    if rows.iter().any(|r| !(r.deficit > 0.0)) {
        return Err(Error::Fit(format!(
            "zeta(s) - S(theta) is not positive on the grid for s={s}"
        )));
    }
    let xs: Vec<f64> = rows.iter().map(|r| (0.5 * r.theta).sin().ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.deficit.ln()).collect();
    let (slope, intercept) = linear_fit(&xs, &ys);
    let slope_fit_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - slope * x - intercept).abs())
        .fold(0.0, f64::max);

    let log_fit = if case.has_log_factor() {
        // deficit/sin² = a·(−ln sin) + b
        let us: Vec<f64> = xs.iter().map(|x| -x).collect();
        let vs: Vec<f64> = rows
            .iter()
            .zip(&xs)
            .map(|(r, x)| r.deficit / (2.0 * x).exp())
            .collect();
        let (a, b) = linear_fit(&us, &vs);
        let max_rel = rows
            .iter()
            .zip(&xs)
            .map(|(r, x)| ((a * -x + b) * (2.0 * x).exp() - r.deficit).abs() / r.deficit)
            .fold(0.0, f64::max);
        Some(LogCorrectedFit {
            log_coefficient: a,
            constant: b,
            max_relative_residual: max_rel,
        })
    } else {
        None
    };

    match &log_fit {
        Some(f) if f.max_relative_residual > MAX_LOG_FIT_RESIDUAL => {
            return Err(Error::Fit(format!(
                "log-corrected fit residual {:.3e} exceeds {MAX_LOG_FIT_RESIDUAL}",
                f.max_relative_residual
            )))
        }
        None if slope_fit_residual > MAX_SLOPE_FIT_RESIDUAL => {
            return Err(Error::Fit(format!(
                "power-law fit residual {slope_fit_residual:.3e} exceeds {MAX_SLOPE_FIT_RESIDUAL}"
            )))
        }
        _ => {}
    }

    Ok(SumPolyReport {
        s,
        case,
        predicted_order: order,
        fitted_slope: slope,
        slope_fit_residual,
        log_fit,
        rows,
    })
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 8 {
        return domain(format!("theta grid needs at least 8 points, got {}", grid.len()));
    }
    if grid.iter().any(|&t| !(t > 0.0 && t <= 0.1)) {
        return domain("theta grid must lie in (0, 0.1]");
    }
    let lo = grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = grid.iter().copied().fold(0.0, f64::max);
    if hi < 10.0 * lo * (1.0 - 1e-12) {
        return domain("theta grid must span at least a decade");
    }
    Ok(())
}

/// Least-squares line y = slope·x + intercept.
pub(crate) fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::riemann_zeta;

    #[test]
    fn direct_sum_examples() {
        let pol = AccuracyPolicy {
            abs_tol: 1e-6,
            ..AccuracyPolicy::default()
        };
        let at_pi = legendre_series_sum(2.0, PI, &pol).unwrap();
        assert!(at_pi.value.abs() <= riemann_zeta(2.0).unwrap());
        // P_ℓ(−1) = (−1)^ℓ: Σ (−1)^ℓ/ℓ² = −π²/12
        assert!((at_pi.value + PI * PI / 12.0).abs() <= at_pi.tail_bound + 1e-12);

        let pol = AccuracyPolicy {
            abs_tol: 1e-9,
            ..AccuracyPolicy::default()
        };
        let near0 = legendre_series_sum(3.0, 1e-9, &pol).unwrap();
        assert!((near0.value - riemann_zeta(3.0).unwrap()).abs() <= near0.tail_bound + 1e-12);

        assert!(matches!(
            legendre_series_sum(2.0, 0.1, &AccuracyPolicy::default()),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn doubling_stays_within_reported_bound() {
        let pol = AccuracyPolicy {
            abs_tol: 1e-5,
            ..AccuracyPolicy::default()
        };
        let a = legendre_series_sum(2.5, 0.01, &pol).unwrap();
        let l2 = 2 * a.terms;
        let p = crate::special::legendre_batch(l2, 0.01f64.cos()).unwrap();
        let doubled: f64 = (1..=l2).rev().map(|l| (l as f64).powf(-2.5) * p[l]).sum();
        assert!((doubled - a.value).abs() <= a.tail_bound);
    }

    #[test]
    fn resummed_matches_direct_route() {
        let pol = AccuracyPolicy::default();
        let direct_pol = AccuracyPolicy {
            abs_tol: 1e-11,
            ..AccuracyPolicy::default()
        };
        for &(s, theta) in &[(3.5, 0.05), (4.0, 0.5), (5.0, 1.3), (6.5, 2.9), (3.0, 0.2)] {
            let r = legendre_series_resummed(s, theta, &pol).unwrap();
            let d = legendre_series_sum(s, theta, &direct_pol).unwrap();
            assert!(
                (r.sum - d.value).abs() < 1e-9 + d.tail_bound,
                "s={s} theta={theta}: {} vs {}",
                r.sum,
                d.value
            );
        }
    }

    #[test]
    fn even_two_coefficient() {
        let pol = AccuracyPolicy::default();
        let r = legendre_series_resummed(2.0, 1e-3, &pol).unwrap();
        let ratio = r.deficit / (0.5e-3f64).sin();
        assert!((ratio - 2.0).abs() < 0.02, "{ratio}");
    }

    #[test]
    fn slopes_follow_the_case_table() {
        let pol = AccuracyPolicy::default();
        let grid = log_grid(1e-4, 1e-2, 12);
        let r = sum_poly_asymptotic_check(2.5, &grid, &pol).unwrap();
        assert_eq!(r.case, SumPolyCase::Less3);
        assert!((r.fitted_slope - 1.5).abs() < 0.05, "{}", r.fitted_slope);
        let r = sum_poly_asymptotic_check(5.0, &grid, &pol).unwrap();
        assert_eq!(r.case, SumPolyCase::OddFiveOrMore);
        assert!((r.fitted_slope - 2.0).abs() < 0.05, "{}", r.fitted_slope);
        let r = sum_poly_asymptotic_check(3.0, &grid, &pol).unwrap();
        assert!(r.log_fit.unwrap().max_relative_residual < 0.01);
    }

    #[test]
    fn grid_validation() {
        let pol = AccuracyPolicy::default();
        assert!(sum_poly_asymptotic_check(2.0, &[1e-3; 4], &pol).is_err());
        assert!(sum_poly_asymptotic_check(2.0, &log_grid(1e-3, 5e-3, 10), &pol).is_err());
        assert!(sum_poly_asymptotic_check(2.0, &log_grid(1e-3, 0.5, 10), &pol).is_err());
    }
}
