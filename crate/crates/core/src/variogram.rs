//! The variogram d_T²(θ) = E|T(x) − T(y)|² and its comparison with ρ_α².

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::field::covariance_at;
use crate::point::SpherePoint;
use crate::series::{odd_weight_power_tail, Truncated};
use crate::special::{legendre_complement_fill, linear_fit};
use crate::spectra::{PowerSpectrum, ScalingFunction};

pub use crate::point::geodesic_distance;

/// Multipoles per radian needed to resolve 1 − P_ℓ(cos θ): l_max = 50/θ.
pub const RESOLUTION_FACTOR: f64 = 50.0;
/// Cap on the resolution rule for pure series evaluations (no synthesis).
pub const SERIES_L_CAP: usize = 1 << 22;
/// |slope| of log(d_T²/ρ_α²) against log θ above which the ratio is flagged
/// as unbounded.
pub const SLOPE_TOLERANCE: f64 = 0.1;

/// min(cap, ⌈50/θ⌉), at least 1.
pub fn resolution_l_max(theta: f64, cap: usize) -> usize {
    if !(theta > 0.0) {
        return cap.max(1);
    }
    let l = (RESOLUTION_FACTOR / theta).ceil();
    if l >= cap as f64 {
        cap.max(1)
    } else {
        (l as usize).max(1)
    }
}

fn check_angle(theta: f64) -> Result<()> {
    if !(0.0..=PI).contains(&theta) {
        return domain(format!("angle {theta} outside [0, pi]"));
    }
    Ok(())
}

/// d_T²(θ) = Σ_{ℓ=1}^{l_max} C_ℓ(2ℓ+1)/(2π)·(1 − P_ℓ(cos θ)), truncated at
/// the spectrum's l_max.
pub fn variogram(spec: &PowerSpectrum, theta: f64) -> Result<Truncated> {
    check_angle(theta)?;
    let l_max = spec.l_max();
    let mut u = Vec::new();
    legendre_complement_fill(l_max, theta, &mut u);
    let mut sum = 0.0;
    for l in (1..=l_max).rev() {
        sum += (2 * l + 1) as f64 * spec.value_unchecked(l) * u[l];
    }
    // 1 − P_ℓ ≤ 2
    Ok(Truncated::new(sum / (2.0 * PI), spec.odd_weight_tail(l_max) / PI, l_max))
}

/// d_T²(x, y) through the geodesic distance.
pub fn variogram_between(spec: &PowerSpectrum, x: &SpherePoint, y: &SpherePoint) -> Truncated {
    variogram(spec, geodesic_distance(x, y)).expect("geodesic distance lies in [0, pi]")
}

/// 2(C(0) − C(θ)) from the covariance series; equals [`variogram`] up to
/// rounding but loses relative accuracy as θ → 0.
pub fn variogram_from_covariance(spec: &PowerSpectrum, theta: f64) -> Result<f64> {
    check_angle(theta)?;
    Ok(2.0 * (covariance_at(spec, 1.0).value - covariance_at(spec, theta.cos()).value))
}

/// Q_α(θ) = Σ_ℓ ℓ^{−α}(ℓ + ½)(1 − P_ℓ(cos θ)) truncated by the resolution rule.
pub fn q_alpha(alpha: f64, theta: f64) -> Result<Truncated> {
    q_alpha_truncated(alpha, theta, resolution_l_max(theta, SERIES_L_CAP))
}

/// Q_α(θ) truncated at `l_max`.
pub fn q_alpha_truncated(alpha: f64, theta: f64, l_max: usize) -> Result<Truncated> {
    if !(alpha > 2.0) {
        return domain(format!("Q_alpha needs alpha > 2, got {alpha}"));
    }
    check_angle(theta)?;
    let mut u = Vec::new();
    legendre_complement_fill(l_max, theta, &mut u);
    let mut sum = 0.0;
    for l in (1..=l_max).rev() {
        let lf = l as f64;
        sum += lf.powf(-alpha) * (lf + 0.5) * u[l];
    }
    Ok(Truncated::new(sum, odd_weight_power_tail(l_max, alpha), l_max))
}

/// d_T² and d_T²/ρ_α² over a θ grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VariogramProfile {
    pub alpha: f64,
    pub theta_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub rho_sq: Vec<f64>,
    pub ratios: Vec<f64>,
    pub tail_bounds: Vec<f64>,
    pub l_max: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub profile: VariogramProfile,
    /// max(max ratio, 1/min ratio).
    pub c1_estimate: f64,
    /// max ratio / min ratio.
    pub spread: f64,
    /// Slope of log ratio against log θ.
    pub log_slope: f64,
    /// |log_slope| > [`SLOPE_TOLERANCE`].
    pub unbounded: bool,
}

/// Evaluates d_T²/ρ_α² on `theta_grid` ⊂ (0, π].
///
/// Each θ is summed to max(spec.l_max, min(2²², ⌈50/θ⌉)) so the small
/// angles see the multipoles that matter there.
pub fn variogram_profile(spec: &PowerSpectrum, theta_grid: &[f64]) -> Result<VariogramProfile> {
    let rho = ScalingFunction::new(spec.effective_alpha())?;
    for &t in theta_grid {
        if !(t > 0.0 && t <= PI) {
            return domain(format!("grid angle {t} outside (0, pi]"));
        }
    }
    let rows: Vec<(Truncated, f64)> = theta_grid
        .par_iter()
        .map(|&t| {
            let l = spec.l_max().max(resolution_l_max(t, SERIES_L_CAP));
            let s = spec.with_l_max(l)?;
            let v = variogram(&s, t)?;
            let r = rho.eval(t)?;
            Ok((v, r * r))
        })
        .collect::<Result<_>>()?;
    Ok(VariogramProfile {
        alpha: spec.effective_alpha(),
        theta_grid: theta_grid.to_vec(),
        values: rows.iter().map(|(v, _)| v.value).collect(),
        rho_sq: rows.iter().map(|(_, r)| *r).collect(),
        ratios: rows.iter().map(|(v, r)| v.value / r).collect(),
        tail_bounds: rows.iter().map(|(v, _)| v.tail_bound).collect(),
        l_max: rows.iter().map(|(v, _)| v.terms).collect(),
    })
}

/// The two-sided comparison of d_T² with ρ_α² near the origin.
pub fn sandwich_report(spec: &PowerSpectrum, theta_grid: &[f64]) -> Result<SandwichReport> {
    if theta_grid.len() < 2 {
        return domain("sandwich report needs at least two angles");
    }
    let profile = variogram_profile(spec, theta_grid)?;
    let max = profile.ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = profile.ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let xs: Vec<f64> = profile.theta_grid.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = profile.ratios.iter().map(|r| r.ln()).collect();
    let (log_slope, _) = linear_fit(&xs, &ys);
    Ok(SandwichReport {
        c1_estimate: max.max(1.0 / min),
        spread: max / min,
        log_slope,
        unbounded: log_slope.abs() > SLOPE_TOLERANCE,
        profile,
    })
}

/// Slope of log d_T² against log θ on `theta_grid`.
pub fn variogram_log_slope(spec: &PowerSpectrum, theta_grid: &[f64]) -> Result<f64> {
    let p = variogram_profile(spec, theta_grid)?;
    let xs: Vec<f64> = p.theta_grid.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = p.values.iter().map(|v| v.ln()).collect();
    Ok(linear_fit(&xs, &ys).0)
}
