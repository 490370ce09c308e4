//! Special functions: Legendre polynomials and spherical harmonics, the
//! Mehler–Dirichlet integral, the polylogarithm on the unit circle, ζ,
//! harmonic numbers, Beta integrals and the small-angle asymptotics of
//! Σ ℓ^{−s} P_ℓ(cos θ).
//!
//! Everything here is deterministic: the same inputs and policy give
//! bit-identical outputs.

mod beta;
pub mod harmonics;
mod legendre;
mod polylog;
mod sum_poly;
mod zeta;

pub use beta::{b_ln, incomplete_beta};
pub use harmonics::{spherical_harmonic, triangular_index, ylm_nonnegative, NormalizedLegendre};
pub use legendre::{legendre_batch, legendre_complement, legendre_p, mehler_dirichlet_p};
pub use polylog::{
    polylog, polylog_direct, polylog_expansion, polylog_minus_zeta, PolylogSeries, EXPANSION_CROSSOVER,
};
pub use sum_poly::{
    legendre_series_resummed, legendre_series_sum, log_grid, sum_poly_asymptotic_check, sum_poly_rows, LogCorrectedFit,
    ResummedSum, SumPolyCase, SumPolyReport, SumPolyRow, MAX_LOG_FIT_RESIDUAL, MAX_SLOPE_FIT_RESIDUAL,
};
pub use zeta::{harmonic_number, riemann_zeta};

pub(crate) use legendre::{legendre_complement_fill, legendre_fill};
pub(crate) use sum_poly::linear_fit;

use crate::error::{domain, Result};

/// Tolerances and budgets shared by the series and quadrature routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyPolicy {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Most terms any series may sum.
    pub max_terms: usize,
    /// Most nodes any adaptive quadrature may use.
    pub quadrature_nodes: usize,
}

impl Default for AccuracyPolicy {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_terms: 10_000_000,
            quadrature_nodes: 1 << 16,
        }
    }
}

impl AccuracyPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return domain("tolerances must be positive");
        }
        if self.max_terms < 1 || self.quadrature_nodes < 1 {
            return domain("term and node budgets must be at least 1");
        }
        Ok(())
    }
}
