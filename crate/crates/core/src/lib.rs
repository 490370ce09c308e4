//! Isotropic Gaussian random fields on the unit sphere S².

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::manual_range_contains, clippy::needless_range_loop)]

pub mod bump;
pub mod error;
pub mod field;
pub mod modulus;
pub mod point;
pub mod quad;
pub mod rng;
pub mod series;
pub mod slnd;
pub mod special;
pub mod spectra;
pub mod variogram;

pub use error::{Error, Result};
pub use field::{FieldRealization, HarmonicCoefficients};
pub use point::SpherePoint;
pub use series::Truncated;
pub use special::AccuracyPolicy;
pub use spectra::{rho_alpha, Envelope, PowerSpectrum, ScalingFunction};
