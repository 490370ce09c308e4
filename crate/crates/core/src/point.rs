//! Points on the unit sphere and rigid rotations acting on them.

use std::f64::consts::PI;

use nalgebra::{Rotation3, Unit, Vector3};
use rand::Rng;

use crate::error::{domain, Result};

/// A point on S², stored as a unit vector.
///
/// Colatitude ϑ ∈ [0, π] is measured from the North Pole (0, 0, 1) and the
/// longitude φ ∈ [0, 2π) from the x-axis, so that
/// x = (sin ϑ cos φ, sin ϑ sin φ, cos ϑ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint {
    v: [f64; 3],
}

impl SpherePoint {
    pub const NORTH_POLE: SpherePoint = SpherePoint { v: [0.0, 0.0, 1.0] };

    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self {
            v: [st * cp, st * sp, ct],
        }
    }

    /// Normalizes `v`; fails on the zero vector or non-finite input.
    pub fn from_vector(v: [f64; 3]) -> Result<Self> {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !n.is_finite() || n == 0.0 {
            return domain(format!("cannot normalize {v:?} onto the sphere"));
        }
        Ok(Self {
            v: [v[0] / n, v[1] / n, v[2] / n],
        })
    }

    /// Uniformly distributed point.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let z: f64 = rng.random_range(-1.0..=1.0);
        let phi: f64 = rng.random_range(0.0..2.0 * PI);
        let r = (1.0 - z * z).max(0.0).sqrt();
        Self {
            v: [r * phi.cos(), r * phi.sin(), z],
        }
    }

    pub fn vector(&self) -> [f64; 3] {
        self.v
    }

    pub fn theta(&self) -> f64 {
        // atan2 keeps full precision near the poles where acos does not.
        let rho = self.v[0].hypot(self.v[1]);
        rho.atan2(self.v[2])
    }

    pub fn phi(&self) -> f64 {
        let p = self.v[1].atan2(self.v[0]);
        if p < 0.0 {
            let wrapped = p + 2.0 * PI;
            if wrapped >= 2.0 * PI {
                0.0
            } else {
                wrapped
            }
        } else {
            p
        }
    }

    pub fn cos_theta(&self) -> f64 {
        self.v[2]
    }

    pub fn dot(&self, other: &SpherePoint) -> f64 {
        self.v[0] * other.v[0] + self.v[1] * other.v[1] + self.v[2] * other.v[2]
    }

    /// Geodesic distance, computed from the chord so that nearby points keep
    /// full relative precision.
    pub fn distance(&self, other: &SpherePoint) -> f64 {
        let d = [
            self.v[0] - other.v[0],
            self.v[1] - other.v[1],
            self.v[2] - other.v[2],
        ];
        let chord = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        2.0 * (0.5 * chord).min(1.0).asin()
    }

    /// The point at geodesic distance `dist` from `self` along the direction
    /// with bearing `bearing` (measured in the local tangent frame).
    pub fn offset(&self, dist: f64, bearing: f64) -> Self {
        let (e1, e2) = self.tangent_frame();
        let (sb, cb) = bearing.sin_cos();
        let t = [
            cb * e1[0] + sb * e2[0],
            cb * e1[1] + sb * e2[1],
            cb * e1[2] + sb * e2[2],
        ];
        let (sd, cd) = dist.sin_cos();
        let w = [
            cd * self.v[0] + sd * t[0],
            cd * self.v[1] + sd * t[1],
            cd * self.v[2] + sd * t[2],
        ];
        Self::from_vector(w).expect("unit combination is nonzero")
    }

    /// Orthonormal basis of the tangent plane at `self`.
    pub fn tangent_frame(&self) -> ([f64; 3], [f64; 3]) {
        let v = Vector3::from(self.v);
        let helper = if self.v[2].abs() < 0.9 {
            Vector3::z()
        } else {
            Vector3::x()
        };
        let e1 = helper.cross(&v).normalize();
        let e2 = v.cross(&e1);
        ([e1.x, e1.y, e1.z], [e2.x, e2.y, e2.z])
    }

    pub fn rotate(&self, r: &Rotation3<f64>) -> Self {
        let w = r * Vector3::from(self.v);
        Self::from_vector([w.x, w.y, w.z]).expect("rotation preserves norm")
    }

    /// Distance of the stored vector's norm from 1.
    pub fn norm_defect(&self) -> f64 {
        ((self.v[0] * self.v[0] + self.v[1] * self.v[1] + self.v[2] * self.v[2]).sqrt() - 1.0).abs()
    }
}

/// Geodesic distance arccos⟨x, y⟩ with the inner product clamped to [−1, 1].
pub fn geodesic_distance(x: &SpherePoint, y: &SpherePoint) -> f64 {
    x.distance(y)
}

/// A rotation taking `from` onto the North Pole.
pub fn rotation_to_north(from: &SpherePoint) -> Rotation3<f64> {
    let a = Vector3::from(from.vector());
    let z = Vector3::z();
    match Rotation3::rotation_between(&a, &z) {
        Some(r) => r,
        // antipodal: any half-turn about a horizontal axis
        None => Rotation3::from_axis_angle(&Vector3::x_axis(), PI),
    }
}

/// Uniformly random rotation (Haar measure on SO(3)).
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Rotation3<f64> {
    // uniform unit quaternion (Shoemake)
    let u1: f64 = rng.random();
    let u2: f64 = rng.random_range(0.0..2.0 * PI);
    let u3: f64 = rng.random_range(0.0..2.0 * PI);
    let q = nalgebra::Quaternion::new(
        u1.sqrt() * u3.cos(),
        (1.0 - u1).sqrt() * u2.sin(),
        (1.0 - u1).sqrt() * u2.cos(),
        u1.sqrt() * u3.sin(),
    );
    nalgebra::UnitQuaternion::from_quaternion(q).to_rotation_matrix()
}

/// Rotation about `axis` by `angle`.
pub fn axis_rotation(axis: &SpherePoint, angle: f64) -> Rotation3<f64> {
    let a = Unit::new_normalize(Vector3::from(axis.vector()));
    Rotation3::from_axis_angle(&a, angle)
}
