//! Unit quaternion chart: scalar-first storage, Hamilton product, exponential
//! and logarithm with small-angle branches.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Tangent magnitudes below this use second-order Taylor branches, keeping the
/// maps C² across the switch (no sqrt of a vanishing norm in the derivative).
pub const SMALL_ANGLE: f64 = 1e-8;

/// Membership slack accepted on *inputs* to quaternion operations.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Norm drift beyond this triggers a single rescale after composition.
const DRIFT_TOL: f64 = 1e-12;

fn norm2<T: Real>(q: &[T; 4]) -> T {
    q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]
}

fn check_unit<T: Real>(q: &[T; 4]) -> Result<()> {
    let n2 = norm2(q).re();
    // |n - 1| <= tol  <=>  |n^2 - 1| <= tol * (n + 1) ≈ 2 tol near the sphere.
    if (n2 - 1.0).abs() > 2.0 * MEMBERSHIP_TOL {
        return Err(Error::Membership { norm: n2.sqrt() });
    }
    Ok(())
}

/// Rotation-vector exponential: ω ↦ [cos(θ/2), sin(θ/2)·ω/θ].
pub fn quat_exp<T: Real>(omega: [T; 3]) -> [T; 4] {
    let n2 = omega[0] * omega[0] + omega[1] * omega[1] + omega[2] * omega[2];
    if n2.re() < SMALL_ANGLE * SMALL_ANGLE {
        let w = T::one() - n2 * T::from_f64(0.125);
        let f = T::from_f64(0.5) * (T::one() - n2 * T::from_f64(1.0 / 24.0));
        [w, omega[0] * f, omega[1] * f, omega[2] * f]
    } else {
        let theta = n2.sqrt();
        let half = theta * T::from_f64(0.5);
        let f = half.sin() / theta;
        [half.cos(), omega[0] * f, omega[1] * f, omega[2] * f]
    }
}

/// Rotation-vector logarithm with ‖result‖ ≤ π; returns the w ≥ 0
/// representative so q and -q map identically.
pub fn quat_log<T: Real>(q: [T; 4]) -> Result<[T; 3]> {
    check_unit(&q)?;
    let q = if q[0].re() < 0.0 {
        [-q[0], -q[1], -q[2], -q[3]]
    } else {
        q
    };
    let s2 = q[1] * q[1] + q[2] * q[2] + q[3] * q[3];
    if s2.re() < SMALL_ANGLE * SMALL_ANGLE {
        let w = q[0];
        let f = T::from_f64(2.0) / w
            * (T::one() - s2 / (T::from_f64(3.0) * w * w));
        Ok([q[1] * f, q[2] * f, q[3] * f])
    } else {
        let s = s2.sqrt();
        let angle = T::from_f64(2.0) * s.atan2(q[0]);
        let f = angle / s;
        Ok([q[1] * f, q[2] * f, q[3] * f])
    }
}

/// Hamilton product without membership checks; rescales once when the result
/// norm drifts beyond the guard band.
pub(crate) fn compose_unchecked<T: Real>(a: [T; 4], b: [T; 4]) -> [T; 4] {
    let mut q = [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ];
    let n2 = norm2(&q);
    if (n2.re() - 1.0).abs() > 2.0 * DRIFT_TOL {
        let inv = T::one() / n2.sqrt();
        for c in &mut q {
            *c = *c * inv;
        }
    }
    q
}

/// Hamilton product of two unit quaternions.
pub fn quat_compose<T: Real>(a: [T; 4], b: [T; 4]) -> Result<[T; 4]> {
    check_unit(&a)?;
    check_unit(&b)?;
    Ok(compose_unchecked(a, b))
}

pub fn quat_conjugate<T: Real>(q: [T; 4]) -> [T; 4] {
    [q[0], -q[1], -q[2], -q[3]]
}

/// Apply the rotation R(q) to a vector: v + 2w(u×v) + 2u×(u×v) with u the
/// vector part, evaluated via two cross products.
pub fn rotate_vector<T: Real>(q: [T; 4], v: [T; 3]) -> [T; 3] {
    let u = [q[1], q[2], q[3]];
    let t = [
        T::from_f64(2.0) * (u[1] * v[2] - u[2] * v[1]),
        T::from_f64(2.0) * (u[2] * v[0] - u[0] * v[2]),
        T::from_f64(2.0) * (u[0] * v[1] - u[1] * v[0]),
    ];
    [
        v[0] + q[0] * t[0] + u[1] * t[2] - u[2] * t[1],
        v[1] + q[0] * t[1] + u[2] * t[0] - u[0] * t[2],
        v[2] + q[0] * t[2] + u[0] * t[1] - u[1] * t[0],
    ]
}

/// Scalar-first unit quaternion (w, x, y, z).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuaternionPoint {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl QuaternionPoint {
    pub fn identity() -> Self {
        QuaternionPoint {
            w: 1.0,
            x: 0.0,
            y: 0.0,
            z: 0.0,
        }
    }

    pub fn from_array(q: [f64; 4]) -> Self {
        QuaternionPoint {
            w: q[0],
            x: q[1],
            y: q[2],
            z: q[3],
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn norm(self) -> f64 {
        norm2(&self.to_array()).sqrt()
    }

    pub fn exp(omega: [f64; 3]) -> Self {
        Self::from_array(quat_exp(omega))
    }

    pub fn log(self) -> Result<[f64; 3]> {
        quat_log(self.to_array())
    }

    pub fn compose(self, other: QuaternionPoint) -> Result<QuaternionPoint> {
        Ok(Self::from_array(quat_compose(
            self.to_array(),
            other.to_array(),
        )?))
    }

    pub fn conjugate(self) -> Self {
        Self::from_array(quat_conjugate(self.to_array()))
    }

    pub fn rotate(self, v: [f64; 3]) -> [f64; 3] {
        rotate_vector(self.to_array(), v)
    }

    /// 3×3 rotation matrix of the quaternion.
    pub fn rotation_matrix(self) -> [[f64; 3]; 3] {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        [
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ]
    }
}
