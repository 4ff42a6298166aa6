//! Pose chart: position ⊕ unit quaternion with the mixed update
//! p' = p + R(q)·v, q' = q ⊗ exp(ω). The translation row rotates the body-frame
//! linear deviant by the *base* orientation — deliberately not an SE(3) screw
//! motion.

use super::quaternion::{
    compose_unchecked, quat_conjugate, quat_exp, quat_log, rotate_vector, QuaternionPoint,
};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Ambient layout: [p0, p1, p2, w, x, y, z].
pub const POSE_AMBIENT: usize = 7;
/// Tangent layout: [v0, v1, v2, ω0, ω1, ω2].
pub const POSE_TANGENT: usize = 6;

pub(crate) fn check_pose_width<T>(x: &[T], context: &'static str) -> Result<()> {
    if x.len() != POSE_AMBIENT {
        return Err(Error::DimensionMismatch {
            context,
            expected: POSE_AMBIENT,
            got: x.len(),
        });
    }
    Ok(())
}

fn quat_of<T: Real>(x: &[T]) -> [T; 4] {
    [x[3], x[4], x[5], x[6]]
}

/// Mixed pose update on raw slices. The quaternion part of `x` must be unit
/// within the quaternion membership tolerance.
pub fn pose_exp<T: Real>(x: &[T], xi: &[T]) -> Result<[T; POSE_AMBIENT]> {
    check_pose_width(x, "pose_exp point")?;
    if xi.len() != POSE_TANGENT {
        return Err(Error::DimensionMismatch {
            context: "pose_exp tangent",
            expected: POSE_TANGENT,
            got: xi.len(),
        });
    }
    let q = quat_of(x);
    super::quaternion::quat_compose(q, quat_exp([xi[3], xi[4], xi[5]])).map(|q_new| {
        let dp = rotate_vector(q, [xi[0], xi[1], xi[2]]);
        [
            x[0] + dp[0],
            x[1] + dp[1],
            x[2] + dp[2],
            q_new[0],
            q_new[1],
            q_new[2],
            q_new[3],
        ]
    })
}

/// Exact right-inverse of [`pose_exp`]:
/// v = R(q_base)ᵀ(p_target − p_base), ω = log(q_base⁻¹ ⊗ q_target).
pub fn pose_log<T: Real>(base: &[T], target: &[T]) -> Result<[T; POSE_TANGENT]> {
    check_pose_width(base, "pose_log base")?;
    check_pose_width(target, "pose_log target")?;
    let qb = quat_of(base);
    let qt = quat_of(target);
    let omega = quat_log(compose_unchecked(quat_conjugate(qb), qt))?;
    let dp = [
        target[0] - base[0],
        target[1] - base[1],
        target[2] - base[2],
    ];
    let v = rotate_vector(quat_conjugate(qb), dp);
    Ok([v[0], v[1], v[2], omega[0], omega[1], omega[2]])
}

/// Position plus orientation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PosePoint {
    pub p: [f64; 3],
    pub q: QuaternionPoint,
}

/// Body-frame linear and angular deviant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoseTangent {
    pub v: [f64; 3],
    pub omega: [f64; 3],
}

impl PoseTangent {
    pub fn zero() -> Self {
        PoseTangent {
            v: [0.0; 3],
            omega: [0.0; 3],
        }
    }

    pub fn to_array(self) -> [f64; POSE_TANGENT] {
        [
            self.v[0],
            self.v[1],
            self.v[2],
            self.omega[0],
            self.omega[1],
            self.omega[2],
        ]
    }

    pub fn from_array(a: [f64; POSE_TANGENT]) -> Self {
        PoseTangent {
            v: [a[0], a[1], a[2]],
            omega: [a[3], a[4], a[5]],
        }
    }
}

impl PosePoint {
    pub fn identity() -> Self {
        PosePoint {
            p: [0.0; 3],
            q: QuaternionPoint::identity(),
        }
    }

    pub fn to_array(self) -> [f64; POSE_AMBIENT] {
        [
            self.p[0], self.p[1], self.p[2], self.q.w, self.q.x, self.q.y, self.q.z,
        ]
    }

    pub fn from_array(a: [f64; POSE_AMBIENT]) -> Self {
        PosePoint {
            p: [a[0], a[1], a[2]],
            q: QuaternionPoint::from_array([a[3], a[4], a[5], a[6]]),
        }
    }

    pub fn exp(self, xi: PoseTangent) -> Result<PosePoint> {
        let out = pose_exp(&self.to_array(), &xi.to_array())?;
        Ok(PosePoint::from_array(out))
    }

    pub fn log(self, target: PosePoint) -> Result<PoseTangent> {
        let out = pose_log(&self.to_array(), &target.to_array())?;
        Ok(PoseTangent::from_array(out))
    }
}
