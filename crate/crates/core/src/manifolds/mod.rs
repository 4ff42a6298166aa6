//! State-manifold charts: ambient points, tangent deviants, and the
//! exponential/logarithm maps between them.
//!
//! A chart is an ordered list of blocks (Euclidean, unit quaternion, pose);
//! all maps apply blockwise, so products of charts are just concatenations.

pub mod pose;
pub mod quaternion;

pub use pose::{pose_exp, pose_log, PosePoint, PoseTangent, POSE_AMBIENT, POSE_TANGENT};
pub use quaternion::{
    quat_compose, quat_conjugate, quat_exp, quat_log, rotate_vector, QuaternionPoint,
};

use crate::error::{Error, Result};
use crate::scalar::Real;
use quaternion::compose_unchecked;

/// One factor of a product chart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Block {
    Euclidean(usize),
    Quaternion,
    Pose,
}

impl Block {
    pub fn ambient_dim(&self) -> usize {
        match self {
            Block::Euclidean(n) => *n,
            Block::Quaternion => 4,
            Block::Pose => POSE_AMBIENT,
        }
    }

    pub fn tangent_dim(&self) -> usize {
        match self {
            Block::Euclidean(n) => *n,
            Block::Quaternion => 3,
            Block::Pose => POSE_TANGENT,
        }
    }
}

/// Product manifold chart with blockwise exponential/logarithm maps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifoldChart {
    blocks: Vec<Block>,
}

/// Concatenate charts into their product. Errors on an empty list.
pub fn product_chart(parts: &[ManifoldChart]) -> Result<ManifoldChart> {
    if parts.is_empty() {
        return Err(Error::Construction {
            phase: None,
            reason: "product of zero charts".into(),
        });
    }
    let blocks = parts.iter().flat_map(|c| c.blocks.iter().cloned()).collect();
    Ok(ManifoldChart { blocks })
}

impl ManifoldChart {
    pub fn euclidean(n: usize) -> Self {
        ManifoldChart {
            blocks: vec![Block::Euclidean(n)],
        }
    }

    pub fn quaternion() -> Self {
        ManifoldChart {
            blocks: vec![Block::Quaternion],
        }
    }

    pub fn pose() -> Self {
        ManifoldChart {
            blocks: vec![Block::Pose],
        }
    }

    pub fn from_blocks(blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Construction {
                phase: None,
                reason: "chart with zero blocks".into(),
            });
        }
        Ok(ManifoldChart { blocks })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn ambient_dim(&self) -> usize {
        self.blocks.iter().map(Block::ambient_dim).sum()
    }

    pub fn tangent_dim(&self) -> usize {
        self.blocks.iter().map(Block::tangent_dim).sum()
    }

    /// Ambient offsets of every quaternion quadruple (standalone or inside a
    /// pose block).
    pub fn quaternion_offsets(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut off = 0;
        for b in &self.blocks {
            match b {
                Block::Euclidean(_) => {}
                Block::Quaternion => out.push(off),
                Block::Pose => out.push(off + 3),
            }
            off += b.ambient_dim();
        }
        out
    }

    /// Identity point: zeros on Euclidean blocks, identity quaternions.
    pub fn neutral(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.ambient_dim());
        for b in &self.blocks {
            match b {
                Block::Euclidean(n) => out.extend(std::iter::repeat(0.0).take(*n)),
                Block::Quaternion => out.extend_from_slice(&[1.0, 0.0, 0.0, 0.0]),
                Block::Pose => out.extend_from_slice(&[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]),
            }
        }
        out
    }

    fn check_dims<T>(&self, point: &[T], tangent: Option<&[T]>) -> Result<()> {
        if point.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                context: "chart point",
                expected: self.ambient_dim(),
                got: point.len(),
            });
        }
        if let Some(t) = tangent {
            if t.len() != self.tangent_dim() {
                return Err(Error::DimensionMismatch {
                    context: "chart tangent",
                    expected: self.tangent_dim(),
                    got: t.len(),
                });
            }
        }
        Ok(())
    }

    /// Blockwise exponential map: perturb `point` by `tangent`.
    pub fn exp<T: Real>(&self, point: &[T], tangent: &[T]) -> Result<Vec<T>> {
        self.check_dims(point, Some(tangent))?;
        let mut out = Vec::with_capacity(self.ambient_dim());
        let (mut ai, mut ti) = (0, 0);
        for b in &self.blocks {
            let (an, tn) = (b.ambient_dim(), b.tangent_dim());
            let x = &point[ai..ai + an];
            let xi = &tangent[ti..ti + tn];
            match b {
                Block::Euclidean(_) => {
                    out.extend(x.iter().zip(xi).map(|(&a, &d)| a + d));
                }
                Block::Quaternion => {
                    let q = [x[0], x[1], x[2], x[3]];
                    let step = quat_exp([xi[0], xi[1], xi[2]]);
                    let composed = quat_compose(q, step)?;
                    out.extend_from_slice(&composed);
                }
                Block::Pose => {
                    out.extend_from_slice(&pose_exp(x, xi)?);
                }
            }
            ai += an;
            ti += tn;
        }
        Ok(out)
    }

    /// Blockwise logarithm: tangent at `base` reaching `target`.
    pub fn log<T: Real>(&self, base: &[T], target: &[T]) -> Result<Vec<T>> {
        self.check_dims(base, None)?;
        self.check_dims(target, None)?;
        let mut out = Vec::with_capacity(self.tangent_dim());
        let mut ai = 0;
        for b in &self.blocks {
            let an = b.ambient_dim();
            let x = &base[ai..ai + an];
            let y = &target[ai..ai + an];
            match b {
                Block::Euclidean(_) => {
                    out.extend(x.iter().zip(y).map(|(&a, &b)| b - a));
                }
                Block::Quaternion => {
                    let rel = compose_unchecked(
                        quat_conjugate([x[0], x[1], x[2], x[3]]),
                        [y[0], y[1], y[2], y[3]],
                    );
                    out.extend_from_slice(&quat_log(rel)?);
                }
                Block::Pose => {
                    out.extend_from_slice(&pose_log(x, y)?);
                }
            }
            ai += an;
        }
        Ok(out)
    }

    /// Ambient-coordinate velocity corresponding to a tangent rate at `point`:
    /// the derivative of `exp(point, s·rate)` at s = 0. Euclidean blocks pass
    /// through, quaternions get q̇ = ½ q ⊗ (0, ω), pose positions get R(q)·v̇.
    pub fn ambient_rate<T: Real>(&self, point: &[T], rate: &[T]) -> Result<Vec<T>> {
        self.check_dims(point, Some(rate))?;
        let mut out = Vec::with_capacity(self.ambient_dim());
        let (mut ai, mut ti) = (0, 0);
        let half = T::from_f64(0.5);
        for b in &self.blocks {
            let (an, tn) = (b.ambient_dim(), b.tangent_dim());
            let x = &point[ai..ai + an];
            let xi = &rate[ti..ti + tn];
            match b {
                Block::Euclidean(_) => out.extend_from_slice(xi),
                Block::Quaternion => {
                    let q = [x[0], x[1], x[2], x[3]];
                    let w = [T::zero(), xi[0] * half, xi[1] * half, xi[2] * half];
                    // Plain Hamilton product: the second factor is not unit.
                    out.extend_from_slice(&hamilton(q, w));
                }
                Block::Pose => {
                    let q = [x[3], x[4], x[5], x[6]];
                    let dp = rotate_vector(q, [xi[0], xi[1], xi[2]]);
                    out.extend_from_slice(&dp);
                    let w = [T::zero(), xi[3] * half, xi[4] * half, xi[5] * half];
                    out.extend_from_slice(&hamilton(q, w));
                }
            }
            ai += an;
            ti += tn;
        }
        Ok(out)
    }

    /// Quaternion-norm membership check at the given tolerance on ‖q‖ − 1.
    pub fn check_membership(&self, point: &[f64], tol: f64) -> Result<()> {
        self.check_dims(point, None)?;
        for off in self.quaternion_offsets() {
            let q = &point[off..off + 4];
            let norm = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
            if (norm - 1.0).abs() > tol {
                return Err(Error::Membership { norm });
            }
        }
        Ok(())
    }
}

/// Hamilton product without unit-norm assumptions (used for rate kinematics).
fn hamilton<T: Real>(a: [T; 4], b: [T; 4]) -> [T; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}
