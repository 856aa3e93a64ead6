use serde::{Deserialize, Serialize};

use super::{Mat3, Pose, Vec3};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Norm threshold below which a 6D column is treated as collapsed.
pub const GS_EPS: f64 = 1e-8;

/// Continuous 6D rotation representation: the first two columns of a
/// rotation matrix. Network outputs land here unnormalized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rot6D<T> {
    pub a1: Vec3<T>,
    pub a2: Vec3<T>,
}

impl<T: Real> Rot6D<T> {
    pub fn new(a1: Vec3<T>, a2: Vec3<T>) -> Self {
        Self { a1, a2 }
    }

    pub fn from_slice(s: &[T]) -> Self {
        Self::new(Vec3::from_slice(&s[0..3]), Vec3::from_slice(&s[3..6]))
    }

    pub fn to_array(self) -> [T; 6] {
        [
            self.a1.x, self.a1.y, self.a1.z, self.a2.x, self.a2.y, self.a2.z,
        ]
    }

    /// Completes the two columns to a proper rotation matrix.
    pub fn gram_schmidt(&self) -> Result<Mat3<T>> {
        gram_schmidt(self)
    }
}

/// Gram-Schmidt completion `[b1 b2 b1×b2]` of a 6D rotation.
pub fn gram_schmidt<T: Real>(r: &Rot6D<T>) -> Result<Mat3<T>> {
    let eps = T::lit(GS_EPS);
    let b1 =
        r.a1.try_normalize(eps)
            .ok_or(Error::DegenerateInput("first 6D column has vanishing norm"))?;
    let u = r.a2 - b1.scale(b1.dot(r.a2));
    let b2 = u
        .try_normalize(eps)
        .ok_or(Error::DegenerateInput("6D columns are parallel"))?;
    Ok(Mat3::from_cols(b1, b2, b1.cross(b2)))
}

/// First two columns of `r`. The caller guarantees `r` is orthonormal.
pub fn sixd_from_matrix<T: Real>(r: &Mat3<T>) -> Rot6D<T> {
    Rot6D::new(r.col(0), r.col(1))
}

/// Dual-arm action: `[left t(3) ++ 6D(6)] ++ [right t(3) ++ 6D(6)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionVec<T> {
    pub v: [T; 18],
}

impl<T: Real> ActionVec<T> {
    pub const DIM: usize = 18;

    pub fn from_slice(s: &[T]) -> Result<Self> {
        let v: [T; 18] = s
            .try_into()
            .map_err(|_| Error::dims(format!("action has {} values, expected 18", s.len())))?;
        Ok(Self { v })
    }

    pub fn zeros() -> Self {
        Self { v: [T::zero(); 18] }
    }

    pub fn encode(left: &Pose<T>, right: &Pose<T>) -> Self {
        let mut v = [T::zero(); 18];
        for (block, pose) in [left, right].into_iter().enumerate() {
            let o = block * 9;
            v[o..o + 3].copy_from_slice(&pose.t.to_array());
            v[o + 3..o + 9].copy_from_slice(&sixd_from_matrix(&pose.rotation()).to_array());
        }
        Self { v }
    }

    pub fn translation(&self, arm: usize) -> Vec3<T> {
        Vec3::from_slice(&self.v[arm * 9..arm * 9 + 3])
    }

    pub fn rot6d(&self, arm: usize) -> Rot6D<T> {
        Rot6D::from_slice(&self.v[arm * 9 + 3..arm * 9 + 9])
    }

    /// Pose of one arm (0 = left, 1 = right).
    pub fn decode_arm(&self, arm: usize) -> Result<Pose<T>> {
        let r = self.rot6d(arm).gram_schmidt()?;
        Ok(Pose::from_matrix(self.translation(arm), &r))
    }

    pub fn decode(&self) -> Result<(Pose<T>, Pose<T>)> {
        Ok((self.decode_arm(0)?, self.decode_arm(1)?))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.v
    }
}
