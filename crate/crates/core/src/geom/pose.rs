use serde::{Deserialize, Serialize};

use super::{Mat3, Quat, Vec3};
use crate::scalar::Real;

/// Rigid transform: rotation `q` followed by translation `t` (meters).
///
/// The quaternion is renormalized by every constructor and by `compose`, so
/// chains of compositions stay on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose<T> {
    pub t: Vec3<T>,
    pub q: Quat<T>,
}

impl<T: Real> Pose<T> {
    pub fn new(t: Vec3<T>, q: Quat<T>) -> Self {
        Self {
            t,
            q: q.normalized(),
        }
    }

    pub fn identity() -> Self {
        Self::new(Vec3::zeros(), Quat::identity())
    }

    pub fn from_translation(t: Vec3<T>) -> Self {
        Self::new(t, Quat::identity())
    }

    pub fn from_rotation(q: Quat<T>) -> Self {
        Self::new(Vec3::zeros(), q)
    }

    pub fn from_matrix(t: Vec3<T>, r: &Mat3<T>) -> Self {
        Self::new(t, Quat::from_matrix(r))
    }

    pub fn rotation(&self) -> Mat3<T> {
        self.q.to_matrix()
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Self) -> Self {
        Self::new(self.t + self.q.rotate(other.t), self.q * other.q)
    }

    pub fn inverse(&self) -> Self {
        let qi = self.q.conjugate();
        Self::new(-qi.rotate(self.t), qi)
    }

    pub fn transform_point(&self, p: Vec3<T>) -> Vec3<T> {
        self.q.rotate(p) + self.t
    }

    pub fn transform_vector(&self, v: Vec3<T>) -> Vec3<T> {
        self.q.rotate(v)
    }

    /// Linear interpolation of translation and slerp of rotation.
    pub fn interpolate(&self, other: &Self, s: T) -> Self {
        Self::new(self.t.lerp(other.t, s), self.q.slerp(other.q, s))
    }

    /// Translation distance and geodesic rotation angle to `other`.
    pub fn distance(&self, other: &Self) -> (T, T) {
        let dt = (self.t - other.t).norm();
        let dq = self.q.conjugate() * other.q;
        (dt, dq.angle())
    }

    pub fn cast<U: Real>(&self) -> Pose<U> {
        Pose::new(self.t.cast(), self.q.cast())
    }
}
