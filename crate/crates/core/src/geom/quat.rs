use std::ops::{Mul, Neg};

use serde::{Deserialize, Serialize};

use super::{Mat3, Vec3};
use crate::scalar::Real;

/// Quaternion stored as (w, x, y, z).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quat<T> {
    pub w: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Quat<T> {
    pub fn new(w: T, x: T, y: T, z: T) -> Self {
        Self { w, x, y, z }
    }

    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::zero())
    }

    pub fn from_array(a: [T; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [T; 4] {
        [self.w, self.x, self.y, self.z]
    }

    /// Rotation of `angle` radians about `axis` (need not be unit length).
    pub fn from_axis_angle(axis: Vec3<T>, angle: T) -> Self {
        let axis = axis.try_normalize(T::zero()).unwrap_or_else(Vec3::unit_z);
        let (s, c) = (angle * T::half()).sin_cos();
        Self::new(c, axis.x * s, axis.y * s, axis.z * s)
    }

    pub fn rot_x(angle: T) -> Self {
        Self::from_axis_angle(Vec3::unit_x(), angle)
    }

    pub fn rot_y(angle: T) -> Self {
        Self::from_axis_angle(Vec3::unit_y(), angle)
    }

    pub fn rot_z(angle: T) -> Self {
        Self::from_axis_angle(Vec3::unit_z(), angle)
    }

    pub fn dot(self, o: Self) -> T {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn scale(self, s: T) -> Self {
        Self::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    /// Unit quaternion, or `None` when the norm is at most `eps`.
    pub fn try_normalize(self, eps: T) -> Option<Self> {
        let n = self.norm();
        (n > eps).then(|| self.scale(T::one() / n))
    }

    pub fn normalized(self) -> Self {
        self.try_normalize(T::zero()).unwrap_or_else(Self::identity)
    }

    pub fn conjugate(self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn rotate(self, v: Vec3<T>) -> Vec3<T> {
        let u = Vec3::new(self.x, self.y, self.z);
        let t = u.cross(v).scale(T::two());
        v + t.scale(self.w) + u.cross(t)
    }

    pub fn to_matrix(self) -> Mat3<T> {
        let Self { w, x, y, z } = self;
        let one = T::one();
        let two = T::two();
        Mat3::from_rows([
            [
                one - two * (y * y + z * z),
                two * (x * y - w * z),
                two * (x * z + w * y),
            ],
            [
                two * (x * y + w * z),
                one - two * (x * x + z * z),
                two * (y * z - w * x),
            ],
            [
                two * (x * z - w * y),
                two * (y * z + w * x),
                one - two * (x * x + y * y),
            ],
        ])
    }

    /// Unit quaternion of a rotation matrix (Shepperd's branch selection),
    /// returned with `w >= 0`.
    pub fn from_matrix(r: &Mat3<T>) -> Self {
        let m = &r.m;
        let one = T::one();
        let quarter = T::lit(0.25);
        let tr = r.trace();
        let q = if tr > T::zero() {
            let s = (tr + one).sqrt() * T::two();
            Self::new(
                quarter * s,
                (m[2][1] - m[1][2]) / s,
                (m[0][2] - m[2][0]) / s,
                (m[1][0] - m[0][1]) / s,
            )
        } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
            let s = (one + m[0][0] - m[1][1] - m[2][2]).sqrt() * T::two();
            Self::new(
                (m[2][1] - m[1][2]) / s,
                quarter * s,
                (m[0][1] + m[1][0]) / s,
                (m[0][2] + m[2][0]) / s,
            )
        } else if m[1][1] > m[2][2] {
            let s = (one + m[1][1] - m[0][0] - m[2][2]).sqrt() * T::two();
            Self::new(
                (m[0][2] - m[2][0]) / s,
                (m[0][1] + m[1][0]) / s,
                quarter * s,
                (m[1][2] + m[2][1]) / s,
            )
        } else {
            let s = (one + m[2][2] - m[0][0] - m[1][1]).sqrt() * T::two();
            Self::new(
                (m[1][0] - m[0][1]) / s,
                (m[0][2] + m[2][0]) / s,
                (m[1][2] + m[2][1]) / s,
                quarter * s,
            )
        };
        let q = q.normalized();
        if q.w < T::zero() {
            -q
        } else {
            q
        }
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(self) -> T {
        let w = self.w.abs().min(T::one());
        T::two() * w.acos()
    }

    /// Shortest-arc spherical interpolation.
    pub fn slerp(self, other: Self, s: T) -> Self {
        let mut b = other;
        let mut d = self.dot(b);
        if d < T::zero() {
            b = -b;
            d = -d;
        }
        if d > T::lit(0.9995) {
            let lerp = Self::new(
                self.w + (b.w - self.w) * s,
                self.x + (b.x - self.x) * s,
                self.y + (b.y - self.y) * s,
                self.z + (b.z - self.z) * s,
            );
            return lerp.normalized();
        }
        let theta = d.min(T::one()).acos();
        let sin_theta = theta.sin();
        let wa = ((T::one() - s) * theta).sin() / sin_theta;
        let wb = (s * theta).sin() / sin_theta;
        Self::new(
            self.w * wa + b.w * wb,
            self.x * wa + b.x * wb,
            self.y * wa + b.y * wb,
            self.z * wa + b.z * wb,
        )
        .normalized()
    }

    pub fn cast<U: Real>(self) -> Quat<U> {
        Quat::new(
            U::from(self.w).unwrap(),
            U::from(self.x).unwrap(),
            U::from(self.y).unwrap(),
            U::from(self.z).unwrap(),
        )
    }
}

impl<T: Real> Neg for Quat<T> {
    type Output = Self;

    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Real> Mul for Quat<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }
}
