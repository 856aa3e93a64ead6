use serde::{Deserialize, Serialize};

use super::{Mat3, Pose, Quat};
use crate::scalar::Real;

/// Geodesic distance on SO(3) via the trace formula, in `[0, π]`.
pub fn geodesic_angle<T: Real>(r1: &Mat3<T>, r2: &Mat3<T>) -> T {
    let c = ((r1.inner(r2) - T::one()) * T::half())
        .max(-T::one())
        .min(T::one());
    c.acos()
}

/// Success tolerances for the relative object transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessMargin {
    pub translation: f64,
    pub rotation: f64,
}

impl Default for SuccessMargin {
    fn default() -> Self {
        Self {
            translation: 0.01,
            rotation: 5f64.to_radians(),
        }
    }
}

/// `target ∘ Rz(j·2π/k)`, the j-th symmetry-equivalent target.
pub fn symmetric_target<T: Real>(target: &Pose<T>, order: u32, j: u32) -> Pose<T> {
    let angle = T::lit(j as f64) * T::TAU() / T::lit(order as f64);
    target.compose(&Pose::from_rotation(Quat::rot_z(angle)))
}

/// Whether `rel` lies within `margin` of any of the `order` symmetry-equivalent
/// versions of `target` (rotations about the insertion axis).
pub fn success_check_with<T: Real>(
    rel: &Pose<T>,
    target: &Pose<T>,
    order: u32,
    margin: &SuccessMargin,
) -> bool {
    let rel_r = rel.rotation();
    let max_t = T::lit(margin.translation);
    let max_r = T::lit(margin.rotation);
    (0..order.max(1)).any(|j| {
        let cand = symmetric_target(target, order.max(1), j);
        (rel.t - cand.t).norm() <= max_t && geodesic_angle(&rel_r, &cand.rotation()) <= max_r
    })
}

/// Success check with the default 1 cm / 5° margin.
pub fn success_check<T: Real>(rel: &Pose<T>, target: &Pose<T>, order: u32) -> bool {
    success_check_with(rel, target, order, &SuccessMargin::default())
}
