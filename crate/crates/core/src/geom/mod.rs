//! Rigid-body geometry: poses, rotation representations, rotation losses,
//! and the symmetry-aware success test.

mod loss;
mod matrix;
mod metric;
mod pose;
mod quat;
mod sixd;
mod vector;

pub use loss::{
    align_quat_sign, quat_matrix, rotation_loss, target_repr, RotationLossSpec, RotationMetric,
    RotationRepr,
};
pub use matrix::Mat3;
pub use metric::{
    geodesic_angle, success_check, success_check_with, symmetric_target, SuccessMargin,
};
pub use pose::Pose;
pub use quat::Quat;
pub use sixd::{gram_schmidt, sixd_from_matrix, ActionVec, Rot6D, GS_EPS};
pub use vector::{Vec2, Vec3};

#[cfg(test)]
mod tests;
