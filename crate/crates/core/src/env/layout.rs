//! Fixed world layout: show poses, grasp transform, and the meeting pose.
//!
//! World frame sits at the table center, z up. Gripper frames use z as the
//! approach axis. Objects are held `GRASP_DEPTH` ahead of the gripper with
//! their insertion axis (object z) along the gripper x axis, so at the show
//! poses both extrusion/intrusion faces point up at the top camera.

use crate::Pose;
use crate::{Mat3, Quat, Vec3};

pub const GRASP_DEPTH: f64 = 0.10;
pub const SHOW_LEFT: [f64; 3] = [-0.20, 0.0, 0.30];
pub const SHOW_RIGHT: [f64; 3] = [0.20, 0.0, 0.30];
/// Hole center when the right arm reaches its meeting pose.
pub const HOLE_MEET_CENTER: [f64; 3] = [0.04, 0.0, 0.30];
pub const TOP_CAMERA_HEIGHT: f64 = 0.9;
/// Side of the square imaged by the top camera (m).
pub const TOP_VIEW_EXTENT: f64 = 0.32;
/// Wrist cameras sit this far behind the gripper along its approach axis.
pub const WRIST_CAMERA_BACKOFF: f64 = 0.10;
pub const WRIST_VIEW_EXTENT: f64 = 0.24;

fn arr(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

/// Gripper → object transform before any perturbation.
pub fn grasp_transform() -> Pose {
    Pose::new(
        Vec3::new(0.0, 0.0, GRASP_DEPTH),
        Quat::rot_y(std::f64::consts::FRAC_PI_2),
    )
}

/// Left gripper at its show pose, approaching +X.
pub fn show_left() -> Pose {
    let r = Mat3::from_cols(
        Vec3::new(0.0, 0.0, 1.0),
        Vec3::new(0.0, -1.0, 0.0),
        Vec3::new(1.0, 0.0, 0.0),
    );
    Pose::from_matrix(arr(SHOW_LEFT), &r)
}

/// Right gripper at its show pose, approaching −X.
pub fn show_right() -> Pose {
    let r = Mat3::from_cols(
        Vec3::new(0.0, 0.0, 1.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(-1.0, 0.0, 0.0),
    );
    Pose::from_matrix(arr(SHOW_RIGHT), &r)
}

/// Nominal hole pose at the meeting point: face normal along −X.
pub fn hole_meet_pose() -> Pose {
    Pose::new(
        arr(HOLE_MEET_CENTER),
        Quat::rot_y(-std::f64::consts::FRAC_PI_2),
    )
}

/// Right gripper pose that places an unperturbed hole at the meeting point.
pub fn right_meet_pose() -> Pose {
    hole_meet_pose().compose(&grasp_transform().inverse())
}
