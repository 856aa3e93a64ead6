use crate::env::{insertion_target, layout, EnvState};
use crate::{ActionVec, Pose, Quat, Vec3};

/// Face-to-face distance between peg and hole at the align waypoint (m).
pub const ALIGN_GAP: f64 = 0.06;
/// Per-frame translation speed (m).
pub const FRAME_TRANSLATION: f64 = 0.01;
/// Per-frame rotation speed (rad).
pub const FRAME_ROTATION: f64 = 9.0 * std::f64::consts::PI / 180.0;
pub const MIN_FRAMES: usize = 10;
pub const MAX_FRAMES: usize = 40;

/// Rotation about the insertion axis that the peg arm must add, chosen as the
/// smallest-magnitude member of the symmetry class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymmetryCorrection {
    /// Index of the symmetric target that is used.
    pub j: u32,
    /// Signed correction in degrees, in (−180, 180].
    pub degrees: i32,
}

fn wrap_degrees(d: i32) -> i32 {
    let r = d.rem_euclid(360);
    if r > 180 {
        r - 360
    } else {
        r
    }
}

/// `δ = wrap(rz_hole + rz_peg − j·360°/k)` minimized over `j`; ties go to
/// the smallest `j`.
pub fn symmetry_correction(order: u32, hole_quarters: u8, peg_quarters: u8) -> SymmetryCorrection {
    let k = order.max(1);
    let required = 90 * (hole_quarters as i32 + peg_quarters as i32);
    (0..k)
        .map(|j| SymmetryCorrection {
            j,
            degrees: wrap_degrees(required - (j * 360 / k) as i32),
        })
        .min_by_key(|c| (c.degrees.abs(), c.j))
        .expect("order ≥ 1")
}

/// Gripper poses (left, right) at one waypoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub left: Pose,
    pub right: Pose,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoints {
    pub show: Waypoint,
    pub align: Waypoint,
    pub insert: Waypoint,
    pub correction: SymmetryCorrection,
}

/// Show, align and insert gripper poses for a freshly reset state.
///
/// The right arm always goes to the same meeting pose; the peg arm absorbs
/// every grasp offset and the symmetry correction.
pub fn waypoints(state: &EnvState) -> Waypoints {
    let order = state.pair.symmetry_order();
    let correction = symmetry_correction(
        order,
        state.right_offset.rz_quarters,
        state.left_offset.rz_quarters,
    );
    let spin = Pose::from_rotation(Quat::rot_z(
        correction.j as f64 * std::f64::consts::TAU / order.max(1) as f64,
    ));
    let grasp = layout::grasp_transform();
    let right = layout::right_meet_pose();
    let hole = right
        .compose(&grasp)
        .compose(&state.right_offset.transform());
    let peg_hold_inv = grasp.compose(&state.left_offset.transform()).inverse();
    let target = insertion_target(&state.pair);
    let backed_off = Pose::new(target.t + Vec3::new(0.0, 0.0, ALIGN_GAP), target.q);
    let left_at = |t: &Pose| hole.compose(t).compose(&spin).compose(&peg_hold_inv);
    Waypoints {
        show: Waypoint {
            left: state.left_gripper,
            right: state.right_gripper,
        },
        align: Waypoint {
            left: left_at(&backed_off),
            right,
        },
        insert: Waypoint {
            left: left_at(&target),
            right,
        },
        correction,
    }
}

fn frames_for(a: &Waypoint, b: &Waypoint) -> usize {
    let (tl, rl) = a.left.distance(&b.left);
    let (tr, rr) = a.right.distance(&b.right);
    let need = (tl / FRAME_TRANSLATION)
        .max(rl / FRAME_ROTATION)
        .max(tr / FRAME_TRANSLATION)
        .max(rr / FRAME_ROTATION);
    ((need - 1e-9).ceil() as usize).max(1)
}

/// Frame counts for the two phases after clamping the total to the allowed
/// range. Only the first phase is stretched or compressed.
pub fn phase_frames(w: &Waypoints) -> (usize, usize) {
    let n2 = frames_for(&w.align, &w.insert);
    let n1 = frames_for(&w.show, &w.align);
    let total = (n1 + n2).clamp(MIN_FRAMES, MAX_FRAMES);
    (total.saturating_sub(n2).max(1), n2)
}

fn round_f32(a: ActionVec) -> ActionVec {
    let mut v = a.v;
    for x in &mut v {
        *x = *x as f32 as f64;
    }
    ActionVec { v }
}

/// Absolute next-pose actions from show through align to insert, rounded
/// to `f32` so they survive dataset storage unchanged.
pub fn plan(state: &EnvState) -> Vec<ActionVec> {
    let w = waypoints(state);
    let (n1, n2) = phase_frames(&w);
    let mut out = Vec::with_capacity(n1 + n2);
    for (from, to, n) in [(&w.show, &w.align, n1), (&w.align, &w.insert, n2)] {
        for i in 1..=n {
            let s = i as f64 / n as f64;
            let l = from.left.interpolate(&to.left, s);
            let r = from.right.interpolate(&to.right, s);
            out.push(round_f32(ActionVec::encode(&l, &r)));
        }
    }
    out
}
