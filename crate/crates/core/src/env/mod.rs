//! Kinematic dual-arm peg-in-hole environment.
//!
//! The left arm holds the peg, the right arm holds the hole. There is no
//! contact physics: success is decided purely by the relative pose of the
//! two objects.

pub mod layout;
mod render;
mod variation;


use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use render::{
    Camera, ColorMode, Face, Image, Scene, View, ViewSet, MAX_RESOLUTION, MIN_RESOLUTION,
};
pub use variation::{GraspOffset, TaskVariation, TILT_NOISE, TRANSLATION_NOISE};

use crate::error::{Error, Result};
use crate::geom::{success_check_with, SuccessMargin};
use crate::shapes::{ObjectPair, ShapeName};
use crate::{ActionVec, Pose, Quat, Vec3};

pub const DEFAULT_HORIZON: usize = 80;
pub const MAX_STEP_TRANSLATION: f64 = 0.05;
pub const MAX_STEP_ROTATION: f64 = 30.0 * std::f64::consts::PI / 180.0;
/// Length of the proprioceptive block: both gripper poses as pos + 6D.
pub const PROPRIO_DIM: usize = 18;
/// Extra oracle features: both grasp offsets as pos + 6D, then a shape one-hot.
pub const ORACLE_EXTRA_DIM: usize = 18 + ShapeName::ALL.len();

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlMode {
    #[default]
    Absolute,
    Delta,
}

impl fmt::Display for ControlMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ControlMode::Absolute => "absolute",
            ControlMode::Delta => "delta",
        })
    }
}

impl FromStr for ControlMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "absolute" | "abs" => Ok(ControlMode::Absolute),
            "delta" | "relative" => Ok(ControlMode::Delta),
            _ => Err(Error::InvalidArgument(format!(
                "unknown control mode `{s}`"
            ))),
        }
    }
}

/// What goes into an observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObsConfig {
    pub proprio: bool,
    pub oracle: bool,
    pub views: ViewSet,
    pub resolution: usize,
    pub color: ColorMode,
}

impl Default for ObsConfig {
    fn default() -> Self {
        Self {
            proprio: true,
            oracle: true,
            views: ViewSet::None,
            resolution: 64,
            color: ColorMode::Original,
        }
    }
}

impl ObsConfig {
    /// Length of the flat state vector (proprio and oracle features).
    pub fn state_dim(&self) -> usize {
        PROPRIO_DIM * self.proprio as usize + ORACLE_EXTRA_DIM * self.oracle as usize
    }

    pub fn n_views(&self) -> usize {
        self.views.views().len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(MIN_RESOLUTION..=MAX_RESOLUTION).contains(&self.resolution) {
            return Err(Error::InvalidArgument(format!(
                "resolution {} outside {MIN_RESOLUTION}..={MAX_RESOLUTION}",
                self.resolution
            )));
        }
        if self.state_dim() == 0 && self.n_views() == 0 {
            return Err(Error::InvalidArgument("observation is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub proprio: Option<[f64; PROPRIO_DIM]>,
    /// Offset transforms of both grasps (pos + 6D) followed by a shape one-hot.
    pub oracle: Option<Vec<f64>>,
    pub views: Vec<Image>,
}

impl Observation {
    /// Proprio (if enabled) followed by oracle features (if enabled).
    pub fn state_vector(&self) -> Vec<f64> {
        let mut v = Vec::new();
        if let Some(p) = &self.proprio {
            v.extend_from_slice(p);
        }
        if let Some(o) = &self.oracle {
            v.extend_from_slice(o);
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub obs: ObsConfig,
    pub horizon: usize,
    pub max_step_translation: f64,
    pub max_step_rotation: f64,
    pub margin: SuccessMargin,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            obs: ObsConfig::default(),
            horizon: DEFAULT_HORIZON,
            max_step_translation: MAX_STEP_TRANSLATION,
            max_step_rotation: MAX_STEP_ROTATION,
            margin: SuccessMargin::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub left_gripper: Pose,
    pub right_gripper: Pose,
    pub left_offset: GraspOffset,
    pub right_offset: GraspOffset,
    pub pair: ObjectPair,
    pub variation: TaskVariation,
    pub step_count: usize,
    pub rng_seed: u64,
    pub done: bool,
    pub success: bool,
}

impl EnvState {
    pub fn peg_pose(&self) -> Pose {
        object_pose(&self.left_gripper, &self.left_offset)
    }

    pub fn hole_pose(&self) -> Pose {
        object_pose(&self.right_gripper, &self.right_offset)
    }

    /// Peg pose expressed in the hole frame.
    pub fn relative(&self) -> Pose {
        self.hole_pose().inverse().compose(&self.peg_pose())
    }

    pub fn proprio(&self) -> [f64; PROPRIO_DIM] {
        ActionVec::encode(&self.left_gripper, &self.right_gripper).v
    }

    pub fn oracle_features(&self) -> Vec<f64> {
        let mut v = ActionVec::encode(
            &self.left_offset.transform(),
            &self.right_offset.transform(),
        )
        .v
        .to_vec();
        let mut onehot = [0.0; ShapeName::ALL.len()];
        onehot[self.pair.shape.name.index()] = 1.0;
        v.extend_from_slice(&onehot);
        v
    }

    pub fn scene(&self, color: ColorMode) -> Scene {
        let mut scene = Scene::default();
        scene.add_peg(&self.peg_pose(), &self.pair, color);
        scene.add_hole(&self.hole_pose(), &self.pair, color);
        scene
    }
}

/// World pose of an object held by `gripper` with the given grasp offset.
pub fn object_pose(gripper: &Pose, offset: &GraspOffset) -> Pose {
    gripper
        .compose(&layout::grasp_transform())
        .compose(&offset.transform())
}

/// Hole→peg transform at completion: faces flush along the insertion axis
/// with the peg turned over to face the hole.
pub fn insertion_target(pair: &ObjectPair) -> Pose {
    Pose::new(
        Vec3::new(0.0, 0.0, pair.base_size),
        Quat::rot_x(std::f64::consts::PI),
    )
}

pub fn render(state: &EnvState, view: View, resolution: usize, color: ColorMode) -> Image {
    let camera = match view {
        View::Top => Camera::top(),
        View::WristLeft => Camera::wrist(&state.left_gripper),
        View::WristRight => Camera::wrist(&state.right_gripper),
    };
    state.scene(color).render(&camera, resolution)
}

/// Limits the motion from `cur` towards `target` to the per-step maxima.
pub fn clamp_step(cur: &Pose, target: &Pose, max_t: f64, max_r: f64) -> Pose {
    let d = target.t - cur.t;
    let n = d.norm();
    let t = if n > max_t {
        cur.t + d.scale(max_t / n)
    } else {
        target.t
    };
    let (_, angle) = cur.distance(target);
    let q = if angle > max_r {
        cur.q.slerp(target.q, max_r / angle)
    } else {
        target.q
    };
    Pose::new(t, q)
}

/// Target pose for one arm. A degenerate 6D block leaves the rotation as is.
fn commanded(cur: &Pose, action: &ActionVec, arm: usize, mode: ControlMode) -> Pose {
    let t = action.translation(arm);
    let r = action
        .rot6d(arm)
        .gram_schmidt()
        .ok()
        .map(|m| Quat::from_matrix(&m));
    match mode {
        ControlMode::Absolute => Pose::new(t, r.unwrap_or(cur.q)),
        ControlMode::Delta => Pose::new(cur.t + t, r.map(|dq| dq * cur.q).unwrap_or(cur.q)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub done: bool,
    pub success: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Env {
    pub config: EnvConfig,
}

impl Env {
    pub fn new(config: EnvConfig) -> Self {
        Self { config }
    }

    pub fn reset(
        &self,
        variation: TaskVariation,
        pair: &ObjectPair,
        seed: u64,
    ) -> (EnvState, Observation) {
        let mut state = EnvState {
            left_gripper: layout::show_left(),
            right_gripper: layout::show_right(),
            left_offset: GraspOffset::sample(variation, seed, 0),
            right_offset: GraspOffset::sample(variation, seed, 1),
            pair: pair.clone(),
            variation,
            step_count: 0,
            rng_seed: seed,
            done: false,
            success: false,
        };
        state.success = self.is_success(&state);
        let obs = self.observe(&state);
        (state, obs)
    }

    pub fn is_success(&self, state: &EnvState) -> bool {
        success_check_with(
            &state.relative(),
            &insertion_target(&state.pair),
            state.pair.symmetry_order(),
            &self.config.margin,
        )
    }

    pub fn observe(&self, state: &EnvState) -> Observation {
        let obs = &self.config.obs;
        Observation {
            proprio: obs.proprio.then(|| state.proprio()),
            oracle: obs.oracle.then(|| state.oracle_features()),
            views: obs
                .views
                .views()
                .iter()
                .map(|&v| render(state, v, obs.resolution, obs.color))
                .collect(),
        }
    }

    /// Poses the arms would reach under `action`, after clamping.
    pub fn next_poses(
        &self,
        state: &EnvState,
        action: &ActionVec,
        mode: ControlMode,
    ) -> (Pose, Pose) {
        let c = &self.config;
        let l = commanded(&state.left_gripper, action, 0, mode);
        let r = commanded(&state.right_gripper, action, 1, mode);
        (
            clamp_step(
                &state.left_gripper,
                &l,
                c.max_step_translation,
                c.max_step_rotation,
            ),
            clamp_step(
                &state.right_gripper,
                &r,
                c.max_step_translation,
                c.max_step_rotation,
            ),
        )
    }

    pub fn step(
        &self,
        state: &mut EnvState,
        action: &ActionVec,
        mode: ControlMode,
    ) -> Result<StepOutcome> {
        if state.done {
            return Err(Error::EpisodeFinished);
        }
        let (l, r) = self.next_poses(state, action, mode);
        state.left_gripper = l;
        state.right_gripper = r;
        state.step_count += 1;
        state.success = self.is_success(state);
        state.done = state.success || state.step_count >= self.config.horizon;
        Ok(StepOutcome {
            observation: self.observe(state),
            done: state.done,
            success: state.success,
        })
    }
}
