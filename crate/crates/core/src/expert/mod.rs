//! Scripted show→align→insert expert and demonstration datasets.

mod dataset;
mod plan;

#[cfg(test)]
mod tests;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use dataset::{
    Dataset, Episode, EpisodeMeta, Frame, Manifest, Mixture, MAGIC, SCHEMA, VERSION,
};
pub use plan::{
    phase_frames, plan, symmetry_correction, waypoints, SymmetryCorrection, Waypoint, Waypoints,
    ALIGN_GAP, FRAME_ROTATION, FRAME_TRANSLATION, MAX_FRAMES, MIN_FRAMES,
};

use crate::env::{ControlMode, Env, TaskVariation};
use crate::error::{Error, Result};
use crate::shapes::{ClearanceTable, ObjectKey, ObjectSet};

/// Stream of the per-episode RNG used for object selection; streams 0 and 1
/// belong to the grasp offsets.
const OBJECT_STREAM: u64 = 2;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of episode `index` in a dataset generated from `seed`.
pub fn episode_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index))
}

/// Uniform pick from `objects`, keyed by the episode seed.
pub fn pick_object(objects: &[ObjectKey], episode_seed: u64) -> ObjectKey {
    let mut rng = ChaCha8Rng::seed_from_u64(episode_seed);
    rng.set_stream(OBJECT_STREAM);
    objects[rng.gen_range(0..objects.len())]
}

/// Runs the planner on one reset and records every (observation, action)
/// pair up to the step at which the environment reports completion.
pub fn record_episode(
    env: &Env,
    variation: TaskVariation,
    object: ObjectKey,
    clearances: &ClearanceTable,
    seed: u64,
) -> Result<Episode> {
    let pair = object.pair(clearances)?;
    let (mut state, mut obs) = env.reset(variation, &pair, seed);
    let actions = plan(&state);
    let mut frames = Vec::with_capacity(actions.len());
    for a in &actions {
        frames.push(Frame::from_observation(&obs, a));
        let out = env.step(&mut state, a, ControlMode::Absolute)?;
        obs = out.observation;
        if out.done {
            break;
        }
    }
    Ok(Episode {
        object,
        seed,
        success: state.success,
        frames,
    })
}

/// Generates `n` verified expert episodes.
pub fn generate(
    env: &Env,
    n: usize,
    variation: TaskVariation,
    object_set: ObjectSet,
    seed: u64,
    clearances: &ClearanceTable,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "episode count must be at least 1".into(),
        ));
    }
    env.config.obs.validate()?;
    let objects = object_set.objects();
    let mut ds = Dataset::empty(Manifest::new(
        &env.config.obs,
        variation,
        object_set,
        seed,
        clearances.clone(),
    ));
    for i in 0..n as u64 {
        let s = episode_seed(seed, i);
        let object = pick_object(&objects, s);
        let ep = record_episode(env, variation, object, clearances, s)?;
        if !ep.success {
            return Err(Error::ExpertFailure(format!(
                "episode {i} ({object}, seed {s}) did not reach the insertion target"
            )));
        }
        if !(MIN_FRAMES..=MAX_FRAMES).contains(&ep.frames.len()) {
            return Err(Error::ExpertFailure(format!(
                "episode {i} ({object}) has {} frames",
                ep.frames.len()
            )));
        }
        ds.episodes.push(ep);
    }
    ds.sync_manifest();
    Ok(ds)
}
