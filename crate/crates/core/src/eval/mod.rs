//! Seeded closed-loop evaluation and report files.

mod agent;
mod report;


use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use agent::{Agent, ExpertAgent, PolicyAgent, ZeroAgent};
pub use report::{parse_csv, write_curve_csv, CsvRow, CurveRow, EvalReport};

use crate::env::{Env, EnvConfig, TaskVariation, DEFAULT_HORIZON};
use crate::error::Result;
use crate::shapes::{ClearanceTable, ObjectKey, ObjectPair, ObjectSet};
use crate::Pose;

/// Seed offset between evaluation runs.
pub const RUN_SEED_STRIDE: u64 = 1_000_000;
pub const DEFAULT_ROLLOUTS: usize = 40;
pub const DEFAULT_RUNS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub success: bool,
    pub steps: usize,
    /// Gripper poses (left, right) after reset and after every step.
    pub trajectory: Vec<(Pose, Pose)>,
}

/// Resets with `seed` and runs `agent` until the episode ends.
pub fn rollout(
    agent: &mut dyn Agent,
    variation: TaskVariation,
    pair: &ObjectPair,
    seed: u64,
    horizon: usize,
) -> Result<Rollout> {
    let env = Env::new(EnvConfig {
        obs: agent.obs_config(),
        horizon,
        ..EnvConfig::default()
    });
    let (mut state, mut obs) = env.reset(variation, pair, seed);
    agent.begin(&state);
    let mut trajectory = vec![(state.left_gripper, state.right_gripper)];
    let control = agent.control();
    while !state.done {
        let a = agent.act(&obs, &state)?;
        obs = env.step(&mut state, &a, control)?.observation;
        trajectory.push((state.left_gripper, state.right_gripper));
    }
    Ok(Rollout {
        success: state.success,
        steps: state.step_count,
        trajectory,
    })
}

/// Seed of rollout `index` in evaluation run `run`.
pub fn eval_seed(base_seed: u64, run: usize, index: usize) -> u64 {
    base_seed
        .wrapping_add(index as u64)
        .wrapping_add(run as u64 * RUN_SEED_STRIDE)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub n: usize,
    pub successes: usize,
}

impl Tally {
    pub fn rate(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.successes as f64 / self.n as f64
        }
    }

    fn add(&mut self, success: bool) {
        self.n += 1;
        self.successes += success as usize;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub run: usize,
    pub total: Tally,
    pub per_object: BTreeMap<ObjectKey, Tally>,
}

/// One (variation, object set, policy) cell evaluated over several runs.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalCell {
    pub variation: TaskVariation,
    pub object_set: ObjectSet,
    pub policy: String,
    pub runs: Vec<RunResult>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64;
    (m, v.sqrt())
}

impl EvalCell {
    pub fn rates(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.total.rate()).collect()
    }

    /// Mean and sample standard deviation of the success rate across runs.
    pub fn mean_std(&self) -> (f64, f64) {
        mean_std(&self.rates())
    }

    /// Counts summed over all runs.
    pub fn pooled(&self) -> Tally {
        self.runs.iter().fold(Tally::default(), |acc, r| Tally {
            n: acc.n + r.total.n,
            successes: acc.successes + r.total.successes,
        })
    }

    /// Mean success rate of each object across runs.
    pub fn object_means(&self) -> BTreeMap<ObjectKey, f64> {
        let mut acc: BTreeMap<ObjectKey, Vec<f64>> = BTreeMap::new();
        for r in &self.runs {
            for (k, t) in &r.per_object {
                acc.entry(*k).or_default().push(t.rate());
            }
        }
        acc.into_iter().map(|(k, v)| (k, mean_std(&v).0)).collect()
    }

    /// Mean success over the objects with the given symmetry order, pooled
    /// across runs; `None` if the cell has no such object.
    pub fn order_rate(&self, order: u32) -> Option<f64> {
        let mut t = Tally::default();
        for r in &self.runs {
            for (k, v) in &r.per_object {
                if k.shape.symmetry_order() == order {
                    t.n += v.n;
                    t.successes += v.successes;
                }
            }
        }
        (t.n > 0).then(|| t.rate())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSpec {
    pub variation: TaskVariation,
    pub object_set: ObjectSet,
    pub n: usize,
    pub runs: usize,
    pub base_seed: u64,
    pub horizon: usize,
    pub clearances: ClearanceTable,
}

impl EvalSpec {
    pub fn new(variation: TaskVariation, object_set: ObjectSet) -> Self {
        Self {
            variation,
            object_set,
            n: DEFAULT_ROLLOUTS,
            runs: DEFAULT_RUNS,
            base_seed: 0,
            horizon: DEFAULT_HORIZON,
            clearances: ClearanceTable::default(),
        }
    }
}

/// Runs `spec.runs` evaluations of `spec.n` rollouts each. Objects cycle
/// through the set in order, so every policy sees identical initializations.
pub fn evaluate(agent: &mut dyn Agent, spec: &EvalSpec) -> Result<EvalCell> {
    let objects = spec.object_set.objects();
    let pairs = objects
        .iter()
        .map(|o| o.pair(&spec.clearances))
        .collect::<Result<Vec<_>>>()?;
    let mut runs = Vec::with_capacity(spec.runs);
    for run in 0..spec.runs {
        let mut res = RunResult {
            run,
            total: Tally::default(),
            per_object: BTreeMap::new(),
        };
        for i in 0..spec.n {
            let k = i % objects.len();
            let seed = eval_seed(spec.base_seed, run, i);
            let r = rollout(agent, spec.variation, &pairs[k], seed, spec.horizon)?;
            res.total.add(r.success);
            res.per_object.entry(objects[k]).or_default().add(r.success);
        }
        runs.push(res);
    }
    Ok(EvalCell {
        variation: spec.variation,
        object_set: spec.object_set,
        policy: agent.id(),
        runs,
    })
}
