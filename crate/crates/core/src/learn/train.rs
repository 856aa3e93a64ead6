use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{layout, ControlMode};
use crate::error::{Error, Result};
use crate::expert::Dataset;
use crate::{ActionVec, Mat3, Pose};

use super::policy::{action_loss_on_tape, Head, Policy, PolicyConfig};
use super::tape::{Tape, Var};
use super::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch: usize,
    pub steps: usize,
    pub seed: u64,
    pub w_translation: f64,
    pub w_rotation: f64,
    /// Window of the smoothed loss curve.
    pub log_every: usize,
    /// Keep a copy of the policy every this many steps (0 disables).
    #[serde(default)]
    pub snapshot_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            batch: 16,
            steps: 20_000,
            seed: 0,
            w_translation: 1.0,
            w_rotation: 1.0,
            log_every: 100,
            snapshot_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate {} must be > 0",
                self.lr
            )));
        }
        if self.batch == 0 || self.log_every == 0 {
            return Err(Error::InvalidArgument(
                "batch and log interval must be ≥ 1".into(),
            ));
        }
        Ok(())
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl Adam {
    pub fn new(lr: f64, params: &[Tensor]) -> Self {
        let zeros = || {
            params
                .iter()
                .map(|p| Tensor::zeros(p.rows, p.cols))
                .collect()
        };
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: zeros(),
            v: zeros(),
        }
    }

    pub fn step(&mut self, params: &mut [Tensor], grads: &[Tensor]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for i in 0..p.data.len() {
                let gi = g.data[i];
                m.data[i] = self.beta1 * m.data[i] + (1.0 - self.beta1) * gi;
                v.data[i] = self.beta2 * v.data[i] + (1.0 - self.beta2) * gi * gi;
                let mh = m.data[i] / c1;
                let vh = v.data[i] / c2;
                p.data[i] -= self.lr * mh / (vh.sqrt() + self.eps);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    pub loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub policy: Policy,
    /// Mean minibatch loss over each logging window.
    pub curve: Vec<CurvePoint>,
    /// Mean loss over every training frame after the last step.
    pub final_loss: f64,
    /// `(step, policy)` copies taken every `snapshot_every` steps.
    pub snapshots: Vec<(usize, Policy)>,
}

/// Pose-difference label: `Δt = t − t_prev`, `ΔR = R·R_prevᵀ`.
pub fn delta_action(prev: &(Pose, Pose), next: &ActionVec) -> Result<ActionVec> {
    let (l, r) = next.decode()?;
    let d = |p: &Pose, n: &Pose| {
        let dr: Mat3 = n.rotation() * p.rotation().transpose();
        Pose::from_matrix(n.t - p.t, &dr)
    };
    Ok(ActionVec::encode(&d(&prev.0, &l), &d(&prev.1, &r)))
}

/// Lower bound on the standardization scale. Features that barely vary in
/// the demonstrations would otherwise amplify small drift at rollout time.
pub const STD_FLOOR: f64 = 0.1;

/// Training inputs and labels, flattened over episodes.
pub struct Samples {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<ActionVec>,
    /// Index of each frame's first frame within its episode.
    pub episode_start: Vec<usize>,
    pub input_dim: usize,
}

impl Samples {
    pub fn build(dataset: &Dataset, config: &PolicyConfig) -> Result<Self> {
        let obs = dataset.manifest.obs_config();
        let input_dim = config.input_dim(&obs)?;
        let mut s = Samples {
            features: Vec::with_capacity(dataset.n_frames()),
            targets: Vec::with_capacity(dataset.n_frames()),
            episode_start: Vec::with_capacity(dataset.n_frames()),
            input_dim,
        };
        for e in &dataset.episodes {
            let start = s.features.len();
            let mut prev = (layout::show_left(), layout::show_right());
            for f in &e.frames {
                s.features.push(config.features(&obs, f)?);
                let a = f.action_vec();
                let label = match config.control {
                    ControlMode::Absolute => a,
                    ControlMode::Delta => delta_action(&prev, &a)?,
                };
                prev = a.decode()?;
                s.targets.push(label);
                s.episode_start.push(start);
            }
        }
        if s.features.is_empty() {
            return Err(Error::InvalidArgument("dataset has no frames".into()));
        }
        Ok(s)
    }

    /// Per-feature mean and standard deviation, the latter floored at
    /// [`STD_FLOOR`].
    pub fn feature_stats(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.features.len() as f64;
        let mut mean = vec![0.0; self.input_dim];
        for f in &self.features {
            for (m, x) in mean.iter_mut().zip(f) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; self.input_dim];
        for f in &self.features {
            for ((v, x), m) in var.iter_mut().zip(f).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var
            .into_iter()
            .map(|v| (v / n).sqrt().max(STD_FLOOR))
            .collect();
        (mean, std)
    }

    /// Replaces every feature vector by its standardized form.
    pub fn standardize(&mut self, policy: &Policy) {
        for f in &mut self.features {
            *f = policy.normalize(f);
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// One `batch × input_dim` tensor per time step, oldest first. Frames
    /// before the episode start are zero.
    pub fn batch_inputs(&self, idx: &[usize], history: usize) -> Vec<Tensor> {
        (0..history)
            .map(|k| {
                let back = history - 1 - k;
                let mut t = Tensor::zeros(idx.len(), self.input_dim);
                for (row, &i) in idx.iter().enumerate() {
                    if i >= self.episode_start[i] + back {
                        t.row_mut(row).copy_from_slice(&self.features[i - back]);
                    }
                }
                t
            })
            .collect()
    }
}

fn history_of(config: &PolicyConfig) -> usize {
    match config.head {
        Head::Mlp { .. } => 1,
        Head::Rnn { history, .. } => history,
    }
}

/// Loss and gradients for one minibatch.
pub fn batch_loss_and_grads(
    policy: &Policy,
    samples: &Samples,
    idx: &[usize],
    tc: &TrainConfig,
) -> Result<(f64, Vec<Tensor>)> {
    let mut tape = Tape::new();
    let params: Vec<Var> = policy.params.iter().map(|p| tape.leaf(p.clone())).collect();
    let inputs: Vec<Var> = samples
        .batch_inputs(idx, history_of(&policy.config))
        .into_iter()
        .map(|t| tape.leaf(t))
        .collect();
    let pred = policy.build(&mut tape, &params, &inputs)?;
    let targets: Vec<ActionVec> = idx.iter().map(|&i| samples.targets[i]).collect();
    let loss = action_loss_on_tape(
        &mut tape,
        pred,
        &targets,
        policy.config.rotation,
        tc.w_translation,
        tc.w_rotation,
    )?;
    let value = tape.value(loss).data[0];
    let grads = tape.backward(loss);
    let g = params
        .iter()
        .zip(&policy.params)
        .map(|(&v, p)| grads.get_or_zeros(v, p))
        .collect();
    Ok((value, g))
}

/// Mean per-frame loss over all samples.
pub fn dataset_loss(policy: &Policy, samples: &Samples, tc: &TrainConfig) -> Result<f64> {
    let all: Vec<usize> = (0..samples.len()).collect();
    let mut total = 0.0;
    for chunk in all.chunks(512) {
        let (l, _) = batch_loss_and_grads(policy, samples, chunk, tc)?;
        total += l * chunk.len() as f64;
    }
    Ok(total / samples.len() as f64)
}

/// Behavior cloning with Adam over uniformly sampled minibatches.
pub fn train(dataset: &Dataset, config: &PolicyConfig, tc: &TrainConfig) -> Result<TrainResult> {
    tc.validate()?;
    let obs = dataset.manifest.obs_config();
    let mut samples = Samples::build(dataset, config)?;
    let mut policy = Policy::new(config.clone(), obs, tc.seed)?;
    (policy.input_mean, policy.input_std) = samples.feature_stats();
    samples.standardize(&policy);
    let mut adam = Adam::new(tc.lr, &policy.params);
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    rng.set_stream(1);
    let mut curve = Vec::new();
    let mut window = 0.0;
    let mut in_window = 0usize;
    let mut snapshots = Vec::new();
    let mut idx = vec![0usize; tc.batch];
    for step in 1..=tc.steps {
        for i in idx.iter_mut() {
            *i = rng.gen_range(0..samples.len());
        }
        let (loss, grads) = batch_loss_and_grads(&policy, &samples, &idx, tc)?;
        if !loss.is_finite() || !grads.iter().all(Tensor::all_finite) {
            return Err(Error::NonFiniteLoss { step });
        }
        adam.step(&mut policy.params, &grads);
        window += loss;
        in_window += 1;
        if step % tc.log_every == 0 || step == tc.steps {
            curve.push(CurvePoint {
                step,
                loss: window / in_window as f64,
            });
            window = 0.0;
            in_window = 0;
        }
        if tc.snapshot_every > 0 && step % tc.snapshot_every == 0 {
            snapshots.push((step, policy.clone()));
        }
    }
    let final_loss = dataset_loss(&policy, &samples, tc)?;
    if !final_loss.is_finite() {
        return Err(Error::NonFiniteLoss { step: tc.steps });
    }
    Ok(TrainResult {
        policy,
        curve,
        final_loss,
        snapshots,
    })
}

pub fn write_curve_csv(path: &Path, curve: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::format(e.to_string()))?;
    w.write_record(["step", "loss"])
        .map_err(|e| Error::format(e.to_string()))?;
    for p in curve {
        w.write_record([p.step.to_string(), format!("{:e}", p.loss)])
            .map_err(|e| Error::format(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
