use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{ControlMode, ObsConfig, ORACLE_EXTRA_DIM, PROPRIO_DIM};
use crate::error::{Error, Result};
use crate::expert::Frame;
use crate::geom::{
    quat_matrix, rotation_loss, sixd_from_matrix, Quat, RotationLossSpec, RotationMetric,
    RotationRepr,
};
use crate::{ActionVec, Mat3};

use super::tape::{Tape, Var};
use super::tensor::Tensor;

pub const OUTPUT_DIM: usize = 18;

/// How observations become network inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Encoder {
    /// Ground-truth grasp offsets and shape identity.
    OracleState,
    ProprioOnly,
    /// Area-downsampled pixels of every view, flattened.
    FlattenedImage {
        downsample: usize,
    },
}

impl fmt::Display for Encoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Encoder::OracleState => f.write_str("oracle"),
            Encoder::ProprioOnly => f.write_str("proprio"),
            Encoder::FlattenedImage { downsample } => write!(f, "image:{downsample}"),
        }
    }
}

impl FromStr for Encoder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "oracle" | "oracle-state" => Ok(Encoder::OracleState),
            "proprio" | "proprio-only" => Ok(Encoder::ProprioOnly),
            "image" => Ok(Encoder::FlattenedImage { downsample: 4 }),
            _ => s
                .strip_prefix("image:")
                .and_then(|d| d.parse().ok())
                .filter(|&d| d >= 1)
                .map(|downsample| Encoder::FlattenedImage { downsample })
                .ok_or_else(|| Error::InvalidArgument(format!("unknown encoder `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Head {
    Mlp { hidden: Vec<usize> },
    Rnn { hidden: Vec<usize>, history: usize },
}

impl Head {
    pub fn hidden(&self) -> &[usize] {
        match self {
            Head::Mlp { hidden } | Head::Rnn { hidden, .. } => hidden,
        }
    }

    pub fn history(&self) -> usize {
        match self {
            Head::Mlp { .. } => 1,
            Head::Rnn { history, .. } => *history,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub encoder: Encoder,
    pub head: Head,
    pub rotation: RotationLossSpec,
    pub use_proprio: bool,
    pub control: ControlMode,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            encoder: Encoder::OracleState,
            head: Head::Mlp {
                hidden: vec![128, 128],
            },
            rotation: RotationLossSpec::SIXD_MSE,
            use_proprio: true,
            control: ControlMode::Absolute,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        let h = self.head.hidden();
        if h.is_empty() && matches!(self.head, Head::Rnn { .. }) {
            return Err(Error::InvalidArgument(
                "RNN head needs at least one layer".into(),
            ));
        }
        if h.contains(&0) {
            return Err(Error::InvalidArgument(
                "layer sizes must be positive".into(),
            ));
        }
        if self.head.history() == 0 {
            return Err(Error::InvalidArgument(
                "history length must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Number of loss-bearing output values (the quaternion variants leave
    /// two slots per arm unused).
    pub fn active_outputs(&self) -> usize {
        6 + 2 * self.rotation.repr.dim()
    }

    /// Input width for observations produced under `obs`.
    pub fn input_dim(&self, obs: &ObsConfig) -> Result<usize> {
        let proprio = if self.use_proprio {
            if !obs.proprio {
                return Err(Error::dims(
                    "policy uses proprioception but observations lack it",
                ));
            }
            PROPRIO_DIM
        } else {
            0
        };
        match self.encoder {
            Encoder::OracleState => {
                if !obs.oracle {
                    return Err(Error::dims("oracle encoder needs oracle observations"));
                }
                Ok(proprio + ORACLE_EXTRA_DIM)
            }
            Encoder::ProprioOnly => {
                if !obs.proprio {
                    return Err(Error::dims("proprio encoder needs proprioception"));
                }
                Ok(PROPRIO_DIM)
            }
            Encoder::FlattenedImage { downsample } => {
                if obs.n_views() == 0 {
                    return Err(Error::dims("image encoder needs at least one view"));
                }
                if downsample == 0 || !obs.resolution.is_multiple_of(downsample) {
                    return Err(Error::dims(format!(
                        "resolution {} not divisible by downsample {downsample}",
                        obs.resolution
                    )));
                }
                let side = obs.resolution / downsample;
                Ok(proprio + obs.n_views() * side * side)
            }
        }
    }

    /// Network input for one stored frame.
    pub fn features(&self, obs: &ObsConfig, frame: &Frame) -> Result<Vec<f64>> {
        let dim = self.input_dim(obs)?;
        if frame.state.len() != obs.state_dim() || frame.views.len() != obs.n_views() {
            return Err(Error::dims("frame does not match observation config"));
        }
        let state = &frame.state;
        let proprio = || state[..PROPRIO_DIM].iter().map(|&x| x as f64);
        let mut out = Vec::with_capacity(dim);
        if self.use_proprio && !matches!(self.encoder, Encoder::ProprioOnly) {
            out.extend(proprio());
        }
        match self.encoder {
            Encoder::OracleState => {
                let off = if obs.proprio { PROPRIO_DIM } else { 0 };
                out.extend(state[off..off + ORACLE_EXTRA_DIM].iter().map(|&x| x as f64));
            }
            Encoder::ProprioOnly => out.extend(proprio()),
            Encoder::FlattenedImage { downsample } => {
                for v in &frame.views {
                    downsample_into(v, obs.resolution, downsample, &mut out);
                }
            }
        }
        debug_assert_eq!(out.len(), dim);
        Ok(out)
    }
}

/// Block-mean downsampling of a square u8 image, scaled to [0, 1].
fn downsample_into(pixels: &[u8], res: usize, f: usize, out: &mut Vec<f64>) {
    let side = res / f;
    let norm = 1.0 / (255.0 * (f * f) as f64);
    for br in 0..side {
        for bc in 0..side {
            let mut s = 0u32;
            for r in br * f..(br + 1) * f {
                for c in bc * f..(bc + 1) * f {
                    s += pixels[r * res + c] as u32;
                }
            }
            out.push(s as f64 * norm);
        }
    }
}

/// Rotation matrix each arm of `target` encodes.
fn target_rotations(target: &ActionVec) -> Result<[Mat3; 2]> {
    Ok([
        target.rot6d(0).gram_schmidt()?,
        target.rot6d(1).gram_schmidt()?,
    ])
}

/// Per-sample imitation loss on a raw network output.
///
/// Translation errors are squared; rotation errors follow
/// [`rotation_loss`]. The weighted sum is divided by the number of active
/// outputs, so with unit weights and 6D-MSE this is the plain mean over all
/// 18 values.
pub fn action_loss(
    pred: &[f64],
    target: &ActionVec,
    spec: RotationLossSpec,
    w_translation: f64,
    w_rotation: f64,
) -> Result<f64> {
    if pred.len() != OUTPUT_DIM {
        return Err(Error::dims(format!("prediction has {} values", pred.len())));
    }
    let d = spec.repr.dim();
    let mut trans = 0.0;
    let mut rot_raw = Vec::with_capacity(2 * d);
    for arm in 0..2 {
        let o = arm * 9;
        for k in 0..3 {
            let e = pred[o + k] - target.v[o + k];
            trans += e * e;
        }
        rot_raw.extend_from_slice(&pred[o + 3..o + 3 + d]);
    }
    let mats = target_rotations(target)?;
    let r = rotation_loss(&rot_raw, &mats, spec)?;
    let rot = match spec.metric {
        RotationMetric::Mse => r * rot_raw.len() as f64,
        RotationMetric::Frobenius => r,
    };
    Ok((w_translation * trans + w_rotation * rot) / (6 + 2 * d) as f64)
}

/// Batch mean of [`action_loss`] recorded on a tape.
pub fn action_loss_on_tape(
    tape: &mut Tape,
    pred: Var,
    targets: &[ActionVec],
    spec: RotationLossSpec,
    w_translation: f64,
    w_rotation: f64,
) -> Result<Var> {
    let b = targets.len();
    let p = tape.value(pred);
    if p.shape() != (b, OUTPUT_DIM) {
        return Err(Error::dims(format!(
            "prediction shape {:?}, expected ({b}, {OUTPUT_DIM})",
            p.shape()
        )));
    }
    let d = spec.repr.dim();
    let norm = 1.0 / ((6 + 2 * d) * b) as f64;
    let mut terms = Vec::with_capacity(4);
    for arm in 0..2 {
        let o = arm * 9;
        let tt = Tensor::from_vec(
            b,
            3,
            targets
                .iter()
                .flat_map(|t| t.v[o..o + 3].to_vec())
                .collect(),
        );
        let tp = tape.slice_cols(pred, o, 3);
        terms.push((tape.sq_err(tp, tt), w_translation * norm));
        let rp = tape.slice_cols(pred, o + 3, d);
        let mats: Vec<Mat3> = targets
            .iter()
            .map(|t| t.rot6d(arm).gram_schmidt())
            .collect::<Result<_>>()?;
        let rot = match (spec.repr, spec.metric) {
            (RotationRepr::SixD, RotationMetric::Mse) => {
                let tv = mats
                    .iter()
                    .flat_map(|m| sixd_from_matrix(m).to_array())
                    .collect();
                tape.sq_err(rp, Tensor::from_vec(b, 6, tv))
            }
            (RotationRepr::Quaternion, RotationMetric::Mse) => {
                let raw = tape.value(rp).clone();
                let mut tv = Vec::with_capacity(4 * b);
                for (i, m) in mats.iter().enumerate() {
                    let q = Quat::from_matrix(m);
                    let row = raw.row(i);
                    let pq = Quat::new(row[0], row[1], row[2], row[3]);
                    tv.extend(crate::geom::align_quat_sign(&pq, q).to_array());
                }
                tape.sq_err(rp, Tensor::from_vec(b, 4, tv))
            }
            (repr, RotationMetric::Frobenius) => {
                let r = match repr {
                    RotationRepr::SixD => tape.gram_schmidt(rp)?,
                    RotationRepr::Quaternion => tape.quat_to_mat(rp)?,
                };
                let tv = mats.iter().flat_map(|m| m.to_array()).collect();
                tape.sq_err(r, Tensor::from_vec(b, 9, tv))
            }
        };
        terms.push((rot, w_rotation * norm));
    }
    Ok(tape.weighted_sum(&terms))
}

/// Converts a raw network output into an environment action. Quaternion
/// outputs are normalized and re-encoded as 6D; a vanishing quaternion
/// becomes a zero 6D block, which the environment treats as "hold".
pub fn output_to_action(raw: &[f64], repr: RotationRepr) -> Result<ActionVec> {
    let mut a = ActionVec::from_slice(raw)?;
    if repr == RotationRepr::Quaternion {
        for arm in 0..2 {
            let o = arm * 9 + 3;
            let six = match quat_matrix(&raw[o..o + 4]) {
                Ok(m) => sixd_from_matrix(&m).to_array(),
                Err(_) => [0.0; 6],
            };
            a.v[o..o + 6].copy_from_slice(&six);
        }
    }
    Ok(a)
}

/// Network output layout for a target action under `repr`.
pub fn action_to_output(a: &ActionVec, repr: RotationRepr) -> Result<[f64; OUTPUT_DIM]> {
    let mut out = a.v;
    if repr == RotationRepr::Quaternion {
        for arm in 0..2 {
            let o = arm * 9 + 3;
            let q = Quat::from_matrix(&a.rot6d(arm).gram_schmidt()?).to_array();
            out[o..o + 4].copy_from_slice(&q);
            out[o + 4..o + 6].copy_from_slice(&[0.0, 0.0]);
        }
    }
    Ok(out)
}

/// A behavior-cloning policy: configuration plus parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub config: PolicyConfig,
    pub obs: ObsConfig,
    pub input_dim: usize,
    /// Per-feature standardization applied before the network.
    pub input_mean: Vec<f64>,
    pub input_std: Vec<f64>,
    pub params: Vec<Tensor>,
}

/// Parameter shapes in declaration order.
pub fn param_shapes(config: &PolicyConfig, input_dim: usize) -> Vec<(usize, usize)> {
    let mut shapes = Vec::new();
    let mut fan_in = input_dim;
    match &config.head {
        Head::Mlp { hidden } => {
            for &h in hidden {
                shapes.push((fan_in, h));
                shapes.push((1, h));
                fan_in = h;
            }
        }
        Head::Rnn { hidden, .. } => {
            for &h in hidden {
                shapes.push((fan_in, 4 * h));
                shapes.push((h, 4 * h));
                shapes.push((1, 4 * h));
                fan_in = h;
            }
        }
    }
    shapes.push((fan_in, OUTPUT_DIM));
    shapes.push((1, OUTPUT_DIM));
    shapes
}

impl Policy {
    /// Fresh policy with uniform ±sqrt(6/(fan_in+fan_out)) weights and zero biases.
    pub fn new(config: PolicyConfig, obs: ObsConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let input_dim = config.input_dim(&obs)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = param_shapes(&config, input_dim)
            .into_iter()
            .map(|(r, c)| {
                if r == 1 {
                    Tensor::zeros(r, c)
                } else {
                    let lim = (6.0 / (r + c) as f64).sqrt();
                    Tensor::from_vec(
                        r,
                        c,
                        (0..r * c).map(|_| rng.gen_range(-lim..=lim)).collect(),
                    )
                }
            })
            .collect();
        Ok(Self {
            config,
            obs,
            input_dim,
            input_mean: vec![0.0; input_dim],
            input_std: vec![1.0; input_dim],
            params,
        })
    }

    pub fn n_params(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    pub fn history(&self) -> usize {
        self.config.head.history()
    }

    /// Standardizes one raw feature vector.
    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.input_mean)
            .zip(&self.input_std)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }

    /// Records the network on `tape`. `inputs` holds one `batch × input_dim`
    /// variable per time step, oldest first; the MLP uses only the last.
    pub fn build(&self, tape: &mut Tape, params: &[Var], inputs: &[Var]) -> Result<Var> {
        let last = *inputs
            .last()
            .ok_or_else(|| Error::dims("no input frames"))?;
        let x_dim = tape.value(last).cols;
        if x_dim != self.input_dim {
            return Err(Error::dims(format!(
                "input has {x_dim} features, policy expects {}",
                self.input_dim
            )));
        }
        let mut p = params.iter().copied();
        let mut next = || p.next().expect("parameter list matches shapes");
        let top = match &self.config.head {
            Head::Mlp { hidden } => {
                let mut h = last;
                for _ in hidden {
                    let (w, b) = (next(), next());
                    let z = tape.matmul(h, w);
                    let z = tape.add_row(z, b);
                    h = tape.relu(z);
                }
                h
            }
            Head::Rnn { hidden, .. } => {
                let batch = tape.value(last).rows;
                let mut seq: Vec<Var> = inputs.to_vec();
                for &n in hidden {
                    let (wx, wh, b) = (next(), next(), next());
                    let mut h = tape.leaf(Tensor::zeros(batch, n));
                    let mut c = tape.leaf(Tensor::zeros(batch, n));
                    let mut outs = Vec::with_capacity(seq.len());
                    for &x in &seq {
                        let zx = tape.matmul(x, wx);
                        let zh = tape.matmul(h, wh);
                        let z = tape.add(zx, zh);
                        let z = tape.add_row(z, b);
                        let i = tape.slice_cols(z, 0, n);
                        let f = tape.slice_cols(z, n, n);
                        let g = tape.slice_cols(z, 2 * n, n);
                        let o = tape.slice_cols(z, 3 * n, n);
                        let (i, f, g, o) = (
                            tape.sigmoid(i),
                            tape.sigmoid(f),
                            tape.tanh(g),
                            tape.sigmoid(o),
                        );
                        let fc = tape.mul(f, c);
                        let ig = tape.mul(i, g);
                        c = tape.add(fc, ig);
                        let tc = tape.tanh(c);
                        h = tape.mul(o, tc);
                        outs.push(h);
                    }
                    seq = outs;
                }
                *seq.last().unwrap()
            }
        };
        let (w, b) = (next(), next());
        let y = tape.matmul(top, w);
        Ok(tape.add_row(y, b))
    }

    /// Raw 18-value output for a window of raw feature vectors, oldest
    /// first. Only the last `history()` frames are used; shorter windows are
    /// zero-padded at the front after standardization, as in training.
    pub fn forward(&self, window: &[Vec<f64>]) -> Result<Vec<f64>> {
        if window.is_empty() {
            return Err(Error::dims("no input frames"));
        }
        let h = self.history();
        let frames = &window[window.len().saturating_sub(h)..];
        let mut tape = Tape::new();
        let params: Vec<Var> = self.params.iter().map(|t| tape.leaf(t.clone())).collect();
        let mut inputs: Vec<Var> = (frames.len()..h)
            .map(|_| tape.leaf(Tensor::zeros(1, self.input_dim)))
            .collect();
        for x in frames {
            if x.len() != self.input_dim {
                return Err(Error::dims(format!(
                    "input has {} features, policy expects {}",
                    x.len(),
                    self.input_dim
                )));
            }
            inputs.push(tape.leaf(Tensor::row_vector(self.normalize(x))));
        }
        let y = self.build(&mut tape, &params, &inputs)?;
        Ok(tape.value(y).data.clone())
    }

    pub fn act(&self, window: &[Vec<f64>]) -> Result<ActionVec> {
        output_to_action(&self.forward(window)?, self.config.rotation.repr)
    }
}

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"GPOL";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    config: PolicyConfig,
    obs: ObsConfig,
    input_dim: usize,
    shapes: Vec<(usize, usize)>,
}

impl Policy {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = CheckpointHeader {
            config: self.config.clone(),
            obs: self.obs,
            input_dim: self.input_dim,
            shapes: self.params.iter().map(Tensor::shape).collect(),
        };
        let json = serde_json::to_vec(&header).map_err(|e| Error::format(e.to_string()))?;
        let mut out = Vec::with_capacity(json.len() + 8 * self.n_params() + 24);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        out.extend_from_slice(&((2 * self.input_dim + self.n_params()) as u64).to_le_bytes());
        let stats = self.input_mean.iter().chain(&self.input_std);
        for x in stats.chain(self.params.iter().flat_map(|t| &t.data)) {
            out.extend_from_slice(&x.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let short = || Error::format("unexpected end of checkpoint");
        let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
            let end = pos
                .checked_add(n)
                .filter(|&e| e <= bytes.len())
                .ok_or_else(short)?;
            let s = &bytes[*pos..end];
            *pos = end;
            Ok(s)
        };
        let mut pos = 0;
        if take(&mut pos, 4)? != CHECKPOINT_MAGIC {
            return Err(Error::format("bad magic, not a policy checkpoint"));
        }
        let version = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(Error::format(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let len = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
        let header: CheckpointHeader = serde_json::from_slice(take(&mut pos, len)?)
            .map_err(|e| Error::format(format!("checkpoint header: {e}")))?;
        header
            .config
            .validate()
            .map_err(|e| Error::format(e.to_string()))?;
        let expected_dim = header
            .config
            .input_dim(&header.obs)
            .map_err(|e| Error::format(e.to_string()))?;
        if expected_dim != header.input_dim
            || header.shapes != param_shapes(&header.config, header.input_dim)
        {
            return Err(Error::format("checkpoint shapes do not match its config"));
        }
        let count = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize;
        let total: usize =
            2 * header.input_dim + header.shapes.iter().map(|(r, c)| r * c).sum::<usize>();
        if count != total {
            return Err(Error::format("parameter count does not match shapes"));
        }
        if bytes.len() - pos != 8 * count {
            return Err(Error::format("parameter blob has the wrong length"));
        }
        let mut read = |n: usize| -> Result<Vec<f64>> {
            Ok(take(&mut pos, 8 * n)?
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect())
        };
        let input_mean = read(header.input_dim)?;
        let input_std = read(header.input_dim)?;
        if !input_std.iter().all(|s| s.is_finite() && *s > 0.0)
            || !input_mean.iter().all(|m| m.is_finite())
        {
            return Err(Error::format("invalid input standardization"));
        }
        let mut params = Vec::with_capacity(header.shapes.len());
        for &(r, c) in &header.shapes {
            let t = Tensor::from_vec(r, c, read(r * c)?);
            if !t.all_finite() {
                return Err(Error::format("non-finite parameter"));
            }
            params.push(t);
        }
        Ok(Self {
            config: header.config,
            obs: header.obs,
            input_dim: header.input_dim,
            input_mean,
            input_std,
            params,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let mut f = std::fs::File::create(path)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
