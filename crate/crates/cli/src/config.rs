//! Flat `key = value` run configuration.
//!
//! Values come from three layers: built-in defaults (with `GEOPEG_SEED`
//! replacing the default seed), an optional config file, and command-line
//! flags, later layers winning.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use geopeg::env::{ColorMode, ControlMode, ObsConfig, TaskVariation, ViewSet};
use geopeg::eval::EvalSpec;
use geopeg::geom::RotationLossSpec;
use geopeg::learn::{Encoder, Head, PolicyConfig, TrainConfig};
use geopeg::shapes::{ClearanceTable, ObjectSet, ShapeName};

use crate::error::{CliError, Result};

pub const SEED_ENV: &str = "GEOPEG_SEED";
pub const CLEARANCE_PREFIX: &str = "clearance.";

/// A configuration key: name, default value, help text.
pub struct Key {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

const fn key(name: &'static str, default: &'static str, help: &'static str) -> Key {
    Key {
        name,
        default,
        help,
    }
}

/// Every plain key. Per-shape `clearance.<shape>` keys come on top.
pub const KEYS: &[Key] = &[
    key(
        "variation",
        "XT",
        "Grasp variation: NONE, XT, ZT, YR, ZR, XTZR, ZTZR, YRZR, XZTYZR or any '+'-joined set",
    ),
    key(
        "object_set",
        "order-all",
        "Object set: order1, order2, order4, order-all, rotated45",
    ),
    key(
        "views",
        "none",
        "Camera views stored and observed: none, top-only, top+wrists",
    ),
    key("resolution", "64", "Square image resolution in pixels"),
    key("color", "original", "Render color mode: original, colored"),
    key(
        "encoder",
        "oracle",
        "Observation encoder: oracle, proprio, image[:downsample]",
    ),
    key("proprio", "true", "Feed proprioception to the policy"),
    key("head", "mlp", "Policy head: mlp, rnn"),
    key("hidden", "128,128", "Hidden layer sizes, comma separated"),
    key(
        "history",
        "10",
        "Observation history length of the rnn head",
    ),
    key(
        "rotation",
        "6d-mse",
        "Rotation loss: 6d-mse, 6d-frob, quat-mse, quat-frob",
    ),
    key("control", "absolute", "Action mode: absolute, delta"),
    key("demos", "100", "Number of demonstration episodes"),
    key("steps", "20000", "Training steps"),
    key("lr", "0.001", "Adam learning rate"),
    key("batch", "16", "Minibatch size"),
    key("w_translation", "1", "Translation loss weight"),
    key("w_rotation", "1", "Rotation loss weight"),
    key("log_every", "100", "Training-curve interval in steps"),
    key(
        "snapshot_every",
        "0",
        "Success-curve interval in steps, 0 disables",
    ),
    key(
        "seed",
        "0",
        "Global seed for demonstrations and training (env GEOPEG_SEED)",
    ),
    key("train_seed", "", "Training seed, empty uses seed"),
    key("eval_seed", "0", "Base seed of evaluation rollouts"),
    key("rollouts", "40", "Rollouts per evaluation run"),
    key("runs", "3", "Evaluation runs per cell"),
    key("horizon", "80", "Episode step limit"),
    key(
        "policy",
        "expert",
        "Policy to evaluate: expert, zero, or a checkpoint path",
    ),
    key(
        "grid_variations",
        "",
        "Variations to evaluate, comma separated, empty uses variation",
    ),
    key(
        "grid_objects",
        "",
        "Object sets to evaluate, comma separated, empty uses object_set",
    ),
    key("dataset", "demos.gpih", "Demonstration dataset path"),
    key("checkpoint", "policy.gpol", "Policy checkpoint path"),
    key("curve", "curve.csv", "Training-loss curve CSV path"),
    key(
        "success_curve",
        "",
        "Success-vs-step CSV path, written when snapshot_every > 0",
    ),
    key("out", "out", "Output directory for reports and renders"),
    key("clearance", "0.002", "Default peg/hole clearance in meters"),
];

/// Help text for the per-shape clearance keys.
pub const CLEARANCE_HELP: &str =
    "Clearance override for this shape in meters, empty uses clearance";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadKind {
    Mlp,
    Rnn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub variation: TaskVariation,
    pub object_set: ObjectSet,
    pub views: ViewSet,
    pub resolution: usize,
    pub color: ColorMode,
    pub encoder: Encoder,
    pub proprio: bool,
    pub head: HeadKind,
    pub hidden: Vec<usize>,
    pub history: usize,
    pub rotation: RotationLossSpec,
    pub control: ControlMode,
    pub demos: usize,
    pub steps: usize,
    pub lr: f64,
    pub batch: usize,
    pub w_translation: f64,
    pub w_rotation: f64,
    pub log_every: usize,
    pub snapshot_every: usize,
    pub seed: u64,
    pub train_seed: Option<u64>,
    pub eval_seed: u64,
    pub rollouts: usize,
    pub runs: usize,
    pub horizon: usize,
    pub policy: String,
    pub grid_variations: Vec<TaskVariation>,
    pub grid_objects: Vec<ObjectSet>,
    pub dataset: PathBuf,
    pub checkpoint: PathBuf,
    pub curve: PathBuf,
    pub success_curve: Option<PathBuf>,
    pub out: PathBuf,
    pub clearance: ClearanceTable,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| CliError::config(format!("{key}: cannot parse `{value}`: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(CliError::config(format!(
            "{key}: expected true or false, got `{value}`"
        ))),
    }
}

fn opt_path(value: &str) -> Option<PathBuf> {
    let v = value.trim();
    (!v.is_empty()).then(|| PathBuf::from(v))
}

/// Flag name for a config key: `w_rotation` becomes `w-rotation`,
/// `clearance.circle` becomes `clearance-circle`.
pub fn flag_name(key: &str) -> String {
    key.replace(['_', '.'], "-")
}

/// All per-shape clearance keys.
pub fn clearance_keys() -> Vec<String> {
    ShapeName::ALL
        .iter()
        .map(|s| format!("{CLEARANCE_PREFIX}{s}"))
        .collect()
}

impl Default for RunConfig {
    /// Built-in defaults, ignoring the environment.
    fn default() -> Self {
        let mut c = RunConfig {
            variation: TaskVariation::NONE,
            object_set: ObjectSet::OrderAll,
            views: ViewSet::None,
            resolution: 0,
            color: ColorMode::Original,
            encoder: Encoder::OracleState,
            proprio: true,
            head: HeadKind::Mlp,
            hidden: Vec::new(),
            history: 0,
            rotation: RotationLossSpec::SIXD_MSE,
            control: ControlMode::Absolute,
            demos: 0,
            steps: 0,
            lr: 0.0,
            batch: 0,
            w_translation: 0.0,
            w_rotation: 0.0,
            log_every: 0,
            snapshot_every: 0,
            seed: 0,
            train_seed: None,
            eval_seed: 0,
            rollouts: 0,
            runs: 0,
            horizon: 0,
            policy: String::new(),
            grid_variations: Vec::new(),
            grid_objects: Vec::new(),
            dataset: PathBuf::new(),
            checkpoint: PathBuf::new(),
            curve: PathBuf::new(),
            success_curve: None,
            out: PathBuf::new(),
            clearance: ClearanceTable::default(),
        };
        for k in KEYS {
            c.set(k.name, k.default).expect("built-in defaults parse");
        }
        c
    }
}

impl RunConfig {
    /// Defaults with the seed taken from `GEOPEG_SEED` when it is set.
    pub fn from_env() -> Result<Self> {
        let mut c = Self::default();
        if let Ok(v) = std::env::var(SEED_ENV) {
            c.seed = parse(SEED_ENV, &v)?;
        }
        Ok(c)
    }

    /// Sets one key from its text form. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "variation" => self.variation = parse(key, v)?,
            "object_set" => self.object_set = parse(key, v)?,
            "views" => self.views = parse(key, v)?,
            "resolution" => self.resolution = parse(key, v)?,
            "color" => self.color = parse(key, v)?,
            "encoder" => self.encoder = parse(key, v)?,
            "proprio" => self.proprio = parse_bool(key, v)?,
            "head" => {
                self.head = match v.to_ascii_lowercase().as_str() {
                    "mlp" => HeadKind::Mlp,
                    "rnn" | "lstm" => HeadKind::Rnn,
                    _ => return Err(CliError::config(format!("head: unknown head `{v}`"))),
                }
            }
            "hidden" => self.hidden = parse_list(key, v)?,
            "history" => self.history = parse(key, v)?,
            "rotation" => self.rotation = parse(key, v)?,
            "control" => self.control = parse(key, v)?,
            "demos" => self.demos = parse(key, v)?,
            "steps" => self.steps = parse(key, v)?,
            "lr" => self.lr = parse(key, v)?,
            "batch" => self.batch = parse(key, v)?,
            "w_translation" => self.w_translation = parse(key, v)?,
            "w_rotation" => self.w_rotation = parse(key, v)?,
            "log_every" => self.log_every = parse(key, v)?,
            "snapshot_every" => self.snapshot_every = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "train_seed" => {
                self.train_seed = if v.is_empty() {
                    None
                } else {
                    Some(parse(key, v)?)
                }
            }
            "eval_seed" => self.eval_seed = parse(key, v)?,
            "rollouts" => self.rollouts = parse(key, v)?,
            "runs" => self.runs = parse(key, v)?,
            "horizon" => self.horizon = parse(key, v)?,
            "policy" => self.policy = v.to_string(),
            "grid_variations" => {
                // '+' joins components of one variation, so only ',' splits.
                self.grid_variations = parse_list(key, v)?;
            }
            "grid_objects" => self.grid_objects = parse_list(key, v)?,
            "dataset" => self.dataset = PathBuf::from(v),
            "checkpoint" => self.checkpoint = PathBuf::from(v),
            "curve" => self.curve = PathBuf::from(v),
            "success_curve" => self.success_curve = opt_path(v),
            "out" => self.out = PathBuf::from(v),
            "clearance" => self.clearance.default = parse(key, v)?,
            _ => {
                let shape = key
                    .strip_prefix(CLEARANCE_PREFIX)
                    .ok_or_else(|| CliError::config(format!("unknown key `{key}`")))?;
                let shape: ShapeName = shape
                    .parse()
                    .map_err(|_| CliError::config(format!("unknown key `{key}`")))?;
                if v.is_empty() {
                    self.clearance.overrides.remove(&shape);
                } else {
                    self.clearance.overrides.insert(shape, parse(key, v)?);
                }
            }
        }
        Ok(())
    }

    /// Applies a config file: one `key = value` per line, `#` starts a
    /// comment, blank lines are ignored.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::config(format!("{origin}:{}: expected `key = value`", i + 1))
            })?;
            self.set(k.trim(), v)
                .map_err(|e| CliError::config(format!("{origin}:{}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// Checks ranges that parsing alone does not.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("resolution", self.resolution),
            ("demos", self.demos),
            ("batch", self.batch),
            ("rollouts", self.rollouts),
            ("runs", self.runs),
            ("horizon", self.horizon),
            ("log_every", self.log_every),
        ];
        for (k, v) in positive {
            if v == 0 {
                return Err(CliError::config(format!("{k} must be at least 1")));
            }
        }
        if self.hidden.is_empty() {
            return Err(CliError::config("hidden needs at least one layer"));
        }
        if self.head == HeadKind::Rnn && self.history == 0 {
            return Err(CliError::config("history must be at least 1"));
        }
        for (_, c) in std::iter::once((None, self.clearance.default))
            .chain(self.clearance.overrides.iter().map(|(s, c)| (Some(s), *c)))
        {
            if !(geopeg::shapes::MIN_CLEARANCE..=geopeg::shapes::MAX_CLEARANCE).contains(&c) {
                return Err(geopeg::Error::InvalidClearance(c).into());
            }
        }
        self.obs_config().validate()?;
        self.policy_config().validate()?;
        self.train_config().validate()?;
        Ok(())
    }

    /// Observation layout recorded in generated datasets. Proprioception and
    /// oracle features are always stored; the policy picks what it reads.
    pub fn obs_config(&self) -> ObsConfig {
        ObsConfig {
            proprio: true,
            oracle: true,
            views: self.views,
            resolution: self.resolution,
            color: self.color,
        }
    }

    pub fn policy_config(&self) -> PolicyConfig {
        PolicyConfig {
            encoder: self.encoder,
            head: match self.head {
                HeadKind::Mlp => Head::Mlp {
                    hidden: self.hidden.clone(),
                },
                HeadKind::Rnn => Head::Rnn {
                    hidden: self.hidden.clone(),
                    history: self.history,
                },
            },
            rotation: self.rotation,
            use_proprio: self.proprio,
            control: self.control,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            batch: self.batch,
            steps: self.steps,
            seed: self.train_seed.unwrap_or(self.seed),
            w_translation: self.w_translation,
            w_rotation: self.w_rotation,
            log_every: self.log_every,
            snapshot_every: self.snapshot_every,
        }
    }

    pub fn eval_spec(&self, variation: TaskVariation, object_set: ObjectSet) -> EvalSpec {
        EvalSpec {
            n: self.rollouts,
            runs: self.runs,
            base_seed: self.eval_seed,
            horizon: self.horizon,
            clearances: self.clearance.clone(),
            ..EvalSpec::new(variation, object_set)
        }
    }

    /// Variations and object sets of the evaluation grid.
    pub fn grid(&self) -> (Vec<TaskVariation>, Vec<ObjectSet>) {
        let v = if self.grid_variations.is_empty() {
            vec![self.variation]
        } else {
            self.grid_variations.clone()
        };
        let o = if self.grid_objects.is_empty() {
            vec![self.object_set]
        } else {
            self.grid_objects.clone()
        };
        (v, o)
    }

    /// Text form of a key's current value, as accepted by [`RunConfig::set`].
    pub fn get(&self, key: &str) -> Option<String> {
        let join = |xs: Vec<String>| xs.join(",");
        Some(match key {
            "variation" => self.variation.to_string(),
            "object_set" => self.object_set.to_string(),
            "views" => self.views.to_string(),
            "resolution" => self.resolution.to_string(),
            "color" => self.color.to_string(),
            "encoder" => self.encoder.to_string(),
            "proprio" => self.proprio.to_string(),
            "head" => match self.head {
                HeadKind::Mlp => "mlp".into(),
                HeadKind::Rnn => "rnn".into(),
            },
            "hidden" => join(self.hidden.iter().map(|h| h.to_string()).collect()),
            "history" => self.history.to_string(),
            "rotation" => self.rotation.to_string(),
            "control" => self.control.to_string(),
            "demos" => self.demos.to_string(),
            "steps" => self.steps.to_string(),
            "lr" => self.lr.to_string(),
            "batch" => self.batch.to_string(),
            "w_translation" => self.w_translation.to_string(),
            "w_rotation" => self.w_rotation.to_string(),
            "log_every" => self.log_every.to_string(),
            "snapshot_every" => self.snapshot_every.to_string(),
            "seed" => self.seed.to_string(),
            "train_seed" => self.train_seed.map(|s| s.to_string()).unwrap_or_default(),
            "eval_seed" => self.eval_seed.to_string(),
            "rollouts" => self.rollouts.to_string(),
            "runs" => self.runs.to_string(),
            "horizon" => self.horizon.to_string(),
            "policy" => self.policy.clone(),
            "grid_variations" => join(self.grid_variations.iter().map(|v| v.to_string()).collect()),
            "grid_objects" => join(self.grid_objects.iter().map(|o| o.to_string()).collect()),
            "dataset" => self.dataset.display().to_string(),
            "checkpoint" => self.checkpoint.display().to_string(),
            "curve" => self.curve.display().to_string(),
            "success_curve" => self
                .success_curve
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            "out" => self.out.display().to_string(),
            "clearance" => self.clearance.default.to_string(),
            _ => {
                let shape: ShapeName = key.strip_prefix(CLEARANCE_PREFIX)?.parse().ok()?;
                self.clearance
                    .overrides
                    .get(&shape)
                    .map(|c| c.to_string())
                    .unwrap_or_default()
            }
        })
    }

    /// The full configuration in file form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let keys = KEYS
            .iter()
            .map(|k| k.name.to_string())
            .chain(clearance_keys());
        for k in keys {
            out.push_str(&format!("{k} = {}\n", self.get(&k).unwrap_or_default()));
        }
        out
    }
}
