use std::collections::VecDeque;

use crate::env::{ControlMode, EnvState, ObsConfig, Observation};
use crate::error::Result;
use crate::expert::{plan, Frame};
use crate::learn::Policy;
use crate::ActionVec;

/// Anything that can drive the environment in closed loop.
pub trait Agent {
    /// Label used in reports.
    fn id(&self) -> String;
    fn obs_config(&self) -> ObsConfig;
    fn control(&self) -> ControlMode;
    /// Called once after every reset.
    fn begin(&mut self, state: &EnvState);
    fn act(&mut self, obs: &Observation, state: &EnvState) -> Result<ActionVec>;
}

/// Replays the scripted planner, holding the last pose once it runs out.
#[derive(Debug, Default)]
pub struct ExpertAgent {
    queue: VecDeque<ActionVec>,
    last: Option<ActionVec>,
}

impl Agent for ExpertAgent {
    fn id(&self) -> String {
        "expert".into()
    }

    fn obs_config(&self) -> ObsConfig {
        ObsConfig::default()
    }

    fn control(&self) -> ControlMode {
        ControlMode::Absolute
    }

    fn begin(&mut self, state: &EnvState) {
        self.queue = plan(state).into();
        self.last = None;
    }

    fn act(&mut self, _obs: &Observation, state: &EnvState) -> Result<ActionVec> {
        let a = match self.queue.pop_front() {
            Some(a) => a,
            None => self
                .last
                .unwrap_or_else(|| ActionVec::encode(&state.left_gripper, &state.right_gripper)),
        };
        self.last = Some(a);
        Ok(a)
    }
}

/// Constant all-zero action in absolute mode.
#[derive(Debug, Default)]
pub struct ZeroAgent;

impl Agent for ZeroAgent {
    fn id(&self) -> String {
        "zero".into()
    }

    fn obs_config(&self) -> ObsConfig {
        ObsConfig::default()
    }

    fn control(&self) -> ControlMode {
        ControlMode::Absolute
    }

    fn begin(&mut self, _state: &EnvState) {}

    fn act(&mut self, _obs: &Observation, _state: &EnvState) -> Result<ActionVec> {
        Ok(ActionVec::zeros())
    }
}

/// Learned policy with a zero-padded observation history.
#[derive(Debug)]
pub struct PolicyAgent {
    pub policy: Policy,
    pub name: String,
    history: VecDeque<Vec<f64>>,
}

impl PolicyAgent {
    pub fn new(policy: Policy, name: impl Into<String>) -> Self {
        Self {
            policy,
            name: name.into(),
            history: VecDeque::new(),
        }
    }
}

impl Agent for PolicyAgent {
    fn id(&self) -> String {
        self.name.clone()
    }

    fn obs_config(&self) -> ObsConfig {
        self.policy.obs
    }

    fn control(&self) -> ControlMode {
        self.policy.config.control
    }

    fn begin(&mut self, _state: &EnvState) {
        self.history.clear();
    }

    fn act(&mut self, obs: &Observation, _state: &EnvState) -> Result<ActionVec> {
        // Round through the stored frame format so inputs match training.
        let frame = Frame::from_observation(obs, &ActionVec::zeros());
        let x = self.policy.config.features(&self.policy.obs, &frame)?;
        let h = self.policy.history();
        self.history.push_back(x);
        while self.history.len() > h {
            self.history.pop_front();
        }
        self.policy.act(self.history.make_contiguous())
    }
}
