//! Per-device random-access policies behind one interface: observe the
//! context, pick a transmission pattern, receive the shared ACK, learn.

mod features;
mod mab;
mod mqlfa;
mod nnbb;
mod random;
mod replay;

pub use features::{mqlfa_features, normalize_context, normalized_power};
pub use mab::{mab_update, MabAgent, MabState};
pub use mqlfa::{mqlfa_q, mqlfa_update, MqlfaAgent, MqlfaState};
pub use nnbb::NnbbAgent;
pub use random::{rs_act, RandomAgent};
pub use replay::{Experience, ReplayBuffer};

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::Context;
use crate::seed::SimRng;
use crate::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Nnbb,
    Mab,
    Mqlfa,
    Rs,
}

impl AgentKind {
    pub const ALL: [AgentKind; 4] = [AgentKind::Nnbb, AgentKind::Mab, AgentKind::Mqlfa, AgentKind::Rs];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Nnbb => "nnbb",
            AgentKind::Mab => "mab",
            AgentKind::Mqlfa => "mqlfa",
            AgentKind::Rs => "rs",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgentKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nnbb" => Ok(AgentKind::Nnbb),
            "mab" => Ok(AgentKind::Mab),
            "mqlfa" => Ok(AgentKind::Mqlfa),
            "rs" => Ok(AgentKind::Rs),
            other => Err(SimError::invalid(format!(
                "unknown agent kind '{other}' (expected nnbb, mab, mqlfa or rs)"
            ))),
        }
    }
}

/// A learning (or not) random-access policy living on one device.
pub trait Agent: Send {
    fn kind(&self) -> AgentKind;

    /// Chooses a pattern index in `0..2^M`.
    fn act(&mut self, context: &Context) -> Result<usize>;

    /// Consumes the reward of the last action. Returns the training loss when
    /// the agent ran an optimization step.
    fn learn(&mut self, context: &Context, action: usize, reward: f64) -> Result<Option<f64>>;

    /// Current exploration probability.
    fn epsilon(&self) -> f64;
}

/// Hyperparameters shared by the learning agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentParams {
    pub n_channels: usize,
    pub hidden_layers: usize,
    pub hidden_size: usize,
    pub batch_multiplier: usize,
    pub buffer_multiplier: usize,
    pub clip_threshold: f64,
    pub initial_lr: f64,
    pub lr_decay: f64,
    pub rmsprop_decay: f64,
    pub rmsprop_stabilizer: f64,
    pub initial_tau: f64,
    pub tau_decay: f64,
    pub epsilon: EpsilonSchedule,
}

impl AgentParams {
    pub fn new(n_channels: usize) -> Self {
        AgentParams {
            n_channels,
            hidden_layers: 2,
            hidden_size: 1,
            batch_multiplier: 30,
            buffer_multiplier: 100,
            clip_threshold: 5.0,
            initial_lr: 1.0,
            lr_decay: 0.015,
            rmsprop_decay: 0.9,
            rmsprop_stabilizer: 1e-8,
            initial_tau: 1.0,
            tau_decay: 0.015,
            epsilon: EpsilonSchedule::default(),
        }
    }

    pub fn n_patterns(&self) -> usize {
        1 << self.n_channels
    }

    pub fn batch_size(&self) -> usize {
        self.batch_multiplier * self.n_patterns()
    }

    pub fn buffer_capacity(&self) -> usize {
        self.buffer_multiplier * self.n_patterns()
    }

    /// `[M, h, ..., h, 2^M]` with `H` hidden layers.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.n_channels];
        sizes.extend(std::iter::repeat_n(self.hidden_size, self.hidden_layers));
        sizes.push(self.n_patterns());
        sizes
    }
}

/// Builds the agent of the given kind for one device.
pub fn make_agent(kind: AgentKind, params: &AgentParams, rng: SimRng) -> Result<Box<dyn Agent>> {
    Ok(match kind {
        AgentKind::Nnbb => Box::new(NnbbAgent::new(params, rng)?),
        AgentKind::Mab => Box::new(MabAgent::new(params, rng)),
        AgentKind::Mqlfa => Box::new(MqlfaAgent::new(params, rng)),
        AgentKind::Rs => Box::new(RandomAgent::new(params.n_channels, rng)),
    })
}

/// Linear ε decay from `start` to `floor`, one step per activation.
///
/// The value is recomputed from the update count, so after `k` updates it is
/// exactly `max(floor, start - step * k)` with no accumulated rounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub value: f64,
    pub start: f64,
    pub step: f64,
    pub floor: f64,
    pub updates: u64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule::new(1.0, 0.005, 0.1)
    }
}

impl EpsilonSchedule {
    pub fn new(start: f64, step: f64, floor: f64) -> Self {
        EpsilonSchedule {
            value: start,
            start,
            step,
            floor,
            updates: 0,
        }
    }

    pub fn advance(&mut self) {
        self.updates += 1;
        self.value = self.floor.max(self.start - self.step * self.updates as f64);
    }
}

/// Learning rate after `t` decay steps: `initial / (1 + decay t)`.
pub fn decayed_rate(initial: f64, decay: f64, t: u64) -> f64 {
    initial / (1.0 + decay * t as f64)
}

/// First index of the maximum; NaN entries never win.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if !(v > b) => {}
            _ if v.is_nan() => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i).or(if values.is_empty() { None } else { Some(0) })
}

/// With probability `1 - epsilon` the greedy (lowest-index on ties) action,
/// otherwise a uniform draw over every action including the greedy one.
pub fn eps_greedy_select<R: Rng + ?Sized>(values: &[f64], epsilon: f64, rng: &mut R) -> Result<usize> {
    if values.is_empty() {
        return Err(SimError::invalid("no action values to choose from"));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(SimError::invalid(format!("epsilon {epsilon} outside [0, 1]")));
    }
    let theta: f64 = rng.random();
    if theta >= epsilon {
        Ok(argmax(values).unwrap())
    } else {
        Ok(rng.random_range(0..values.len()))
    }
}
