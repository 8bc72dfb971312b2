use serde::{Deserialize, Serialize};

use crate::agents::{AgentKind, AgentParams, EpsilonSchedule};
use crate::env::db_to_linear;
use crate::{Result, SimError};

pub const MEASUREMENT_FIRST_ATTEMPT: &str = "first-attempt";

/// Largest channel count the learning agents accept (2^M outputs, batches of
/// 30 * 2^M).
const MAX_LEARNING_CHANNELS: usize = 10;

/// Everything one experiment cell needs. Defaults follow the reference
/// simulation parameters; `rho_db` and the optimizer constants are ours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n_devices: usize,
    pub m_channels: usize,
    /// Mean-scaling multiplier of the activation law, meters.
    pub lambda: f64,
    pub gamma: f64,
    pub rho_db: f64,
    /// Devices per square meter.
    pub density: f64,
    pub agent: AgentKind,
    pub hidden_layers: usize,
    pub hidden_size: usize,
    pub n_events: usize,
    pub n_runs: usize,
    pub seed: u64,
    pub eval_window: usize,
    pub convergence_window: usize,
    pub convergence_tol: f64,
    pub batch_multiplier: usize,
    pub buffer_multiplier: usize,
    pub clip_threshold: f64,
    pub initial_lr: f64,
    pub lr_decay: f64,
    pub rmsprop_decay: f64,
    pub rmsprop_stabilizer: f64,
    pub initial_tau: f64,
    pub tau_decay: f64,
    pub epsilon_start: f64,
    pub epsilon_step: f64,
    pub epsilon_floor: f64,
    pub measurement_mode: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_devices: 20,
            m_channels: 4,
            lambda: 3.0,
            gamma: 3.8,
            rho_db: 10.0,
            density: 0.2,
            agent: AgentKind::Nnbb,
            hidden_layers: 2,
            hidden_size: 1,
            n_events: 10_000,
            n_runs: 100,
            seed: 1,
            eval_window: 2000,
            convergence_window: 1000,
            convergence_tol: 0.01,
            batch_multiplier: 30,
            buffer_multiplier: 100,
            clip_threshold: 5.0,
            initial_lr: 1.0,
            lr_decay: 0.015,
            rmsprop_decay: 0.9,
            rmsprop_stabilizer: 1e-8,
            initial_tau: 1.0,
            tau_decay: 0.015,
            epsilon_start: 1.0,
            epsilon_step: 0.005,
            epsilon_floor: 0.1,
            measurement_mode: MEASUREMENT_FIRST_ATTEMPT.to_string(),
        }
    }
}

impl RunConfig {
    pub fn rho_linear(&self) -> f64 {
        db_to_linear(self.rho_db)
    }

    pub fn agent_params(&self) -> AgentParams {
        AgentParams {
            n_channels: self.m_channels,
            hidden_layers: self.hidden_layers,
            hidden_size: self.hidden_size,
            batch_multiplier: self.batch_multiplier,
            buffer_multiplier: self.buffer_multiplier,
            clip_threshold: self.clip_threshold,
            initial_lr: self.initial_lr,
            lr_decay: self.lr_decay,
            rmsprop_decay: self.rmsprop_decay,
            rmsprop_stabilizer: self.rmsprop_stabilizer,
            initial_tau: self.initial_tau,
            tau_decay: self.tau_decay,
            epsilon: EpsilonSchedule::new(self.epsilon_start, self.epsilon_step, self.epsilon_floor),
        }
    }

    /// Every violated constraint, one message per field.
    pub fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                p.push(msg);
            }
        };
        check(self.n_devices >= 1, format!("n_devices: must be >= 1 (got {})", self.n_devices));
        check(
            (1..=MAX_LEARNING_CHANNELS).contains(&self.m_channels),
            format!("m_channels: must be in 1..={MAX_LEARNING_CHANNELS} (got {})", self.m_channels),
        );
        check(positive(self.lambda), format!("lambda: must be > 0 (got {})", self.lambda));
        check(positive(self.gamma), format!("gamma: must be > 0 (got {})", self.gamma));
        check(self.rho_db.is_finite(), format!("rho_db: must be finite (got {})", self.rho_db));
        check(positive(self.density), format!("density: must be > 0 (got {})", self.density));
        check(self.hidden_size >= 1, format!("hidden_size: must be >= 1 (got {})", self.hidden_size));
        check(self.n_events >= 1, format!("n_events: must be >= 1 (got {})", self.n_events));
        check(self.n_runs >= 1, format!("n_runs: must be >= 1 (got {})", self.n_runs));
        check(
            self.eval_window >= 1 && self.eval_window <= self.n_events,
            format!("eval_window: must be in 1..=n_events (got {})", self.eval_window),
        );
        check(
            self.convergence_window >= 100,
            format!("convergence_window: must be >= 100 (got {})", self.convergence_window),
        );
        check(
            positive(self.convergence_tol),
            format!("convergence_tol: must be > 0 (got {})", self.convergence_tol),
        );
        check(
            self.batch_multiplier >= 1,
            format!("batch_multiplier: must be >= 1 (got {})", self.batch_multiplier),
        );
        check(
            self.buffer_multiplier >= self.batch_multiplier,
            format!(
                "buffer_multiplier: must be >= batch_multiplier (got {})",
                self.buffer_multiplier
            ),
        );
        check(
            positive(self.clip_threshold),
            format!("clip_threshold: must be > 0 (got {})", self.clip_threshold),
        );
        check(positive(self.initial_lr), format!("initial_lr: must be > 0 (got {})", self.initial_lr));
        check(non_negative(self.lr_decay), format!("lr_decay: must be >= 0 (got {})", self.lr_decay));
        check(
            (0.0..1.0).contains(&self.rmsprop_decay),
            format!("rmsprop_decay: must be in [0, 1) (got {})", self.rmsprop_decay),
        );
        check(
            positive(self.rmsprop_stabilizer),
            format!("rmsprop_stabilizer: must be > 0 (got {})", self.rmsprop_stabilizer),
        );
        check(
            (0.0..=1.0).contains(&self.initial_tau),
            format!("initial_tau: must be in [0, 1] (got {})", self.initial_tau),
        );
        check(non_negative(self.tau_decay), format!("tau_decay: must be >= 0 (got {})", self.tau_decay));
        check(
            (0.0..=1.0).contains(&self.epsilon_start),
            format!("epsilon_start: must be in [0, 1] (got {})", self.epsilon_start),
        );
        check(
            non_negative(self.epsilon_step),
            format!("epsilon_step: must be >= 0 (got {})", self.epsilon_step),
        );
        check(
            (0.0..=self.epsilon_start).contains(&self.epsilon_floor),
            format!("epsilon_floor: must be in [0, epsilon_start] (got {})", self.epsilon_floor),
        );
        check(
            self.measurement_mode == MEASUREMENT_FIRST_ATTEMPT,
            format!(
                "measurement_mode: only '{MEASUREMENT_FIRST_ATTEMPT}' is supported (got '{}')",
                self.measurement_mode
            ),
        );
        p
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(SimError::Config(problems))
        }
    }

    /// Applies `key=value` overrides. Values use TOML literal syntax; bare
    /// words are taken as strings.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<RunConfig> {
        let mut table = toml::Table::try_from(self)
            .map_err(|e| SimError::invalid(format!("cannot serialize config: {e}")))?;
        let mut problems = Vec::new();
        for item in overrides {
            let item = item.as_ref();
            let Some((key, raw)) = item.split_once('=') else {
                problems.push(format!("override '{item}': expected key=value"));
                continue;
            };
            let key = key.trim();
            if !table.contains_key(key) {
                problems.push(format!("{key}: unknown setting"));
                continue;
            }
            let mut value = parse_literal(raw.trim());
            if let (Some(toml::Value::Float(_)), toml::Value::Integer(i)) = (table.get(key), &value) {
                value = toml::Value::Float(*i as f64);
            }
            table.insert(key.to_string(), value);
        }
        if !problems.is_empty() {
            return Err(SimError::Config(problems));
        }
        table
            .try_into()
            .map_err(|e: toml::de::Error| SimError::Config(vec![e.message().to_string()]))
    }
}

/// Parses a TOML literal, falling back to a plain string.
pub(crate) fn parse_literal(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn positive(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

fn non_negative(x: f64) -> bool {
    x >= 0.0 && x.is_finite()
}
