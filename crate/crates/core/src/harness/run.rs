use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::mac::DeviceMacState;
use super::metrics::{
    detect_convergence, rolling_mean, success_rate_post_convergence, summarize, MetricsSeries, RunSummary,
};
use crate::agents::{make_agent, Agent, AgentKind};
use crate::env::{
    build_deployment, generate_contexts, reward, sample_alarm, sample_channels, sample_pilots,
    success_indicator, Deployment, PatternMatrix,
};
use crate::seed::{agent_stream, env_stream, run_seed, SimRng};
use crate::{Result, SimError};

/// Everything one alarm event produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub event_index: usize,
    pub active_set: Vec<usize>,
    /// Columns follow `active_set`.
    pub actions: PatternMatrix,
    pub xi: bool,
    pub rewards: Vec<f64>,
    /// `(device, loss)` for every agent that ran a training step.
    pub per_agent_loss: Vec<(usize, f64)>,
    /// Mean ε of the active agents after their update.
    pub epsilon: f64,
    pub mse_sys: Option<f64>,
    pub alarm_resamples: usize,
}

/// Deployment, MAC states and the environment stream of one run.
pub struct World {
    pub config: RunConfig,
    pub deployment: Deployment,
    pub mac_states: Vec<DeviceMacState>,
    pub events: usize,
    rng: SimRng,
}

impl World {
    /// Fresh deployment drawn from the run's environment stream.
    pub fn new(config: &RunConfig, run_id: usize) -> Result<Self> {
        config.validate()?;
        let mut rng = env_stream(run_seed(config.seed, run_id as u64));
        let deployment = build_deployment(config.n_devices, config.density, &mut rng)?;
        Ok(World {
            config: config.clone(),
            mac_states: vec![DeviceMacState::Normal; deployment.n_devices()],
            deployment,
            events: 0,
            rng,
        })
    }

    /// One agent per device, each on its own stream.
    pub fn make_agents(&self, kind: AgentKind, run_id: usize) -> Result<Vec<Box<dyn Agent>>> {
        let params = self.config.agent_params();
        let seed = run_seed(self.config.seed, run_id as u64);
        (0..self.deployment.n_devices())
            .map(|d| make_agent(kind, &params, agent_stream(seed, d)))
            .collect()
    }
}

fn set_state(states: &mut [DeviceMacState], device: usize, to: DeviceMacState) -> Result<()> {
    states[device]
        .transition(to)
        .map_err(|e| SimError::invalid(format!("device {device}: {e}")))
}

/// Runs one alarm slot through the MAC phases: detection, pilot uplink and
/// channel scan, context broadcast, pattern selection and transmission,
/// ACK and learning, return to normal operation. The alarm is dropped after
/// this single attempt.
pub fn run_slot(world: &mut World, agents: &mut [Box<dyn Agent>]) -> Result<SlotRecord> {
    let n = world.deployment.n_devices();
    if agents.len() != n {
        return Err(SimError::invalid(format!("{} agents for {n} devices", agents.len())));
    }
    let cfg = &world.config;
    let m = cfg.m_channels;

    // Phase 1: detection.
    let event = sample_alarm(&world.deployment, cfg.lambda, &mut world.rng)?;
    for &d in &event.active_set {
        set_state(&mut world.mac_states, d, DeviceMacState::Emergency)?;
    }

    // Phase 2: pilots go up; everyone else finds the channels busy.
    let chan = sample_channels(&world.deployment, m, cfg.gamma, &mut world.rng)?;
    let pilots = sample_pilots(event.active_set.len(), m, &mut world.rng);
    for d in 0..n {
        if world.mac_states[d] == DeviceMacState::Normal {
            set_state(&mut world.mac_states, d, DeviceMacState::Quiet)?;
        }
    }

    // Phase 3a: context broadcast.
    let contexts = generate_contexts(&event, &chan, &pilots, cfg.rho_linear(), &mut world.rng)?;

    // Phase 3b: only devices in ES transmit.
    let mut columns = Vec::with_capacity(event.active_set.len());
    for (&d, ctx) in event.active_set.iter().zip(&contexts) {
        if world.mac_states[d] != DeviceMacState::Emergency {
            return Err(SimError::invalid(format!("device {d} transmitting outside ES")));
        }
        columns.push(agents[d].act(ctx)?);
    }
    let actions = PatternMatrix::new(m, columns)?;

    // Phase 4: shared ACK and learning.
    let xi = success_indicator(&actions);
    let rewards = reward(xi, event.active_set.len());
    let mut per_agent_loss = Vec::new();
    let mut eps_sum = 0.0;
    for (i, (&d, ctx)) in event.active_set.iter().zip(&contexts).enumerate() {
        let agent = &mut agents[d];
        if let Some(loss) = agent.learn(ctx, actions.columns[i], rewards[i])? {
            per_agent_loss.push((d, loss));
        }
        eps_sum += agent.epsilon();
    }
    let mse_sys = (!per_agent_loss.is_empty())
        .then(|| per_agent_loss.iter().map(|(_, l)| l).sum::<f64>() / per_agent_loss.len() as f64);

    // Phase 5: back to normal.
    for d in 0..n {
        set_state(&mut world.mac_states, d, DeviceMacState::Normal)?;
    }

    let record = SlotRecord {
        event_index: world.events,
        epsilon: eps_sum / event.active_set.len() as f64,
        active_set: event.active_set,
        actions,
        xi,
        rewards,
        per_agent_loss,
        mse_sys,
        alarm_resamples: event.resamples,
    };
    world.events += 1;
    Ok(record)
}

/// One independent run: fresh deployment and agents, `n_events` slots.
pub fn run_series(config: &RunConfig, run_id: usize) -> Result<MetricsSeries> {
    let mut world = World::new(config, run_id)?;
    let mut agents = world.make_agents(config.agent, run_id)?;
    let n = config.n_events;
    let mut success = Vec::with_capacity(n);
    let mut n_active = Vec::with_capacity(n);
    let mut epsilon = Vec::with_capacity(n);
    let mut mse_sys = Vec::with_capacity(n);
    for _ in 0..n {
        let rec = run_slot(&mut world, &mut agents)?;
        success.push(rec.xi);
        n_active.push(rec.active_set.len());
        epsilon.push(rec.epsilon);
        mse_sys.push(rec.mse_sys);
    }
    Ok(finish_series(config, run_id, success, n_active, epsilon, mse_sys))
}

/// Derived columns of a series from its raw per-event traces.
pub(crate) fn finish_series(
    config: &RunConfig,
    run_id: usize,
    success: Vec<bool>,
    n_active: Vec<usize>,
    epsilon: Vec<f64>,
    mse_sys: Vec<Option<f64>>,
) -> MetricsSeries {
    let values: Vec<f64> = success.iter().map(|&s| f64::from(u8::from(s))).collect();
    let convergence_event = detect_convergence(&values, config.convergence_window, config.convergence_tol);
    MetricsSeries {
        run_id,
        rolling_success: rolling_mean(&values, config.convergence_window),
        post_convergence_rate: success_rate_post_convergence(&values, convergence_event, config.eval_window),
        convergence_event,
        mean_active: n_active.iter().sum::<usize>() as f64 / n_active.len().max(1) as f64,
        success,
        n_active,
        epsilon,
        mse_sys,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: RunConfig,
    /// Ordered by run index.
    pub runs: Vec<MetricsSeries>,
    pub summary: RunSummary,
}

pub(crate) fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| SimError::invalid(format!("worker pool: {e}")))
}

/// `n_runs` independent runs on up to `jobs` workers.
pub fn run_experiment(config: &RunConfig, jobs: usize) -> Result<ExperimentResult> {
    config.validate()?;
    let runs = pool(jobs)?.install(|| {
        (0..config.n_runs)
            .into_par_iter()
            .map(|r| run_series(config, r))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(ExperimentResult {
        config: config.clone(),
        summary: summarize(&runs),
        runs,
    })
}
