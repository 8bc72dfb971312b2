use serde::{Deserialize, Serialize};

use super::{decayed_rate, eps_greedy_select, Agent, AgentKind, AgentParams, EpsilonSchedule};
use crate::env::Context;
use crate::seed::SimRng;
use crate::{Result, SimError};

/// Context-free action values with an exponential-recency update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MabState {
    pub q_values: Vec<f64>,
    pub tau: f64,
}

impl MabState {
    pub fn new(n_patterns: usize, tau: f64) -> Self {
        MabState {
            q_values: vec![0.0; n_patterns],
            tau,
        }
    }
}

/// `Q(a_i) <- (1 - tau) Q(a_i) + r tau`; other entries untouched.
pub fn mab_update(state: &mut MabState, action: usize, reward: f64) -> Result<()> {
    let n = state.q_values.len();
    let q = state
        .q_values
        .get_mut(action)
        .ok_or_else(|| SimError::invalid(format!("action {action} out of range for {n} patterns")))?;
    *q = (1.0 - state.tau) * *q + reward * state.tau;
    Ok(())
}

pub struct MabAgent {
    state: MabState,
    epsilon: EpsilonSchedule,
    initial_tau: f64,
    tau_decay: f64,
    updates: u64,
    rng: SimRng,
}

impl MabAgent {
    pub fn new(params: &AgentParams, rng: SimRng) -> Self {
        MabAgent {
            state: MabState::new(params.n_patterns(), params.initial_tau),
            epsilon: params.epsilon,
            initial_tau: params.initial_tau,
            tau_decay: params.tau_decay,
            updates: 0,
            rng,
        }
    }

    pub fn state(&self) -> &MabState {
        &self.state
    }

    /// ε-greedy over the stored action values; no context involved.
    pub fn select(&mut self) -> usize {
        eps_greedy_select(&self.state.q_values, self.epsilon.value, &mut self.rng)
            .expect("MAB value table is never empty")
    }

    pub fn update(&mut self, action: usize, reward: f64) -> Result<()> {
        self.state.tau = decayed_rate(self.initial_tau, self.tau_decay, self.updates);
        mab_update(&mut self.state, action, reward)?;
        self.updates += 1;
        self.epsilon.advance();
        Ok(())
    }
}

impl Agent for MabAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::Mab
    }

    fn act(&mut self, _context: &Context) -> Result<usize> {
        Ok(self.select())
    }

    fn learn(&mut self, _context: &Context, action: usize, reward: f64) -> Result<Option<f64>> {
        self.update(action, reward)?;
        Ok(None)
    }

    fn epsilon(&self) -> f64 {
        self.epsilon.value
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;

    #[test]
    fn full_rate_overwrites() {
        let mut s = MabState::new(4, 1.0);
        mab_update(&mut s, 2, 1.0).unwrap();
        assert_eq!(s.q_values, vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn half_rate_blend() {
        let mut s = MabState {
            q_values: vec![0.5, 0.5],
            tau: 0.5,
        };
        mab_update(&mut s, 0, 0.0).unwrap();
        assert_eq!(s.q_values, vec![0.25, 0.5]);
    }

    #[test]
    fn zero_rate_freezes() {
        for r in [0.0, 1.0] {
            let mut s = MabState {
                q_values: vec![0.3, 0.7],
                tau: 0.0,
            };
            mab_update(&mut s, 1, r).unwrap();
            assert_eq!(s.q_values, vec![0.3, 0.7]);
        }
    }

    #[test]
    fn out_of_range_action() {
        let mut s = MabState::new(4, 1.0);
        assert!(mab_update(&mut s, 4, 1.0).is_err());
    }

    #[test]
    fn agent_decays_tau_and_epsilon() {
        let mut agent = MabAgent::new(&AgentParams::new(2), rng_from(0));
        agent.update(1, 1.0).unwrap();
        assert_eq!(agent.state().q_values[1], 1.0);
        assert_eq!(agent.epsilon(), 0.995);
        agent.update(1, 0.0).unwrap();
        let tau = 1.0 / 1.015;
        assert!((agent.state().q_values[1] - (1.0 - tau)).abs() < 1e-15);
    }
}
