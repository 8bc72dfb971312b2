use serde::{Deserialize, Serialize};

use super::features::{mqlfa_features, normalized_power};
use super::{decayed_rate, eps_greedy_select, Agent, AgentKind, AgentParams, EpsilonSchedule};
use crate::env::Context;
use crate::seed::SimRng;
use crate::{Result, SimError};

/// Linear action-value weights over `2M` features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MqlfaState {
    pub theta: Vec<f64>,
    pub tau: f64,
}

impl MqlfaState {
    pub fn new(n_channels: usize, tau: f64) -> Self {
        MqlfaState {
            theta: vec![0.0; 2 * n_channels],
            tau,
        }
    }

    pub fn n_channels(&self) -> usize {
        self.theta.len() / 2
    }
}

/// `theta . phi(s, a)`.
pub fn mqlfa_q(state: &MqlfaState, context: &Context, pattern: usize) -> Result<f64> {
    let phi = mqlfa_features(context, pattern, state.n_channels())?;
    Ok(dot(&state.theta, &phi))
}

/// `theta <- theta + (r - Q) tau phi(s, a)` for the chosen pattern.
pub fn mqlfa_update(state: &mut MqlfaState, context: &Context, pattern: usize, reward: f64) -> Result<()> {
    if !(state.tau >= 0.0) {
        return Err(SimError::invalid(format!("negative rate {}", state.tau)));
    }
    let phi = mqlfa_features(context, pattern, state.n_channels())?;
    let td = reward - dot(&state.theta, &phi);
    for (t, f) in state.theta.iter_mut().zip(&phi) {
        *t += td * state.tau * f;
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub struct MqlfaAgent {
    state: MqlfaState,
    epsilon: EpsilonSchedule,
    initial_tau: f64,
    tau_decay: f64,
    updates: u64,
    rng: SimRng,
}

impl MqlfaAgent {
    pub fn new(params: &AgentParams, rng: SimRng) -> Self {
        MqlfaAgent {
            state: MqlfaState::new(params.n_channels, params.initial_tau),
            epsilon: params.epsilon,
            initial_tau: params.initial_tau,
            tau_decay: params.tau_decay,
            updates: 0,
            rng,
        }
    }

    pub fn state(&self) -> &MqlfaState {
        &self.state
    }

    /// Action values of every pattern for one context.
    pub fn action_values(&self, context: &Context) -> Result<Vec<f64>> {
        let m = self.state.n_channels();
        if context.len() != m {
            return Err(SimError::invalid(format!("context has {} entries for {m} channels", context.len())));
        }
        let (ctx_w, bit_w) = self.state.theta.split_at(m);
        let base = dot(ctx_w, &normalized_power(context));
        Ok((0..1usize << m)
            .map(|p| base + (0..m).filter(|&k| p >> k & 1 == 1).map(|k| bit_w[k]).sum::<f64>())
            .collect())
    }
}

impl Agent for MqlfaAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::Mqlfa
    }

    fn act(&mut self, context: &Context) -> Result<usize> {
        let values = self.action_values(context)?;
        eps_greedy_select(&values, self.epsilon.value, &mut self.rng)
    }

    fn learn(&mut self, context: &Context, action: usize, reward: f64) -> Result<Option<f64>> {
        self.state.tau = decayed_rate(self.initial_tau, self.tau_decay, self.updates);
        mqlfa_update(&mut self.state, context, action, reward)?;
        self.updates += 1;
        self.epsilon.advance();
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
    use num_complex::Complex64;
    use rand::Rng;

    fn random_context(m: usize, rng: &mut impl Rng) -> Context {
        Context {
            values: (0..m)
                .map(|_| Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
                .collect(),
            owner: 0,
        }
    }

    #[test]
    fn zero_weights_give_zero_values() {
        let mut rng = rng_from(1);
        let state = MqlfaState::new(3, 1.0);
        let ctx = random_context(3, &mut rng);
        for p in 0..8 {
            assert_eq!(mqlfa_q(&state, &ctx, p).unwrap(), 0.0);
        }
    }

    #[test]
    fn q_is_linear_in_theta() {
        let mut rng = rng_from(2);
        let ctx = random_context(3, &mut rng);
        let phi = mqlfa_features(&ctx, 5, 3).unwrap();
        let norm2: f64 = phi.iter().map(|f| f * f).sum();
        let mut state = MqlfaState {
            theta: phi.iter().map(|f| f / norm2).collect(),
            tau: 1.0,
        };
        assert!((mqlfa_q(&state, &ctx, 5).unwrap() - 1.0).abs() < 1e-12);
        let q = mqlfa_q(&state, &ctx, 3).unwrap();
        state.theta.iter_mut().for_each(|t| *t *= 2.0);
        assert!((mqlfa_q(&state, &ctx, 3).unwrap() - 2.0 * q).abs() < 1e-12);
    }

    #[test]
    fn first_rewarded_update_copies_features() {
        let mut rng = rng_from(3);
        let ctx = random_context(2, &mut rng);
        let mut state = MqlfaState::new(2, 1.0);
        mqlfa_update(&mut state, &ctx, 3, 1.0).unwrap();
        assert_eq!(state.theta, mqlfa_features(&ctx, 3, 2).unwrap());
    }

    #[test]
    fn zero_error_or_rate_keeps_theta() {
        let mut rng = rng_from(4);
        let ctx = random_context(2, &mut rng);
        let mut state = MqlfaState {
            theta: vec![0.1, -0.2, 0.3, 0.4],
            tau: 0.7,
        };
        let q = mqlfa_q(&state, &ctx, 2).unwrap();
        let before = state.theta.clone();
        mqlfa_update(&mut state, &ctx, 2, q).unwrap();
        assert_eq!(state.theta, before);

        state.tau = 0.0;
        mqlfa_update(&mut state, &ctx, 1, 1.0).unwrap();
        assert_eq!(state.theta, before);
    }

    #[test]
    fn vectorized_values_match_definition() {
        let mut rng = rng_from(5);
        let mut agent = MqlfaAgent::new(&AgentParams::new(3), rng_from(6));
        for _ in 0..20 {
            let ctx = random_context(3, &mut rng);
            let a = agent.act(&ctx).unwrap();
            agent.learn(&ctx, a, f64::from(rng.random_range(0..2u8))).unwrap();
        }
        let ctx = random_context(3, &mut rng);
        let values = agent.action_values(&ctx).unwrap();
        for (p, v) in values.iter().enumerate() {
            assert!((v - mqlfa_q(agent.state(), &ctx, p).unwrap()).abs() < 1e-12);
        }
    }
}
