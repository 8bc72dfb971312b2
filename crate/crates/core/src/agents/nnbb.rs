//! Neural-network-based bandit: a tiny network maps the device's context to
//! one value per transmission pattern, trained online from a FIFO memory.

use super::features::normalized_power;
use super::replay::{Experience, ReplayBuffer};
use super::{decayed_rate, eps_greedy_select, Agent, AgentKind, AgentParams, EpsilonSchedule};
use crate::env::Context;
use crate::net::{clip_gradient, l2_norm, RmspropState, TinyNet, TrainBatch};
use crate::seed::SimRng;
use crate::{Result, SimError};

pub struct NnbbAgent {
    net: TinyNet,
    optimizer: RmspropState,
    memory: ReplayBuffer,
    epsilon: EpsilonSchedule,
    batch_size: usize,
    clip_threshold: f64,
    initial_lr: f64,
    lr_decay: f64,
    activations: u64,
    last_clipped_norm: Option<f64>,
    rng: SimRng,
}

impl NnbbAgent {
    pub fn new(params: &AgentParams, mut rng: SimRng) -> Result<Self> {
        let net = TinyNet::init(&params.layer_sizes(), &mut rng)?;
        let optimizer = RmspropState::new(
            net.n_params(),
            params.rmsprop_decay,
            params.rmsprop_stabilizer,
            params.initial_lr,
        );
        Ok(NnbbAgent {
            net,
            optimizer,
            memory: ReplayBuffer::new(params.buffer_capacity()),
            epsilon: params.epsilon,
            batch_size: params.batch_size(),
            clip_threshold: params.clip_threshold,
            initial_lr: params.initial_lr,
            lr_decay: params.lr_decay,
            activations: 0,
            last_clipped_norm: None,
            rng,
        })
    }

    pub fn net(&self) -> &TinyNet {
        &self.net
    }

    pub fn memory(&self) -> &ReplayBuffer {
        &self.memory
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn activations(&self) -> u64 {
        self.activations
    }

    /// Norm of the clipped gradient handed to RMSProp in the latest step.
    pub fn last_clipped_norm(&self) -> Option<f64> {
        self.last_clipped_norm
    }

    fn encode(&self, context: &Context) -> Result<Vec<f64>> {
        if context.len() != self.net.input_dim() {
            return Err(SimError::invalid(format!(
                "context has {} entries, network expects {}",
                context.len(),
                self.net.input_dim()
            )));
        }
        Ok(normalized_power(context))
    }

    /// Predicted reward of every pattern for this context.
    pub fn action_values(&self, context: &Context) -> Result<Vec<f64>> {
        self.net.forward(&self.encode(context)?)
    }

    fn train_step(&mut self) -> Result<Option<f64>> {
        // Until the memory holds B tuples the whole memory is the batch.
        let n = self.batch_size.min(self.memory.len());
        let Some(samples) = self.memory.sample(n, &mut self.rng) else {
            return Ok(None);
        };
        let mut batch = TrainBatch::default();
        for exp in samples {
            batch.push(exp.input.clone(), exp.action, exp.reward);
        }
        let (loss, grad) = self.net.backprop(&batch)?;
        let chi = clip_gradient(&grad, self.clip_threshold);
        self.last_clipped_norm = Some(l2_norm(&chi));
        self.optimizer.learning_rate = decayed_rate(self.initial_lr, self.lr_decay, self.activations);
        self.optimizer.step(&mut self.net, &chi)?;
        Ok(Some(loss))
    }

    /// One activation end to end: evaluate, select, obtain the ACK from
    /// `feedback`, store the tuple, train, decay ε.
    pub fn act_and_learn<F>(&mut self, context: &Context, feedback: F) -> Result<(usize, Option<f64>)>
    where
        F: FnOnce(usize) -> f64,
    {
        let action = self.act(context)?;
        let reward = feedback(action);
        let loss = self.learn(context, action, reward)?;
        Ok((action, loss))
    }
}

impl Agent for NnbbAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::Nnbb
    }

    fn act(&mut self, context: &Context) -> Result<usize> {
        let values = self.action_values(context)?;
        eps_greedy_select(&values, self.epsilon.value, &mut self.rng)
    }

    fn learn(&mut self, context: &Context, action: usize, reward: f64) -> Result<Option<f64>> {
        let input = self.encode(context)?;
        if action >= self.net.output_dim() {
            return Err(SimError::invalid(format!("action {action} out of range")));
        }
        self.memory.push(Experience { input, action, reward });
        let loss = self.train_step()?;
        self.activations += 1;
        self.epsilon.advance();
        Ok(loss)
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
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
            owner: 0,
        }
    }

    #[test]
    fn trains_from_the_first_activation_on_what_memory_holds() {
        let params = AgentParams::new(2);
        let b = params.batch_size();
        let mut agent = NnbbAgent::new(&params, rng_from(1)).unwrap();
        let mut rng = rng_from(2);
        for k in 0..b + 5 {
            let before = agent.net().clone();
            let ctx = random_context(2, &mut rng);
            let (_, loss) = agent.act_and_learn(&ctx, |_| 1.0).unwrap();
            assert!(loss.is_some());
            assert_eq!(agent.memory().len(), k + 1);
            assert_ne!(agent.net(), &before);
        }
    }

    #[test]
    fn epsilon_follows_schedule() {
        let mut agent = NnbbAgent::new(&AgentParams::new(1), rng_from(3)).unwrap();
        let mut rng = rng_from(4);
        for k in 0..300u32 {
            assert_eq!(agent.epsilon(), f64::max(0.1, 1.0 - 0.005 * f64::from(k)));
            let ctx = random_context(1, &mut rng);
            agent.act_and_learn(&ctx, |a| if a == 1 { 1.0 } else { 0.0 }).unwrap();
        }
    }

    #[test]
    fn memory_is_fifo_at_capacity() {
        let params = AgentParams::new(1);
        let cap = params.buffer_capacity();
        let mut agent = NnbbAgent::new(&params, rng_from(5)).unwrap();
        let mut rng = rng_from(6);
        let mut actions = Vec::new();
        for _ in 0..cap + 1 {
            let ctx = random_context(1, &mut rng);
            let (a, _) = agent.act_and_learn(&ctx, |_| 0.0).unwrap();
            actions.push(a);
        }
        assert_eq!(agent.memory().len(), cap);
        let held: Vec<usize> = agent.memory().iter().map(|e| e.action).collect();
        assert_eq!(held, actions[1..]);
    }

    #[test]
    fn clipped_update_norm_bounded() {
        let params = AgentParams::new(2);
        let mut agent = NnbbAgent::new(&params, rng_from(7)).unwrap();
        let mut rng = rng_from(8);
        for _ in 0..params.batch_size() * 3 {
            let ctx = random_context(2, &mut rng);
            let r = f64::from(rng.random_range(0..2u8));
            agent.act_and_learn(&ctx, |_| r).unwrap();
            if let Some(n) = agent.last_clipped_norm() {
                assert!(n <= 5.0 * (1.0 + 1e-12));
            }
        }
        assert!(agent.last_clipped_norm().is_some());
    }

    #[test]
    fn rejects_wrong_context_length() {
        let mut agent = NnbbAgent::new(&AgentParams::new(3), rng_from(0)).unwrap();
        let mut rng = rng_from(1);
        assert!(agent.act(&random_context(2, &mut rng)).is_err());
    }

    #[test]
    fn learns_a_context_free_best_action() {
        // Only pattern 2 is ever rewarded; the greedy choice should settle on it.
        let mut params = AgentParams::new(2);
        params.hidden_size = 4;
        let mut agent = NnbbAgent::new(&params, rng_from(9)).unwrap();
        let mut rng = rng_from(10);
        for _ in 0..1500 {
            let ctx = random_context(2, &mut rng);
            agent.act_and_learn(&ctx, |a| if a == 2 { 1.0 } else { 0.0 }).unwrap();
        }
        let ctx = random_context(2, &mut rng);
        let values = agent.action_values(&ctx).unwrap();
        assert_eq!(crate::agents::argmax(&values), Some(2), "{values:?}");
    }
}
