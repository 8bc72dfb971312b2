use rand::Rng;

use super::{Agent, AgentKind};
use crate::env::Context;
use crate::seed::SimRng;
use crate::Result;

/// Uniform pattern over all `2^M`, silence included.
pub fn rs_act<R: Rng + ?Sized>(n_channels: usize, rng: &mut R) -> usize {
    rng.random_range(0..1usize << n_channels)
}

pub struct RandomAgent {
    n_channels: usize,
    rng: SimRng,
}

impl RandomAgent {
    pub fn new(n_channels: usize, rng: SimRng) -> Self {
        RandomAgent { n_channels, rng }
    }

    pub fn select(&mut self) -> usize {
        rs_act(self.n_channels, &mut self.rng)
    }
}

impl Agent for RandomAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::Rs
    }

    fn act(&mut self, _context: &Context) -> Result<usize> {
        Ok(self.select())
    }

    fn learn(&mut self, _context: &Context, _action: usize, _reward: f64) -> Result<Option<f64>> {
        Ok(None)
    }

    fn epsilon(&self) -> f64 {
        1.0
    }
}
