use serde::{Deserialize, Serialize};

use super::TinyNet;
use crate::{Result, SimError};

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Global-norm clipping: `beta0 * g / max(||g||, beta0)`.
pub fn clip_gradient(grad: &[f64], beta0: f64) -> Vec<f64> {
    let norm = l2_norm(grad);
    if norm <= beta0 {
        return grad.to_vec();
    }
    let scale = beta0 / norm;
    grad.iter().map(|g| g * scale).collect()
}

/// RMSProp: a running average of squared gradients scales each step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmspropState {
    pub squared_grad_avg: Vec<f64>,
    pub avg_decay: f64,
    pub stabilizer: f64,
    pub learning_rate: f64,
}

impl RmspropState {
    pub fn new(n_params: usize, avg_decay: f64, stabilizer: f64, learning_rate: f64) -> Self {
        RmspropState {
            squared_grad_avg: vec![0.0; n_params],
            avg_decay,
            stabilizer,
            learning_rate,
        }
    }

    /// `avg <- d avg + (1 - d) chi^2`, then `w <- w - lr chi / (sqrt(avg) + eps)`.
    pub fn step(&mut self, net: &mut TinyNet, chi: &[f64]) -> Result<()> {
        if chi.len() != net.n_params() || self.squared_grad_avg.len() != net.n_params() {
            return Err(SimError::invalid(format!(
                "update has {} entries, optimizer {} and network {}",
                chi.len(),
                self.squared_grad_avg.len(),
                net.n_params()
            )));
        }
        let d = self.avg_decay;
        for ((w, avg), &g) in net.params_mut().iter_mut().zip(&mut self.squared_grad_avg).zip(chi) {
            *avg = d * *avg + (1.0 - d) * g * g;
            *w -= self.learning_rate * g / (avg.sqrt() + self.stabilizer);
        }
        Ok(())
    }
}
