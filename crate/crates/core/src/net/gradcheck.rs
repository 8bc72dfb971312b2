//! Central finite-difference check of the network gradient.
//!
//! The numerical side only ever calls [`TinyNet::masked_loss`], so it stays
//! independent of the backpropagation code it validates.

use rand::Rng;
use serde::Serialize;

use super::{param_count, TinyNet, TrainBatch};
use crate::seed::rng_from;
use crate::Result;

pub const DEFAULT_STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;

/// Denominator floor for entries where both gradients are (near) zero.
const REL_FLOOR: f64 = 1e-6;

/// Minimum distance of every hidden pre-activation from the rectifier kink
/// for an instance to be checked.
const KINK_MARGIN: f64 = 1e-3;

pub fn numerical_gradient(net: &TinyNet, batch: &TrainBatch, step: f64) -> Result<Vec<f64>> {
    let mut probe = net.clone();
    let mut grad = Vec::with_capacity(net.n_params());
    for i in 0..net.n_params() {
        let w = net.params()[i];
        probe.params_mut()[i] = w + step;
        let up = probe.masked_loss(batch)?;
        probe.params_mut()[i] = w - step;
        let down = probe.masked_loss(batch)?;
        probe.params_mut()[i] = w;
        grad.push((up - down) / (2.0 * step));
    }
    Ok(grad)
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub trials: usize,
    pub max_rel_error: f64,
    pub worst_trial: usize,
    pub worst_param: usize,
    pub worst_layer: usize,
    pub worst_shape: Vec<usize>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error < TOLERANCE
    }
}

/// Random network with default hidden shape for `M` in 1..=4 and a random
/// batch away from rectifier kinks.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R) -> Result<(TinyNet, TrainBatch)> {
    loop {
        let m = rng.random_range(1..=4usize);
        let sizes = [m, 1, 1, 1 << m];
        let params = (0..param_count(&sizes)).map(|_| rng.random_range(-1.0..1.0)).collect();
        let net = TinyNet::from_params(&sizes, params)?;
        let mut batch = TrainBatch::default();
        for _ in 0..rng.random_range(1..=8) {
            let x = (0..m).map(|_| rng.random::<f64>()).collect();
            batch.push(x, rng.random_range(0..1 << m), f64::from(rng.random_range(0..2u8)));
        }
        if net.min_hidden_margin(&batch)? > KINK_MARGIN {
            return Ok((net, batch));
        }
    }
}

/// Compares `gradient` against central differences on `trials` random
/// instances drawn from `seed`.
pub fn run<F>(trials: usize, seed: u64, gradient: F) -> Result<GradCheckReport>
where
    F: Fn(&TinyNet, &TrainBatch) -> Result<Vec<f64>>,
{
    let mut rng = rng_from(seed);
    let mut report = GradCheckReport {
        trials,
        max_rel_error: 0.0,
        worst_trial: 0,
        worst_param: 0,
        worst_layer: 0,
        worst_shape: Vec::new(),
    };
    for trial in 0..trials {
        let (net, batch) = random_instance(&mut rng)?;
        let analytic = gradient(&net, &batch)?;
        let numeric = numerical_gradient(&net, &batch, DEFAULT_STEP)?;
        for (i, (&a, &n)) in analytic.iter().zip(&numeric).enumerate() {
            let err = relative_error(a, n);
            if err > report.max_rel_error || report.worst_shape.is_empty() {
                report.max_rel_error = report.max_rel_error.max(err);
                report.worst_trial = trial;
                report.worst_param = i;
                report.worst_layer = net.layer_of_param(i);
                report.worst_shape = net.layer_sizes().to_vec();
            }
        }
    }
    Ok(report)
}

/// Gradient of the masked loss by backpropagation.
pub fn backprop_gradient(net: &TinyNet, batch: &TrainBatch) -> Result<Vec<f64>> {
    net.backprop(batch).map(|(_, g)| g)
}
