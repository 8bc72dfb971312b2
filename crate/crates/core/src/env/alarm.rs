use rand::Rng;
use serde::{Deserialize, Serialize};

use super::geometry::{uniform_in_disc, Deployment, Point};
use crate::{Result, SimError};

/// Draws of an alarm event beyond this many empty active sets are treated as
/// a configuration error (e.g. a vanishing `lambda`).
const MAX_RESAMPLES: usize = 1_000_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlarmEvent {
    pub epicenter: Point,
    /// Indices of the devices that detected the alarm, ascending.
    pub active_set: Vec<usize>,
    pub activation_probs: Vec<f64>,
    pub epicenter_distances: Vec<f64>,
    /// Number of draws discarded because nobody activated.
    pub resamples: usize,
}

/// Activation probability `exp(-d / lambda)` of a device at distance `d`
/// from the epicenter.
pub fn activation_probability(distance: f64, lambda: f64) -> f64 {
    (-distance / lambda).exp()
}

/// Places an alarm uniformly in the deployment disc and activates each device
/// independently with probability `exp(-d / lambda)`. Draws with an empty
/// active set are discarded and redrawn.
pub fn sample_alarm<R: Rng + ?Sized>(dep: &Deployment, lambda: f64, rng: &mut R) -> Result<AlarmEvent> {
    if !(lambda > 0.0) {
        return Err(SimError::invalid(format!("lambda must be positive, got {lambda}")));
    }
    for resamples in 0..MAX_RESAMPLES {
        let epicenter = uniform_in_disc(dep.region_radius, rng);
        let epicenter_distances: Vec<f64> = dep
            .device_positions
            .iter()
            .map(|p| p.distance(epicenter))
            .collect();
        let activation_probs: Vec<f64> = epicenter_distances
            .iter()
            .map(|&d| activation_probability(d, lambda))
            .collect();
        let active_set: Vec<usize> = activation_probs
            .iter()
            .enumerate()
            .filter_map(|(i, &p)| (rng.random::<f64>() < p).then_some(i))
            .collect();
        if !active_set.is_empty() {
            if resamples > 0 {
                log::trace!("alarm redrawn {resamples} time(s) for an empty active set");
            }
            return Ok(AlarmEvent {
                epicenter,
                active_set,
                activation_probs,
                epicenter_distances,
                resamples,
            });
        }
    }
    Err(SimError::invalid(format!(
        "no device activated in {MAX_RESAMPLES} alarm draws (lambda = {lambda})"
    )))
}
