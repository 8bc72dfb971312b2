//! Exact success probability of static policies by exhaustive enumeration,
//! and the matching Monte Carlo estimator.
//!
//! A static policy gives every device a fixed activation probability and a
//! fixed distribution over transmission patterns. The exact value sums, over
//! every possible active set, the probability of that set times the
//! probability that the independent pattern draws of its members leave some
//! channel with exactly one transmitter.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{success_indicator, PatternMatrix, MAX_CHANNELS};
use crate::{Result, SimError};

pub const MAX_DEVICES: usize = 12;
pub const DEFAULT_BUDGET: u128 = 100_000_000;

const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticPolicyMatrix {
    pub n_channels: usize,
    /// One row per device, one column per pattern index.
    pub probs: Vec<Vec<f64>>,
    pub activation: Vec<f64>,
}

impl StaticPolicyMatrix {
    pub fn new(n_channels: usize, probs: Vec<Vec<f64>>, activation: Vec<f64>) -> Result<Self> {
        if n_channels == 0 || n_channels > MAX_CHANNELS {
            return Err(SimError::invalid(format!("channel count {n_channels} out of range")));
        }
        if probs.len() != activation.len() {
            return Err(SimError::invalid(format!(
                "{} policy rows for {} activation probabilities",
                probs.len(),
                activation.len()
            )));
        }
        let width = 1usize << n_channels;
        for (d, row) in probs.iter().enumerate() {
            if row.len() != width {
                return Err(SimError::invalid(format!(
                    "row {d} has {} entries, expected {width}",
                    row.len()
                )));
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(SimError::invalid(format!("row {d} has entries outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(SimError::invalid(format!("row {d} sums to {sum}")));
            }
        }
        if let Some(p) = activation.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(SimError::invalid(format!("activation probability {p} outside [0, 1]")));
        }
        Ok(StaticPolicyMatrix {
            n_channels,
            probs,
            activation,
        })
    }

    /// Every device picks uniformly among all patterns.
    pub fn uniform(n_channels: usize, activation: Vec<f64>) -> Result<Self> {
        let width = 1usize << n_channels;
        let rows = vec![vec![1.0 / width as f64; width]; activation.len()];
        Self::new(n_channels, rows, activation)
    }

    pub fn n_devices(&self) -> usize {
        self.activation.len()
    }

    /// Number of joint `(active set, pattern assignment)` terms enumerated:
    /// `(1 + 2^M)^N`.
    pub fn enumeration_terms(&self) -> u128 {
        let base = 1u128 + (1u128 << self.n_channels);
        (0..self.n_devices()).fold(1u128, |acc, _| acc.saturating_mul(base))
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

/// Active sets by increasing size, then lexicographically by member list.
fn subsets_in_order(n: usize) -> Vec<u32> {
    let mut masks: Vec<u32> = (0..1u32 << n).collect();
    masks.sort_by_key(|&m| {
        let members: Vec<u32> = (0..n as u32).filter(|i| m >> i & 1 == 1).collect();
        (m.count_ones(), members)
    });
    masks
}

/// Probability that the members' pattern draws succeed, by depth-first
/// enumeration of every assignment.
fn assignment_success(policy: &StaticPolicyMatrix, members: &[usize]) -> f64 {
    fn walk(
        policy: &StaticPolicyMatrix,
        members: &[usize],
        prob: f64,
        once: usize,
        twice: usize,
        acc: &mut CompensatedSum,
    ) {
        let Some((&dev, rest)) = members.split_first() else {
            if once & !twice != 0 {
                acc.add(prob);
            }
            return;
        };
        for (pattern, &p) in policy.probs[dev].iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            walk(policy, rest, prob * p, once | pattern, twice | (once & pattern), acc);
        }
    }
    let mut acc = CompensatedSum::default();
    walk(policy, members, 1.0, 0, 0, &mut acc);
    acc.value()
}

/// Exact success probability of a static policy.
pub fn exact_success_prob(policy: &StaticPolicyMatrix, budget: u128) -> Result<f64> {
    let terms = policy.enumeration_terms();
    if policy.n_devices() > MAX_DEVICES || terms > budget {
        return Err(SimError::ResourceLimit { terms, budget });
    }
    let n = policy.n_devices();
    let per_subset: Vec<f64> = subsets_in_order(n)
        .into_par_iter()
        .map(|mask| {
            if mask == 0 {
                return 0.0;
            }
            let mut p_set = 1.0;
            let mut members = Vec::new();
            for (d, &f) in policy.activation.iter().enumerate() {
                if mask >> d & 1 == 1 {
                    p_set *= f;
                    members.push(d);
                } else {
                    p_set *= 1.0 - f;
                }
            }
            if p_set == 0.0 {
                return 0.0;
            }
            p_set * assignment_success(policy, &members)
        })
        .collect();
    let mut total = CompensatedSum::default();
    for v in per_subset {
        total.add(v);
    }
    Ok(total.value().clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub trials: u64,
    pub successes: u64,
    pub mean: f64,
    pub std_error: f64,
}

impl McEstimate {
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        let mean = successes as f64 / trials as f64;
        McEstimate {
            trials,
            successes,
            mean,
            std_error: (mean * (1.0 - mean) / trials as f64).sqrt(),
        }
    }

    /// Whether `value` lies within `k` standard errors of the estimate.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error + 1e-12
    }
}

fn sample_pattern<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (i, &p) in row.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    // Rounding left `u` past the last cumulative value: take the last
    // pattern with positive mass.
    row.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Monte Carlo estimate of the success probability: independent activations,
/// independent pattern draws, collision check.
pub fn mc_success_rate<R: Rng + ?Sized>(
    policy: &StaticPolicyMatrix,
    trials: u64,
    rng: &mut R,
) -> Result<McEstimate> {
    if trials == 0 {
        return Err(SimError::invalid("at least one trial is required"));
    }
    let mut successes = 0u64;
    let mut columns = Vec::with_capacity(policy.n_devices());
    for _ in 0..trials {
        columns.clear();
        for (row, &f) in policy.probs.iter().zip(&policy.activation) {
            if rng.random::<f64>() < f {
                columns.push(sample_pattern(row, rng));
            }
        }
        let a = PatternMatrix {
            n_channels: policy.n_channels,
            columns: std::mem::take(&mut columns),
        };
        if success_indicator(&a) {
            successes += 1;
        }
        columns = a.columns;
    }
    Ok(McEstimate::from_counts(successes, trials))
}
