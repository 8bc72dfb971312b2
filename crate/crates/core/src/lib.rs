//! Multi-channel alarm random access for industrial IoT networks.
//!
//! When an alarm event strikes, a random batch of nearby devices becomes
//! active and each one independently picks a transmission pattern over `M`
//! orthogonal channels. The alarm gets through when at least one channel
//! carries exactly one transmitter. This crate provides:
//!
//! - [`env`]: deployments, alarm events, Rayleigh channels, pilot contexts and
//!   the collision success indicator.
//! - [`net`]: a tiny hand-rolled feed-forward network with masked MSE loss,
//!   backpropagation, global-norm clipping and RMSProp.
//! - [`agents`]: the neural-network bandit (NNBB), the multi-armed bandit
//!   (MAB), myopic Q-learning with linear features (MQLFA) and random
//!   selection (RS).
//! - [`oracle`]: exact success probability of static policies by enumeration,
//!   plus a Monte Carlo estimator.
//! - [`harness`]: the slot loop with the device MAC phase machine, metrics,
//!   convergence detection and parameter sweeps.
//! - [`cli`]: the `alarm-sim` command-line front end and result files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod cli;
pub mod env;
mod error;
pub mod harness;
pub mod net;
pub mod oracle;
pub mod seed;

pub use error::{Result, SimError};
