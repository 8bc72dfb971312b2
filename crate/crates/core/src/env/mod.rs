//! The physical and medium-access environment of an alarm slot.

mod alarm;
mod channel;
mod geometry;
mod pattern;

pub use alarm::{activation_probability, sample_alarm, AlarmEvent};
pub use channel::{
    contexts_from_noise, generate_contexts, sample_channels, sample_pilots, ChannelRealization,
    Context, PilotSet, QPSK,
};
pub use geometry::{build_deployment, uniform_in_disc, Deployment, Point, MIN_BS_DISTANCE};
pub use pattern::{n_patterns, reward, success_indicator, PatternMatrix, TransmissionPattern, MAX_CHANNELS};

/// Linear SNR from decibels.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
