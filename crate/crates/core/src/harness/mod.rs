//! The alarm-slot loop, experiment runs and parameter sweeps.

mod config;
mod mac;
mod metrics;
mod run;
mod sweep;

pub use config::{RunConfig, MEASUREMENT_FIRST_ATTEMPT};
pub use mac::{DeviceMacState, MacError};
pub use metrics::{
    detect_convergence, median, rolling_mean, success_rate_post_convergence, summarize, MetricsSeries,
    RunSummary,
};
pub(crate) use run::finish_series;
pub use run::{run_experiment, run_series, run_slot, ExperimentResult, SlotRecord, World};
pub use sweep::{parse_config_text, sweep, SweepCell, SweepGrid};

/// Worker count from an explicit value, else `ALARM_SIM_JOBS`, else the
/// number of available cores.
pub fn resolve_jobs(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var("ALARM_SIM_JOBS").ok().and_then(|v| v.parse().ok()))
        .filter(|&j| j > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}
