use std::fmt;

use thiserror::Error;

/// Per-device MAC state around an alarm slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DeviceMacState {
    /// Periodic process-data traffic.
    #[default]
    Normal,
    /// Detected the alarm and contends to report it.
    Emergency,
    /// Inactive, holding off because the channels are busy.
    Quiet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("illegal MAC transition {from} -> {to}")]
pub struct MacError {
    pub from: DeviceMacState,
    pub to: DeviceMacState,
}

impl fmt::Display for DeviceMacState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeviceMacState::Normal => "NS",
            DeviceMacState::Emergency => "ES",
            DeviceMacState::Quiet => "QS",
        })
    }
}

impl DeviceMacState {
    pub fn can_transition(self, to: DeviceMacState) -> bool {
        use DeviceMacState::*;
        matches!(
            (self, to),
            (Normal, Emergency) | (Normal, Quiet) | (Emergency, Normal) | (Quiet, Normal)
        )
    }

    pub fn transition(&mut self, to: DeviceMacState) -> Result<(), MacError> {
        if !self.can_transition(to) {
            return Err(MacError { from: *self, to });
        }
        *self = to;
        Ok(())
    }
}
