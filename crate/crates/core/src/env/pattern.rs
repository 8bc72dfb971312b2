use serde::{Deserialize, Serialize};

use crate::{Result, SimError};

/// Largest supported channel count; `2^M` patterns must fit comfortably in
/// memory and in a `u32` bit mask.
pub const MAX_CHANNELS: usize = 16;

/// Which of the `M` channels a device transmits on. Pattern index `i` maps to
/// its little-endian binary expansion: bit `m` of `i` is channel `m + 1`, so
/// index 0 is silence and `2^M - 1` transmits everywhere.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TransmissionPattern {
    pub bits: Vec<bool>,
}

impl TransmissionPattern {
    pub fn from_index(index: usize, n_channels: usize) -> Result<Self> {
        if n_channels == 0 || n_channels > MAX_CHANNELS {
            return Err(SimError::invalid(format!("channel count {n_channels} out of range")));
        }
        if index >> n_channels != 0 {
            return Err(SimError::invalid(format!(
                "pattern index {index} out of range for {n_channels} channels"
            )));
        }
        Ok(TransmissionPattern {
            bits: (0..n_channels).map(|m| index >> m & 1 == 1).collect(),
        })
    }

    pub fn index(&self) -> usize {
        self.bits
            .iter()
            .enumerate()
            .fold(0, |acc, (m, &b)| acc | (usize::from(b) << m))
    }

    pub fn n_channels(&self) -> usize {
        self.bits.len()
    }

    pub fn is_silent(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }
}

/// Number of patterns for `n_channels` channels.
pub fn n_patterns(n_channels: usize) -> usize {
    1 << n_channels
}

/// The per-slot choice matrix: `M` rows (channels), one column per active
/// device, stored column-wise as pattern indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternMatrix {
    pub n_channels: usize,
    pub columns: Vec<usize>,
}

impl PatternMatrix {
    pub fn new(n_channels: usize, columns: Vec<usize>) -> Result<Self> {
        if n_channels == 0 || n_channels > MAX_CHANNELS {
            return Err(SimError::invalid(format!("channel count {n_channels} out of range")));
        }
        if let Some(bad) = columns.iter().find(|&&c| c >> n_channels != 0) {
            return Err(SimError::invalid(format!("pattern index {bad} out of range")));
        }
        Ok(PatternMatrix { n_channels, columns })
    }

    /// Builds the matrix from explicit rows, `rows[m][k]` being device `k`'s
    /// bit on channel `m + 1`.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n_channels = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(SimError::invalid("ragged pattern matrix"));
        }
        let columns = (0..width)
            .map(|k| {
                rows.iter()
                    .enumerate()
                    .fold(0usize, |acc, (m, row)| acc | (usize::from(row[k] != 0) << m))
            })
            .collect();
        Self::new(n_channels, columns)
    }

    /// Number of transmitters on each channel.
    pub fn channel_loads(&self) -> Vec<usize> {
        (0..self.n_channels)
            .map(|m| self.columns.iter().filter(|&&c| c >> m & 1 == 1).count())
            .collect()
    }
}

/// 1 iff some channel carries exactly one transmitter.
pub fn success_indicator(patterns: &PatternMatrix) -> bool {
    let mut seen_once = 0usize;
    let mut seen_twice = 0usize;
    for &c in &patterns.columns {
        seen_twice |= seen_once & c;
        seen_once |= c;
    }
    seen_once & !seen_twice != 0
}

/// Shared ACK: every active agent is rewarded with the success bit.
pub fn reward(xi: bool, n_active: usize) -> Vec<f64> {
    vec![if xi { 1.0 } else { 0.0 }; n_active]
}
