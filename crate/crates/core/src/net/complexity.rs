//! Arithmetic-operation counts for one NNBB transmission decision.

use serde::Serialize;

/// Operation count of one forward pass: `Σ l_{i+1} (2 l_i + 1)`.
pub fn forward_cost(layer_sizes: &[usize]) -> u128 {
    layer_sizes
        .windows(2)
        .map(|w| w[1] as u128 * (2 * w[0] as u128 + 1))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ComplexityBounds {
    /// Cost of generating the action values.
    pub forward: u128,
    pub lower: u128,
    pub upper: u128,
}

/// Bounds for the default shape `[M, 1, 1, 2^M]` and batch size `batch`.
///
/// Action selection costs 3 operations when exploiting via the comparison
/// path's lower end and `2 + 2^M` at most; training costs `batch` forward
/// passes.
pub fn complexity_bounds(n_channels: u32, batch: u128) -> ComplexityBounds {
    let n_actions = 1u128 << n_channels;
    let forward = forward_cost(&[n_channels as usize, 1, 1, n_actions as usize]);
    let training = batch * forward;
    ComplexityBounds {
        forward,
        lower: forward + training + 3,
        upper: forward + training + 2 + n_actions,
    }
}
