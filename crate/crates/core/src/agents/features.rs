use num_complex::Complex64;

use crate::env::Context;
use crate::{Result, SimError};

/// Shifts the context so both real and imaginary minima are zero, then scales
/// by the largest magnitude. A context whose shifted magnitudes are all zero
/// maps to the zero vector.
pub fn normalize_context(values: &[Complex64]) -> Vec<Complex64> {
    let min_re = values.iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
    let min_im = values.iter().map(|v| v.im).fold(f64::INFINITY, f64::min);
    let shift = Complex64::new(min_re, min_im);
    let kappa: Vec<Complex64> = values.iter().map(|&v| v - shift).collect();
    let max_abs = kappa.iter().map(|k| k.norm()).fold(0.0, f64::max);
    if max_abs == 0.0 {
        return vec![Complex64::new(0.0, 0.0); values.len()];
    }
    kappa.into_iter().map(|k| k / max_abs).collect()
}

/// `diag(s̃ s̃^H)`: squared magnitudes of the normalized context, each in
/// `[0, 1]`. This is the network input of NNBB and the context half of the
/// MQLFA features.
pub fn normalized_power(context: &Context) -> Vec<f64> {
    normalize_context(&context.values)
        .iter()
        .map(|v| v.norm_sqr())
        .collect()
}

/// `[|s̃_1|^2, ..., |s̃_M|^2, bits of the pattern]`.
pub fn mqlfa_features(context: &Context, pattern: usize, n_channels: usize) -> Result<Vec<f64>> {
    if context.len() != n_channels {
        return Err(SimError::invalid(format!(
            "context has {} entries for {n_channels} channels",
            context.len()
        )));
    }
    if pattern >> n_channels != 0 {
        return Err(SimError::invalid(format!("pattern index {pattern} out of range")));
    }
    let mut features = normalized_power(context);
    features.extend((0..n_channels).map(|m| f64::from((pattern >> m) as u8 & 1)));
    Ok(features)
}
