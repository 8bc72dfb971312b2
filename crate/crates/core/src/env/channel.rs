use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::alarm::AlarmEvent;
use super::geometry::Deployment;
use crate::{Result, SimError};

/// Symmetric QPSK constellation `{(±1 ± j)/√2}`.
pub const QPSK: [Complex64; 4] = [
    Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    Complex64::new(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    Complex64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    Complex64::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
];

/// Quasi-static Rayleigh coefficients, one M-vector per device. The same
/// coefficients serve the uplink pilots and the downlink context broadcast.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub coefficients: Vec<Vec<Complex64>>,
}

impl ChannelRealization {
    pub fn n_channels(&self) -> usize {
        self.coefficients.first().map_or(0, Vec::len)
    }
}

/// One pilot sequence per active device, in active-set order.
#[derive(Debug, Clone)]
pub struct PilotSet {
    pub pilots: Vec<Vec<Complex64>>,
}

/// The aggregated pilot signal as received back by one active device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub values: Vec<Complex64>,
    pub owner: usize,
}

impl Context {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Circularly-symmetric complex Gaussian sample with the given total variance.
fn complex_gaussian<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> Complex64 {
    let sd = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(sd * re, sd * im)
}

fn noise_vector<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<Complex64> {
    (0..m).map(|_| complex_gaussian(1.0, rng)).collect()
}

/// Draws `c_υ ~ CN(0, r_υ^-γ I_M)` for every device of the deployment.
pub fn sample_channels<R: Rng + ?Sized>(
    dep: &Deployment,
    n_channels: usize,
    gamma: f64,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if !(gamma > 0.0) {
        return Err(SimError::invalid(format!("path-loss exponent must be positive, got {gamma}")));
    }
    if n_channels == 0 {
        return Err(SimError::invalid("at least one channel is required"));
    }
    let mut coefficients = Vec::with_capacity(dep.n_devices());
    for (device, &r) in dep.device_bs_distances.iter().enumerate() {
        if !(r > 0.0) {
            return Err(SimError::invalid(format!(
                "device {device} sits on the base station (r = {r})"
            )));
        }
        let variance = r.powf(-gamma);
        coefficients.push((0..n_channels).map(|_| complex_gaussian(variance, rng)).collect());
    }
    Ok(ChannelRealization { coefficients })
}

/// Fresh QPSK pilots for `n_active` devices, drawn i.i.d. per symbol.
pub fn sample_pilots<R: Rng + ?Sized>(n_active: usize, n_channels: usize, rng: &mut R) -> PilotSet {
    let pilots = (0..n_active)
        .map(|_| (0..n_channels).map(|_| QPSK[rng.random_range(0..4)]).collect())
        .collect();
    PilotSet { pilots }
}

/// Uplink aggregation at the base station followed by the downlink broadcast,
/// with explicitly supplied noise. `downlink_noise[k]` belongs to the `k`-th
/// member of the active set.
pub fn contexts_from_noise(
    active_set: &[usize],
    chan: &ChannelRealization,
    pilots: &PilotSet,
    rho: f64,
    uplink_noise: &[Complex64],
    downlink_noise: &[Vec<Complex64>],
) -> Result<Vec<Context>> {
    if !(rho >= 0.0) {
        return Err(SimError::invalid(format!("SNR must be non-negative, got {rho}")));
    }
    if pilots.pilots.len() != active_set.len() {
        return Err(SimError::invalid(format!(
            "{} pilot sequences for {} active devices",
            pilots.pilots.len(),
            active_set.len()
        )));
    }
    if downlink_noise.len() != active_set.len() {
        return Err(SimError::invalid("one downlink noise vector per active device is required"));
    }
    let m = chan.n_channels();
    if uplink_noise.len() != m
        || pilots.pilots.iter().any(|p| p.len() != m)
        || downlink_noise.iter().any(|n| n.len() != m)
    {
        return Err(SimError::invalid(format!("all per-channel vectors must have length {m}")));
    }
    let amp = rho.sqrt();

    let mut aggregate = uplink_noise.to_vec();
    for (&device, pilot) in active_set.iter().zip(&pilots.pilots) {
        let c = chan
            .coefficients
            .get(device)
            .ok_or_else(|| SimError::invalid(format!("no channel for device {device}")))?;
        for ((s, &ck), &pk) in aggregate.iter_mut().zip(c).zip(pilot) {
            *s += amp * ck * pk;
        }
    }

    Ok(active_set
        .iter()
        .zip(downlink_noise)
        .map(|(&device, noise)| {
            let c = &chan.coefficients[device];
            let values = c
                .iter()
                .zip(&aggregate)
                .zip(noise)
                .map(|((&ck, &sk), &nk)| amp * ck * sk + nk)
                .collect();
            Context { values, owner: device }
        })
        .collect())
}

/// Contexts `s_υ = √ρ diag(c_υ) s + φ̂_υ` for every active device, where
/// `s = Σ √ρ diag(c_υ) ϱ_υ + φ` is the aggregate the base station received.
/// Noise terms are unit-power complex Gaussian.
pub fn generate_contexts<R: Rng + ?Sized>(
    event: &AlarmEvent,
    chan: &ChannelRealization,
    pilots: &PilotSet,
    rho: f64,
    rng: &mut R,
) -> Result<Vec<Context>> {
    if pilots.pilots.len() != event.active_set.len() {
        return Err(SimError::invalid(format!(
            "{} pilot sequences for {} active devices",
            pilots.pilots.len(),
            event.active_set.len()
        )));
    }
    let m = chan.n_channels();
    let uplink = noise_vector(m, rng);
    let downlink: Vec<_> = event.active_set.iter().map(|_| noise_vector(m, rng)).collect();
    contexts_from_noise(&event.active_set, chan, pilots, rho, &uplink, &downlink)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Deployment, Point};
    use crate::seed::rng_from;

    fn deployment_at(distances: &[f64]) -> Deployment {
        let pts = distances.iter().map(|&d| Point { x: d, y: 0.0 }).collect();
        Deployment::from_positions(pts, Point::ORIGIN, 0.2).unwrap()
    }

    fn event_for(active: Vec<usize>, n: usize) -> AlarmEvent {
        AlarmEvent {
            epicenter: Point::ORIGIN,
            active_set: active,
            activation_probs: vec![1.0; n],
            epicenter_distances: vec![0.0; n],
            resamples: 0,
        }
    }

    #[test]
    fn qpsk_has_unit_magnitude() {
        for s in QPSK {
            assert!((s.norm() - 1.0).abs() < 1e-15);
        }
        let pilots = sample_pilots(5, 4, &mut rng_from(1));
        assert!(pilots.pilots.iter().flatten().all(|p| (p.norm() - 1.0).abs() < 1e-15));
    }

    fn sample_variance(r: f64, gamma: f64) -> (f64, f64, f64) {
        let dep = deployment_at(&[r]);
        let mut rng = rng_from(5);
        let n = 100_000;
        let (mut re2, mut im2, mut abs2) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let c = sample_channels(&dep, 1, gamma, &mut rng).unwrap().coefficients[0][0];
            re2 += c.re * c.re;
            im2 += c.im * c.im;
            abs2 += c.norm_sqr();
        }
        (abs2 / n as f64, re2 / n as f64, im2 / n as f64)
    }

    #[test]
    fn unit_distance_has_unit_variance() {
        let (v, re, im) = sample_variance(1.0, 3.8);
        assert!((v - 1.0).abs() < 0.03, "variance {v}");
        assert!((re - 0.5).abs() < 0.015 && (im - 0.5).abs() < 0.015);
    }

    #[test]
    fn path_loss_scales_variance() {
        let expected = 2f64.powf(-3.8);
        assert!((expected - 0.071_794).abs() < 1e-5);
        let (v, _, _) = sample_variance(2.0, 3.8);
        assert!((v / expected - 1.0).abs() < 0.03, "variance {v} vs {expected}");
    }

    #[test]
    fn coefficients_are_uncorrelated() {
        let dep = deployment_at(&[1.0, 1.0]);
        let mut rng = rng_from(6);
        let n = 100_000;
        let mut cross_dev = Complex64::new(0.0, 0.0);
        let mut cross_chan = Complex64::new(0.0, 0.0);
        for _ in 0..n {
            let c = sample_channels(&dep, 2, 3.8, &mut rng).unwrap().coefficients;
            cross_dev += c[0][0] * c[1][0].conj();
            cross_chan += c[0][0] * c[0][1].conj();
        }
        assert!((cross_dev / n as f64).norm() < 0.02);
        assert!((cross_chan / n as f64).norm() < 0.02);
    }

    #[test]
    fn device_on_base_station_rejected() {
        let dep = Deployment::from_positions(vec![Point::ORIGIN], Point::ORIGIN, 1.0).unwrap();
        assert!(matches!(
            sample_channels(&dep, 2, 3.8, &mut rng_from(0)),
            Err(SimError::InvalidArgument(_))
        ));
    }

    #[test]
    fn zero_snr_context_is_unit_noise() {
        let m = 3;
        let dep = deployment_at(&[1.5, 2.5]);
        let event = event_for(vec![0, 1], 2);
        let mut rng = rng_from(7);
        let n = 100_000;
        let mut cov = vec![vec![Complex64::new(0.0, 0.0); m]; m];
        let mut mean = vec![Complex64::new(0.0, 0.0); m];
        for _ in 0..n {
            let chan = sample_channels(&dep, m, 3.8, &mut rng).unwrap();
            let pilots = sample_pilots(2, m, &mut rng);
            let ctx = generate_contexts(&event, &chan, &pilots, 0.0, &mut rng).unwrap();
            let s = &ctx[0].values;
            for i in 0..m {
                mean[i] += s[i];
                for (j, c) in cov[i].iter_mut().enumerate() {
                    *c += s[i] * s[j].conj();
                }
            }
        }
        for i in 0..m {
            assert!((mean[i] / n as f64).norm() < 0.02);
            for (j, &sum) in cov[i].iter().enumerate() {
                let c = sum / n as f64;
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((c - target).norm() < 0.03, "cov[{i}][{j}] = {c}");
            }
        }
    }

    #[test]
    fn lone_device_noiseless_context() {
        let m = 4;
        let dep = deployment_at(&[0.8, 1.7]);
        let mut rng = rng_from(8);
        let chan = sample_channels(&dep, m, 3.8, &mut rng).unwrap();
        let pilots = sample_pilots(1, m, &mut rng);
        let zero = vec![Complex64::new(0.0, 0.0); m];
        let ctx = contexts_from_noise(&[1], &chan, &pilots, 1.0, &zero, std::slice::from_ref(&zero)).unwrap();
        assert_eq!(ctx.len(), 1);
        assert_eq!(ctx[0].owner, 1);
        for k in 0..m {
            let c = chan.coefficients[1][k];
            let expected = c * c * pilots.pilots[0][k];
            assert!((ctx[0].values[k] - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn context_length_is_channel_count() {
        let dep = deployment_at(&[1.0, 2.0, 3.0]);
        let mut rng = rng_from(9);
        let event = event_for(vec![0, 2], 3);
        let chan = sample_channels(&dep, 5, 3.8, &mut rng).unwrap();
        let pilots = sample_pilots(2, 5, &mut rng);
        let ctx = generate_contexts(&event, &chan, &pilots, 10.0, &mut rng).unwrap();
        assert_eq!(ctx.len(), 2);
        assert!(ctx.iter().all(|c| c.len() == 5));
        assert_eq!(ctx[1].owner, 2);
    }

    #[test]
    fn pilot_count_mismatch_rejected() {
        let dep = deployment_at(&[1.0, 2.0]);
        let mut rng = rng_from(10);
        let event = event_for(vec![0, 1], 2);
        let chan = sample_channels(&dep, 2, 3.8, &mut rng).unwrap();
        let pilots = sample_pilots(1, 2, &mut rng);
        assert!(generate_contexts(&event, &chan, &pilots, 1.0, &mut rng).is_err());
    }
}
