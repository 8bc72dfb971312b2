use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Result, SimError};

/// Positions closer than this to the base station are redrawn.
pub const MIN_BS_DISTANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Devices, base station (at the origin) and external controller in a disc.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Deployment {
    pub region_radius: f64,
    pub density: f64,
    pub device_positions: Vec<Point>,
    pub exc_position: Point,
    /// Device to base-station distances.
    pub device_bs_distances: Vec<f64>,
}

impl Deployment {
    pub fn n_devices(&self) -> usize {
        self.device_positions.len()
    }

    /// Builds a deployment from explicit positions. The radius is derived
    /// from the density and the number of devices.
    pub fn from_positions(positions: Vec<Point>, exc_position: Point, density: f64) -> Result<Self> {
        if positions.is_empty() {
            return Err(SimError::invalid("deployment needs at least one device"));
        }
        if !(density > 0.0) {
            return Err(SimError::invalid(format!("density must be positive, got {density}")));
        }
        let region_radius = region_radius(positions.len(), density);
        let device_bs_distances: Vec<f64> = positions.iter().map(|p| p.norm()).collect();
        Ok(Deployment {
            region_radius,
            density,
            device_positions: positions,
            exc_position,
            device_bs_distances,
        })
    }
}

fn region_radius(n_devices: usize, density: f64) -> f64 {
    (n_devices as f64 / (PI * density)).sqrt()
}

pub fn uniform_in_disc<R: Rng + ?Sized>(radius: f64, rng: &mut R) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = 2.0 * PI * rng.random::<f64>();
    Point {
        x: r * theta.cos(),
        y: r * theta.sin(),
    }
}

/// Places `n_devices` devices and the ExC independently and uniformly in a
/// disc sized so that the device density equals `density`.
pub fn build_deployment<R: Rng + ?Sized>(n_devices: usize, density: f64, rng: &mut R) -> Result<Deployment> {
    if n_devices == 0 {
        return Err(SimError::invalid("n_devices must be at least 1"));
    }
    if !(density > 0.0) || !density.is_finite() {
        return Err(SimError::invalid(format!("density must be positive, got {density}")));
    }
    let radius = region_radius(n_devices, density);
    let positions = (0..n_devices)
        .map(|_| loop {
            let p = uniform_in_disc(radius, rng);
            if p.norm() >= MIN_BS_DISTANCE {
                break p;
            }
        })
        .collect();
    let exc = uniform_in_disc(radius, rng);
    Deployment::from_positions(positions, exc, density)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;

    #[test]
    fn radius_for_twenty_devices() {
        let dep = build_deployment(20, 0.2, &mut rng_from(1)).unwrap();
        let expected = (20.0 / (0.2 * PI)).sqrt();
        assert!((dep.region_radius - 5.641_895_835_477_563).abs() < 1e-12);
        assert!((dep.region_radius - expected).abs() <= 1e-9 * expected);
    }

    #[test]
    fn unit_radius() {
        let dep = build_deployment(1, 1.0 / PI, &mut rng_from(2)).unwrap();
        assert!((dep.region_radius - 1.0).abs() < 1e-12);
    }

    #[test]
    fn devices_inside_disc_and_distances_cached() {
        for seed in 0..20 {
            let dep = build_deployment(60, 0.2, &mut rng_from(seed)).unwrap();
            assert_eq!(dep.n_devices(), 60);
            for (p, &r) in dep.device_positions.iter().zip(&dep.device_bs_distances) {
                assert!(r <= dep.region_radius);
                assert!(r >= MIN_BS_DISTANCE);
                assert_eq!(r, p.norm());
            }
            assert!(dep.exc_position.norm() <= dep.region_radius);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let mut rng = rng_from(0);
        assert!(matches!(build_deployment(0, 0.2, &mut rng), Err(SimError::InvalidArgument(_))));
        assert!(matches!(build_deployment(5, 0.0, &mut rng), Err(SimError::InvalidArgument(_))));
        assert!(matches!(build_deployment(5, -1.0, &mut rng), Err(SimError::InvalidArgument(_))));
    }

    #[test]
    fn same_seed_same_deployment() {
        let a = build_deployment(10, 0.2, &mut rng_from(9)).unwrap();
        let b = build_deployment(10, 0.2, &mut rng_from(9)).unwrap();
        assert_eq!(a.device_positions, b.device_positions);
    }
}
