//! First-order Gauss–Markov gust process, one independent channel per axis.

use rand::Rng;
use rand_distr::StandardNormal;

use super::GustConfig;
use crate::Vec3;

/// Fluctuating part of the wind; the mean wind is added by [`GustProcess::wind`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GustProcess {
    pub fluctuation: Vec3,
}

fn axis_sigma(cfg: &GustConfig) -> Vec3 {
    Vec3::new(cfg.sigma, cfg.sigma, cfg.sigma * cfg.vertical_ratio)
}

fn normals<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    // three draws every call keeps the stream aligned whatever sigma is
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    let z: f64 = rng.sample(StandardNormal);
    Vec3::new(x, y, z)
}

impl GustProcess {
    /// Starts the process in its stationary distribution.
    pub fn stationary<R: Rng + ?Sized>(cfg: &GustConfig, rng: &mut R) -> Self {
        Self {
            fluctuation: normals(rng).component_mul(&axis_sigma(cfg)),
        }
    }

    pub fn wind(&self, cfg: &GustConfig) -> Vec3 {
        Vec3::from(cfg.mean_wind) + self.fluctuation
    }
}

/// Advances the process by `dt` and returns the total wind velocity.
pub fn gust_velocity<R: Rng + ?Sized>(
    process: &mut GustProcess,
    cfg: &GustConfig,
    dt: f64,
    rng: &mut R,
) -> Vec3 {
    let phi = (-dt / cfg.tau).exp();
    let drive = (1.0 - phi * phi).sqrt();
    let eta = normals(rng).component_mul(&axis_sigma(cfg)) * drive;
    process.fluctuation = process.fluctuation * phi + eta;
    process.wind(cfg)
}
