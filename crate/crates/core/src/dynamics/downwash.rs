//! Rotor downwash as a steady axisymmetric jet below the chaser.

use super::DownwashConfig;
use crate::Vec3;

/// Air velocity induced at `point` by a rotor disc centred at `rotor`.
///
/// Downward speed is `peak · exp(−r²/2ρ²) · exp(−depth/λ)`; above the rotor
/// plane the air is still. The jet also spreads outward horizontally in
/// proportion to `r/ρ`.
pub fn downwash_velocity(point: &Vec3, rotor: &Vec3, cfg: &DownwashConfig) -> Vec3 {
    if !cfg.enabled {
        return Vec3::zeros();
    }
    let depth = rotor.z - point.z;
    if depth < 0.0 {
        return Vec3::zeros();
    }
    let radial = Vec3::new(point.x - rotor.x, point.y - rotor.y, 0.0);
    let r = radial.norm();
    let rho = cfg.core_radius;
    let w =
        cfg.peak_velocity * (-r * r / (2.0 * rho * rho)).exp() * (-depth / cfg.decay_depth).exp();
    let mut v = Vec3::new(0.0, 0.0, -w);
    if r > 0.0 {
        v += radial * (cfg.radial_spread * w / rho);
    }
    v
}
