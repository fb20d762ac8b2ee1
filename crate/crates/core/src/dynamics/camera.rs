//! Eye-in-hand camera: an ideal cone of view with additive position noise.

use nalgebra::Rotation3;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::geometry::EngagementGeometry;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub time: f64,
    /// Ball position as the vision stack reports it, in the EE frame [m].
    pub position: Vec3,
    pub range: f64,
    /// Bearing in the camera frame, positive left [rad].
    pub azimuth: f64,
    /// Bearing in the camera frame, positive up [rad].
    pub elevation: f64,
}

/// Measures a ball at EE-frame position `ball`. Noise is drawn whether or not
/// the ball is visible, so the stream does not depend on visibility.
pub fn camera_measurement<R: Rng + ?Sized>(
    time: f64,
    ball: &Vec3,
    visible: bool,
    geom: &EngagementGeometry,
    noise_std: f64,
    rng: &mut R,
) -> Option<Measurement> {
    let nx: f64 = rng.sample(StandardNormal);
    let ny: f64 = rng.sample(StandardNormal);
    let nz: f64 = rng.sample(StandardNormal);
    if !visible || !geom.camera_sees(ball) {
        return None;
    }
    let truth = ball - geom.camera_position;
    // a rolled camera reports its own axes as if they were the EE axes
    let seen = Rotation3::from_axis_angle(&Vec3::x_axis(), -geom.camera_roll) * truth;
    let noisy = seen + Vec3::new(nx, ny, nz) * noise_std;
    Some(Measurement {
        time,
        position: geom.camera_position + noisy,
        range: noisy.norm(),
        azimuth: noisy.y.atan2(noisy.x),
        elevation: noisy.z.atan2(noisy.x.hypot(noisy.y)),
    })
}
