//! End-effector geometry on the chaser.
//!
//! Body frame: x forward (yaw heading), y left, z up. The arm extends along
//! +y and the end-effector (EE) frame is the body frame translated to the
//! centre of the basket top plane. The capture rectangle stands in the EE
//! y–z plane facing forward; the basket hangs below the top plane as a
//! frustum narrowing to the detector ring.

use nalgebra::Rotation3;
use serde::{Deserialize, Serialize};

use crate::design::{ManipulatorDesign, TargetSpec};
use crate::Vec3;

/// Balls further than this from the basket are written off [m].
pub const ESCAPE_DISTANCE: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngagementGeometry {
    /// Basket top centre in the body frame [m].
    pub ee_origin: Vec3,
    /// Capture rectangle centre in the EE frame [m].
    pub capture_centre: Vec3,
    pub capture_width: f64,
    pub capture_height: f64,
    pub top_radius: f64,
    pub ring_radius: f64,
    pub frustum_height: f64,
    pub ball_radius: f64,
    /// Camera position in the EE frame [m].
    pub camera_position: Vec3,
    pub camera_half_angle: f64,
    /// Uncorrected roll of the camera about its optical axis [rad].
    pub camera_roll: f64,
}

impl EngagementGeometry {
    pub fn new(
        design: &ManipulatorDesign,
        target: &TargetSpec,
        mount_drop: f64,
        sag_compensated: bool,
    ) -> Self {
        let sag = design.arm_sag();
        let h_c = design.camera_drop;
        Self {
            ee_origin: Vec3::new(0.0, design.arm_extension, -mount_drop - sag),
            capture_centre: Vec3::new(0.0, 0.0, -h_c),
            capture_width: design.capture_width,
            capture_height: design.capture_height,
            top_radius: 0.5 * design.basket_top_diameter,
            ring_radius: 0.5 * design.basket_ring_diameter,
            frustum_height: design.frustum_height,
            ball_radius: target.radius(),
            camera_position: Vec3::new(-design.camera_planar_depth, 0.0, -h_c),
            camera_half_angle: design.camera_fov_half_angle,
            camera_roll: if sag_compensated {
                0.0
            } else {
                design.arm_tip_slope()
            },
        }
    }

    pub fn rotation(yaw: f64) -> Rotation3<f64> {
        Rotation3::from_axis_angle(&Vec3::z_axis(), yaw)
    }

    pub fn forward(yaw: f64) -> Vec3 {
        Vec3::new(yaw.cos(), yaw.sin(), 0.0)
    }

    pub fn ee_to_world(&self, p: &Vec3, chaser: &Vec3, yaw: f64) -> Vec3 {
        chaser + Self::rotation(yaw) * (self.ee_origin + p)
    }

    pub fn world_to_ee(&self, p: &Vec3, chaser: &Vec3, yaw: f64) -> Vec3 {
        Self::rotation(yaw).inverse() * (p - chaser) - self.ee_origin
    }

    /// Velocity of an EE-fixed point given chaser velocity and yaw rate.
    pub fn ee_point_velocity(
        &self,
        p: &Vec3,
        chaser_velocity: &Vec3,
        yaw: f64,
        yaw_rate: f64,
    ) -> Vec3 {
        let r = Self::rotation(yaw) * (self.ee_origin + p);
        chaser_velocity + Vec3::new(0.0, 0.0, yaw_rate).cross(&r)
    }

    /// Frustum interior radius at `depth` below the top plane.
    pub fn frustum_radius(&self, depth: f64) -> f64 {
        let d = depth.clamp(0.0, self.frustum_height);
        self.top_radius - (self.top_radius - self.ring_radius) * d / self.frustum_height
    }

    /// Depth of the ball centre when resting on the detector plate.
    pub fn rest_depth(&self) -> f64 {
        self.frustum_height - self.ball_radius
    }

    pub fn in_capture_rectangle(&self, p: &Vec3) -> bool {
        (p.y - self.capture_centre.y).abs() <= 0.5 * self.capture_width
            && (p.z - self.capture_centre.z).abs() <= 0.5 * self.capture_height
    }

    pub fn camera_sees(&self, p: &Vec3) -> bool {
        let c = p - self.camera_position;
        let n = c.norm();
        n > 0.0 && c.x > 0.0 && c.x / n >= self.camera_half_angle.cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CaptureCheck {
    /// Still falling inside or above the basket.
    Pending,
    /// Resting on the plate at this EE-frame position.
    Captured {
        rest: Vec3,
    },
    Lost,
}

/// Containment test for a free ball at EE-frame position `ball`.
pub fn capture_check(ball: &Vec3, geom: &EngagementGeometry) -> CaptureCheck {
    if ball.norm() > ESCAPE_DISTANCE {
        return CaptureCheck::Lost;
    }
    let depth = -ball.z;
    if depth < 0.0 {
        return CaptureCheck::Pending;
    }
    let radial = ball.x.hypot(ball.y);
    if radial > geom.frustum_radius(depth) {
        return CaptureCheck::Lost;
    }
    if depth < geom.rest_depth() {
        return CaptureCheck::Pending;
    }
    if geom.ring_radius < geom.ball_radius {
        return CaptureCheck::Lost;
    }
    let mut xy = Vec3::new(ball.x, ball.y, 0.0);
    if radial > geom.ring_radius {
        xy *= geom.ring_radius / radial;
    }
    CaptureCheck::Captured {
        rest: Vec3::new(xy.x, xy.y, -geom.rest_depth()),
    }
}
