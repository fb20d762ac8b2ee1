//! Prescribed carrier drone trajectories built from hover, straight and arc
//! segments. Heading is continuous across segment boundaries; speed is not.

use serde::{Deserialize, Serialize};

use super::DynamicsError;
use crate::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathSegment {
    Hover {
        duration: f64,
    },
    /// Constant velocity along `heading` (rad from +x, counter-clockwise).
    Straight {
        heading: f64,
        speed: f64,
        duration: f64,
    },
    /// Constant-speed turn; positive `angular_rate` turns left.
    Arc {
        radius: f64,
        angular_rate: f64,
        duration: f64,
    },
}

impl PathSegment {
    pub fn duration(&self) -> f64 {
        match *self {
            PathSegment::Hover { duration }
            | PathSegment::Straight { duration, .. }
            | PathSegment::Arc { duration, .. } => duration,
        }
    }

    pub fn speed(&self) -> f64 {
        match *self {
            PathSegment::Hover { .. } => 0.0,
            PathSegment::Straight { speed, .. } => speed,
            PathSegment::Arc {
                radius,
                angular_rate,
                ..
            } => angular_rate.abs() * radius,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarrierPath {
    /// Ball attachment point at t = 0 [m].
    pub start: [f64; 3],
    /// Heading at t = 0, used by hover and arc segments until a straight
    /// segment sets one [rad].
    pub initial_heading: f64,
    pub segments: Vec<PathSegment>,
}

impl Default for CarrierPath {
    fn default() -> Self {
        Self {
            start: [0.0, 0.0, 12.0],
            initial_heading: 0.0,
            segments: vec![PathSegment::Hover { duration: 600.0 }],
        }
    }
}

impl CarrierPath {
    pub fn duration(&self) -> f64 {
        self.segments.iter().map(PathSegment::duration).sum()
    }

    pub fn max_speed(&self) -> f64 {
        self.segments
            .iter()
            .map(PathSegment::speed)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CarrierState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
    pub heading: f64,
}

fn planar(heading: f64) -> Vec3 {
    Vec3::new(heading.cos(), heading.sin(), 0.0)
}

/// State of the attachment point at time `t`.
pub fn carrier_state(path: &CarrierPath, t: f64) -> Result<CarrierState, DynamicsError> {
    let total = path.duration();
    if !(0.0..=total).contains(&t) {
        return Err(DynamicsError::TimeOutOfRange {
            time: t,
            duration: total,
        });
    }
    let mut origin = Vec3::from(path.start);
    let mut heading = path.initial_heading;
    let mut t0 = 0.0;
    let last = path.segments.len().saturating_sub(1);
    for (k, seg) in path.segments.iter().enumerate() {
        let dur = seg.duration();
        let local = (t - t0).min(dur);
        let inside = t <= t0 + dur || k == last;
        let state = segment_state(seg, origin, heading, local);
        if inside {
            return Ok(state);
        }
        let end = segment_state(seg, origin, heading, dur);
        origin = end.position;
        heading = end.heading;
        t0 += dur;
    }
    // empty path: stationary at start
    Ok(CarrierState {
        position: origin,
        heading,
        ..Default::default()
    })
}

fn segment_state(seg: &PathSegment, origin: Vec3, heading: f64, s: f64) -> CarrierState {
    match *seg {
        PathSegment::Hover { .. } => CarrierState {
            position: origin,
            velocity: Vec3::zeros(),
            acceleration: Vec3::zeros(),
            heading,
        },
        PathSegment::Straight {
            heading: h, speed, ..
        } => CarrierState {
            position: origin + planar(h) * speed * s,
            velocity: planar(h) * speed,
            acceleration: Vec3::zeros(),
            heading: h,
        },
        PathSegment::Arc {
            radius,
            angular_rate: w,
            ..
        } => {
            let v = w.abs() * radius;
            let psi = heading + w * s;
            // ∫ v (cos ψ, sin ψ) ds with ψ = ψ0 + ωs
            let k = v / w;
            let position = origin
                + Vec3::new(
                    k * (psi.sin() - heading.sin()),
                    -k * (psi.cos() - heading.cos()),
                    0.0,
                );
            CarrierState {
                position,
                velocity: planar(psi) * v,
                acceleration: Vec3::new(-psi.sin(), psi.cos(), 0.0) * (v * w),
                heading: psi,
            }
        }
    }
}
