//! # Encounter dynamics
//!
//! Fixed-step simulation of a capture encounter:
//!
//! - the carrier drone flies a prescribed path ([`carrier`]);
//! - the ball hangs from it on a rigid rod as a spherical pendulum with a
//!   moving pivot ([`pendulum`]), pushed around by gusts ([`gust`]) and by the
//!   chaser's rotor downwash ([`downwash`]);
//! - the chaser is a kinematic point with acceleration and speed limits,
//!   carrying the basket on a side arm ([`geometry`]), an eye-in-hand camera
//!   ([`camera`]) and a pursuit law ([`guidance`]);
//! - the basket hull pulls the ball off its magnet ([`detachment`]) and the
//!   loose ball either falls onto the detector plate or escapes.
//!
//! [`world::step_world`] composes these in a fixed order; see its docs.

pub mod camera;
pub mod carrier;
pub mod detachment;
pub mod downwash;
pub mod geometry;
pub mod guidance;
pub mod gust;
pub mod pendulum;
pub mod trace;
pub mod world;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use carrier::{carrier_state, CarrierPath, CarrierState, PathSegment};
pub use geometry::{capture_check, CaptureCheck, EngagementGeometry};
pub use world::{
    step_world, AttachmentStatus, Controls, InitialConditions, Scene, StepReport, WorldEvent,
    WorldState,
};

/// Largest timestep the integrators are run at [s].
pub const MAX_TIMESTEP: f64 = 0.02;

/// Angular rate beyond which the pendulum is considered blown up [rad/s].
pub const DIVERGENCE_RATE: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("simulation diverged at t = {time:.4} s: {what}")]
    Diverged { time: f64, what: String },
    #[error("time {time} s is outside the carrier path (0..={duration} s)")]
    TimeOutOfRange { time: f64, duration: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GustConfig {
    /// Steady wind [m/s].
    pub mean_wind: [f64; 3],
    /// Stationary standard deviation of the horizontal gust components [m/s].
    pub sigma: f64,
    /// Correlation time [s].
    pub tau: f64,
    /// Vertical gust std as a fraction of `sigma`.
    pub vertical_ratio: f64,
}

impl Default for GustConfig {
    fn default() -> Self {
        Self {
            mean_wind: [0.0; 3],
            sigma: 0.0,
            tau: 1.0,
            vertical_ratio: 0.5,
        }
    }
}

/// Axisymmetric rotor jet under the chaser.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DownwashConfig {
    pub enabled: bool,
    /// On-axis velocity just below the rotor plane [m/s].
    pub peak_velocity: f64,
    /// Gaussian radius of the jet profile [m].
    pub core_radius: f64,
    /// e-folding depth of the axial decay [m].
    pub decay_depth: f64,
    /// Outward radial velocity per unit downward velocity at r = core_radius.
    pub radial_spread: f64,
    /// Per-axis rms of the wake fluctuation as a fraction of the local jet speed.
    pub turbulence: f64,
    /// Correlation time of the wake fluctuation [s].
    pub turbulence_tau: f64,
}

impl DownwashConfig {
    /// Unit-variance process whose samples are scaled by the local jet speed.
    pub fn wake_process(&self) -> GustConfig {
        GustConfig {
            mean_wind: [0.0; 3],
            sigma: 1.0,
            tau: self.turbulence_tau,
            vertical_ratio: 1.0,
        }
    }
}

impl Default for DownwashConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            peak_velocity: 10.0,
            core_radius: 0.35,
            decay_depth: 2.0,
            radial_spread: 0.5,
            turbulence: 1.5,
            turbulence_tau: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChaserConfig {
    pub max_speed: f64,
    pub max_accel: f64,
    pub max_yaw_rate: f64,
    /// Gust-to-acceleration coupling of the position-controlled airframe [1/s].
    pub gust_coupling: f64,
    /// Basket top plane below the rotor plane [m].
    pub mount_drop: f64,
    /// Initial distance from the capture rectangle to the ball, along the
    /// approach heading [m].
    pub standoff: f64,
    /// Approach heading [rad]; when absent the carrier's initial heading is used
    /// (or 0 for a hovering carrier).
    pub approach_heading: Option<f64>,
}

impl Default for ChaserConfig {
    fn default() -> Self {
        Self {
            max_speed: 10.0,
            max_accel: 4.0,
            max_yaw_rate: 0.6,
            gust_coupling: 0.35,
            mount_drop: 0.3,
            standoff: 3.0,
            approach_heading: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuidanceConfig {
    /// Position gain [1/s²].
    pub k_p: f64,
    /// Velocity gain [1/s].
    pub k_d: f64,
    /// Hold-off distance between capture plane and ball during approach [m].
    pub approach_gap: f64,
    /// Closing speed through the ball during engagement [m/s].
    pub engage_speed: f64,
    /// Measurement history for the ball position and velocity fit [s].
    pub lookback: f64,
    /// Measurement history for the ball acceleration fit [s]; 0 disables
    /// acceleration feedforward.
    pub accel_lookback: f64,
    /// Speed cap while transporting to the drop box [m/s].
    pub transport_speed: f64,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        Self {
            k_p: 2.0,
            k_d: 2.8,
            approach_gap: 0.5,
            engage_speed: 1.0,
            lookback: 0.3,
            accel_lookback: 1.0,
            transport_speed: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    /// Additive position noise, per axis [m]; also stands in for arm vibration.
    pub noise_std: f64,
    pub rate_hz: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            noise_std: 0.01,
            rate_hz: 30.0,
        }
    }
}

/// Everything about an encounter except the manipulator and the ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncounterConfig {
    pub carrier: CarrierPath,
    /// Rod length from carrier attachment to ball centre [m].
    pub rod_length: f64,
    /// Viscous damping of the pendulum [1/s].
    pub pendulum_damping: f64,
    /// Fraction of the axial detachment force needed for a pure shear pull.
    pub peel_factor: f64,
    /// Quadratic drag constant ½ρC_dA of the ball [kg/m]; 0 disables drag.
    pub ball_drag: f64,
    pub gust: GustConfig,
    pub downwash: DownwashConfig,
    pub chaser: ChaserConfig,
    pub guidance: GuidanceConfig,
    pub camera: CameraConfig,
    /// Whether the camera mount is pre-tilted against the arm tip slope.
    pub sag_compensated: bool,
    pub timestep: f64,
    pub duration: f64,
}

/// Drag constant giving a 0.06 kg ball a 9 m/s terminal velocity.
pub const DEFAULT_BALL_DRAG: f64 = 0.060 * crate::GRAVITY / 81.0;

impl Default for EncounterConfig {
    fn default() -> Self {
        Self {
            carrier: CarrierPath::default(),
            rod_length: 1.0,
            pendulum_damping: 0.05,
            peel_factor: 0.5,
            ball_drag: DEFAULT_BALL_DRAG,
            gust: GustConfig::default(),
            downwash: DownwashConfig::default(),
            chaser: ChaserConfig::default(),
            guidance: GuidanceConfig::default(),
            camera: CameraConfig::default(),
            sag_compensated: true,
            timestep: 0.002,
            duration: 90.0,
        }
    }
}
