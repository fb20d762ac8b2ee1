//! # capture-core
//!
//! Design analysis and encounter simulation for a drone-mounted passive
//! capture manipulator: a mesh basket on a side-extending arm that pulls a
//! magnetically attached ball off a carrier drone and later drops it into a box.
//!
//! ## Modules
//!
//! - [`design`]: closed-form sizing (grab volume, camera placement, impact
//!   work, arm sag and moment) and requirement checks.
//! - [`dynamics`]: fixed-step encounter simulation (carrier path, slung ball,
//!   gusts, downwash, detachment, capture, camera, guidance).
//! - [`mission`]: capture/deposit state machine and the grab detector.
//! - [`experiments`]: Monte Carlo batches, parameter sweeps, scenario library.
//! - [`config`]: the JSON configuration document tying the sections together.

pub mod config;
pub mod design;
pub mod dynamics;
pub mod experiments;
pub mod mission;
pub mod rng;
pub mod stats;

/// 3D vector type, world frame is east-north-up.
pub type Vec3 = nalgebra::Vector3<f64>;

/// Gravitational acceleration [m/s²].
pub const GRAVITY: f64 = 9.81;

pub use config::{Config, ConfigError};
pub use design::{DesignReport, ManipulatorDesign, RequirementSet, TargetSpec};
pub use experiments::{BatchResult, FailureCause, TrialOutcome};
