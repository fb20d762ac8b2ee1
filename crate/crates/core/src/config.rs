//! The JSON configuration document.
//!
//! ```json
//! {
//!   "design":       { ... },   // required
//!   "target":       { ... },   // required
//!   "requirements": { ... },
//!   "encounter":    { ... },
//!   "mission":      { ... },
//!   "experiments":  { ... }
//! }
//! ```
//!
//! All units are SI. Unknown keys are rejected at every level, and errors
//! carry the JSON pointer of the offending field.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::design::{DesignError, ManipulatorDesign, RequirementSet, TargetSpec};
use crate::dynamics::{EncounterConfig, MAX_TIMESTEP};
use crate::mission::MissionConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

impl ConfigError {
    /// JSON pointer of the offending field, when there is one.
    pub fn path(&self) -> Option<&str> {
        match self {
            ConfigError::Io { .. } => None,
            ConfigError::Parse { path, .. } | ConfigError::Invalid { path, .. } => Some(path),
        }
    }

    fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl From<DesignError> for ConfigError {
    fn from(e: DesignError) -> Self {
        ConfigError::invalid(e.field(), e.to_string())
    }
}

/// Monte Carlo uncertainty and batch defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Initial sway is uniform in [0, max] around the steady rod direction [rad].
    pub max_sway_angle: f64,
    /// Per-axis std of the chaser's starting position error [m].
    pub chaser_offset_std: f64,
    pub trials: u64,
    pub seed: u64,
    /// Where the uncertainty magnitudes come from.
    pub provenance: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            max_sway_angle: 10f64.to_radians(),
            chaser_offset_std: 0.3,
            trials: 100,
            seed: 1,
            provenance: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub design: ManipulatorDesign,
    pub target: TargetSpec,
    #[serde(default)]
    pub requirements: RequirementSet,
    #[serde(default)]
    pub encounter: EncounterConfig,
    #[serde(default)]
    pub mission: MissionConfig,
    #[serde(default)]
    pub experiments: ExperimentConfig,
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(key),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

/// Name inside backticks of serde's "missing field `x`" and "unknown field `x`".
fn quoted_field(message: &str, prefix: &str) -> Option<String> {
    let rest = message.strip_prefix(prefix)?;
    let end = rest.find('`')?;
    Some(rest[..end].to_string())
}

fn positive(path: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::invalid(
            path,
            format!("must be positive, got {v}"),
        ))
    }
}

fn non_negative(path: &str, v: f64) -> Result<(), ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::invalid(
            path,
            format!("must be non-negative, got {v}"),
        ))
    }
}

impl Config {
    /// The bundled design with default encounter, mission and experiments.
    pub fn reference() -> Self {
        Self {
            design: ManipulatorDesign::reference(),
            target: TargetSpec::reference(),
            requirements: RequirementSet::default(),
            encounter: EncounterConfig::default(),
            mission: MissionConfig::default(),
            experiments: ExperimentConfig::default(),
        }
    }

    /// Parses without validating.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let mut path = pointer_of(e.path());
            let message = e.inner().to_string();
            if let Some(field) = quoted_field(&message, "missing field `") {
                path = format!("{path}/{field}");
            }
            if path.is_empty() {
                path = "/".into();
            }
            ConfigError::Parse { path, message }
        })
    }

    /// Parses and validates.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let c = Self::parse(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let p = path.as_ref();
        let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
            path: p.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }

    /// Hex SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).unwrap_or_default();
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Checks every section. Design-level limits (envelope, deflection,
    /// moment) are verdicts of the design report, not validity errors.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.requirements.validate()?;
        self.design.validate(self.requirements.min_arm_extension)?;
        self.target.validate()?;
        self.validate_encounter()?;
        self.validate_mission()?;
        let x = &self.experiments;
        non_negative("/experiments/max_sway_angle", x.max_sway_angle)?;
        non_negative("/experiments/chaser_offset_std", x.chaser_offset_std)?;
        if x.trials == 0 {
            return Err(ConfigError::invalid(
                "/experiments/trials",
                "must be at least 1",
            ));
        }
        Ok(())
    }

    fn validate_encounter(&self) -> Result<(), ConfigError> {
        let e = &self.encounter;
        if !(e.timestep > 0.0 && e.timestep <= MAX_TIMESTEP) {
            return Err(ConfigError::invalid(
                "/encounter/timestep",
                format!("must be in (0, {MAX_TIMESTEP}] s, got {}", e.timestep),
            ));
        }
        positive("/encounter/duration", e.duration)?;
        positive("/encounter/rod_length", e.rod_length)?;
        non_negative("/encounter/pendulum_damping", e.pendulum_damping)?;
        if !(e.peel_factor > 0.0 && e.peel_factor <= 1.0) {
            return Err(ConfigError::invalid(
                "/encounter/peel_factor",
                format!("must be in (0, 1], got {}", e.peel_factor),
            ));
        }
        non_negative("/encounter/ball_drag", e.ball_drag)?;

        let path = &e.carrier;
        for (i, seg) in path.segments.iter().enumerate() {
            positive(
                &format!("/encounter/carrier/segments/{i}/duration"),
                seg.duration(),
            )?;
            if let crate::dynamics::PathSegment::Arc { radius, .. } = seg {
                positive(&format!("/encounter/carrier/segments/{i}/radius"), *radius)?;
            }
            let speed = seg.speed();
            if !(speed >= 0.0 && speed <= self.target.max_carrier_speed) {
                return Err(ConfigError::invalid(
                    format!("/encounter/carrier/segments/{i}"),
                    format!(
                        "segment speed {speed} m/s exceeds the target's max carrier speed {} m/s",
                        self.target.max_carrier_speed
                    ),
                ));
            }
        }
        if path.duration() < e.duration {
            return Err(ConfigError::invalid(
                "/encounter/carrier/segments",
                format!(
                    "path lasts {} s, shorter than the encounter duration {} s",
                    path.duration(),
                    e.duration
                ),
            ));
        }

        non_negative("/encounter/gust/sigma", e.gust.sigma)?;
        positive("/encounter/gust/tau", e.gust.tau)?;
        non_negative("/encounter/gust/vertical_ratio", e.gust.vertical_ratio)?;
        non_negative(
            "/encounter/downwash/peak_velocity",
            e.downwash.peak_velocity,
        )?;
        positive("/encounter/downwash/core_radius", e.downwash.core_radius)?;
        positive("/encounter/downwash/decay_depth", e.downwash.decay_depth)?;
        non_negative(
            "/encounter/downwash/radial_spread",
            e.downwash.radial_spread,
        )?;
        non_negative("/encounter/downwash/turbulence", e.downwash.turbulence)?;
        positive(
            "/encounter/downwash/turbulence_tau",
            e.downwash.turbulence_tau,
        )?;

        let c = &e.chaser;
        positive("/encounter/chaser/max_speed", c.max_speed)?;
        positive("/encounter/chaser/max_accel", c.max_accel)?;
        positive("/encounter/chaser/max_yaw_rate", c.max_yaw_rate)?;
        non_negative("/encounter/chaser/gust_coupling", c.gust_coupling)?;
        non_negative("/encounter/chaser/mount_drop", c.mount_drop)?;
        positive("/encounter/chaser/standoff", c.standoff)?;

        let g = &e.guidance;
        positive("/encounter/guidance/k_p", g.k_p)?;
        positive("/encounter/guidance/k_d", g.k_d)?;
        non_negative("/encounter/guidance/approach_gap", g.approach_gap)?;
        non_negative("/encounter/guidance/engage_speed", g.engage_speed)?;
        positive("/encounter/guidance/lookback", g.lookback)?;
        non_negative("/encounter/guidance/accel_lookback", g.accel_lookback)?;
        positive("/encounter/guidance/transport_speed", g.transport_speed)?;

        positive("/encounter/camera/rate_hz", e.camera.rate_hz)?;
        non_negative("/encounter/camera/noise_std", e.camera.noise_std)?;
        Ok(())
    }

    fn validate_mission(&self) -> Result<(), ConfigError> {
        let m = &self.mission;
        non_negative("/mission/debounce", m.debounce)?;
        non_negative("/mission/contact_radius", m.contact_radius)?;
        positive("/mission/align_tolerance", m.align_tolerance)?;
        positive("/mission/range_tolerance", m.range_tolerance)?;
        positive("/mission/closing_tolerance", m.closing_tolerance)?;
        positive("/mission/hover_tolerance", m.hover_tolerance)?;
        positive("/mission/hover_speed", m.hover_speed)?;
        positive("/mission/drop_height", m.drop_height)?;
        positive("/mission/drop_box/opening/0", m.drop_box.opening[0])?;
        positive("/mission/drop_box/opening/1", m.drop_box.opening[1])?;
        let t = &m.timeouts;
        for (name, v) in [
            ("search", t.search),
            ("approach", t.approach),
            ("engage", t.engage),
            ("confirm", t.confirm),
            ("transport", t.transport),
            ("drop", t.drop),
        ] {
            positive(&format!("/mission/timeouts/{name}"), v)?;
        }
        Ok(())
    }

    /// Checks that `pointer` addresses a numeric field.
    pub fn check_numeric_path(&self, pointer: &str) -> Result<(), ConfigError> {
        let v = serde_json::to_value(self).map_err(|e| ConfigError::invalid("/", e.to_string()))?;
        match v.pointer(pointer) {
            Some(Value::Number(_)) => Ok(()),
            Some(other) => Err(ConfigError::invalid(
                pointer,
                format!("not a numeric field (found {})", kind_of(other)),
            )),
            None => Err(ConfigError::invalid(pointer, "no such field")),
        }
    }

    /// Copy with the numeric field at `pointer` replaced, revalidated.
    pub fn with_value(&self, pointer: &str, value: f64) -> Result<Self, ConfigError> {
        self.check_numeric_path(pointer)?;
        let mut v =
            serde_json::to_value(self).map_err(|e| ConfigError::invalid("/", e.to_string()))?;
        let slot = v
            .pointer_mut(pointer)
            .ok_or_else(|| ConfigError::invalid(pointer, "no such field"))?;
        *slot = if slot.is_u64() || slot.is_i64() {
            if value.fract() != 0.0 || value < 0.0 {
                return Err(ConfigError::invalid(
                    pointer,
                    format!("integer field cannot take {value}"),
                ));
            }
            Value::from(value as u64)
        } else {
            serde_json::Number::from_f64(value)
                .map(Value::Number)
                .ok_or_else(|| ConfigError::invalid(pointer, format!("{value} is not finite")))?
        };
        let text = v.to_string();
        let c = Self::parse(&text)?;
        c.validate()?;
        Ok(c)
    }
}

fn kind_of(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}
