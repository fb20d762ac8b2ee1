//! # Manipulator sizing
//!
//! Closed-form structural and geometric calculations for the passive basket
//! end-effector and its extension arm, plus a requirement checker that turns
//! them into a [`DesignReport`].
//!
//! All quantities are SI. Every function validates its own preconditions and
//! reports the offending argument by name.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::GRAVITY;

/// Grab volume of the as-built basket measured on the CAD model [m³].
///
/// Carried for reference only; the mesh was reshaped during manufacturing so
/// it is not derivable from the frustum dimensions.
pub const CAD_GRAB_VOLUME: f64 = 52.08e-3;

/// Impact strength of birch plywood [J/m²].
pub const BIRCH_IMPACT_STRENGTH: f64 = 92.9e3;

/// Default magnet separation travel [m].
pub const DEFAULT_DETACHMENT_DISTANCE: f64 = 0.015;

/// Default minimum arm extension keeping the basket clear of the propellers [m].
pub const DEFAULT_MIN_ARM_EXTENSION: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DesignError {
    #[error("{field} must be strictly positive (got {value})")]
    NonPositive { field: &'static str, value: f64 },
    #[error("{field} must be non-negative (got {value})")]
    Negative { field: &'static str, value: f64 },
    #[error("{field} = {value} is outside {range}")]
    OutOfRange {
        field: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("{field} = {value} must not exceed {bound_field} = {bound}")]
    Exceeds {
        field: &'static str,
        value: f64,
        bound_field: &'static str,
        bound: f64,
    },
    #[error("{field} = {value} m is below the propeller-clearance minimum {min} m")]
    ArmTooShort {
        field: &'static str,
        value: f64,
        min: f64,
    },
}

impl DesignError {
    /// Name (or JSON pointer) of the offending input.
    pub fn field(&self) -> &'static str {
        match self {
            DesignError::NonPositive { field, .. }
            | DesignError::Negative { field, .. }
            | DesignError::OutOfRange { field, .. }
            | DesignError::Exceeds { field, .. }
            | DesignError::ArmTooShort { field, .. } => field,
        }
    }
}

fn positive(field: &'static str, value: f64) -> Result<f64, DesignError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(DesignError::NonPositive { field, value })
    }
}

fn non_negative(field: &'static str, value: f64) -> Result<f64, DesignError> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(DesignError::Negative { field, value })
    }
}

/// Geometric, material and mass description of the basket, arm and camera mount.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManipulatorDesign {
    /// Frustum top diameter d1 [m].
    pub basket_top_diameter: f64,
    /// Detector ring diameter d2 [m].
    pub basket_ring_diameter: f64,
    /// Frustum height h1 [m].
    pub frustum_height: f64,
    /// Height of the removed cone apex h2 [m]; documentation only.
    pub truncated_height: f64,
    /// Engagement rectangle width [m].
    pub capture_width: f64,
    /// Engagement rectangle height [m].
    pub capture_height: f64,
    /// Camera depth below the basket top plane h_c [m].
    pub camera_drop: f64,
    /// Camera field-of-view half-angle θ [rad].
    pub camera_fov_half_angle: f64,
    /// Camera planar depth h [m], distance from the camera to the capture plane.
    pub camera_planar_depth: f64,
    /// Arm extension d [m].
    pub arm_extension: f64,
    /// Arm modulus of elasticity E [Pa].
    pub arm_youngs_modulus: f64,
    /// Arm second moment of area I [m⁴].
    pub arm_second_moment: f64,
    /// End-loaded mass: end-effector plus accessories [kg].
    pub end_mass: f64,
    /// Cross-section of the detaching hull opposing the impact A [m²].
    pub hull_cross_section_area: f64,
    /// Impact strength of the hull material [J/m²].
    pub material_impact_strength: f64,
    /// Stowed (arm retracted) envelope: length, width, height [m].
    pub stowed_envelope: [f64; 3],
}

impl ManipulatorDesign {
    /// The final prototype: Table-style dimensions of the truncated cone,
    /// birch hull, CF square tube arm at 1.1 m.
    pub fn reference() -> Self {
        Self {
            basket_top_diameter: 0.51,
            basket_ring_diameter: 0.175,
            frustum_height: 0.35,
            truncated_height: 0.1828,
            capture_width: 0.51,
            capture_height: 0.175,
            camera_drop: 0.15,
            camera_fov_half_angle: 35f64.to_radians(),
            camera_planar_depth: 0.255,
            arm_extension: 1.1,
            arm_youngs_modulus: 90e9,
            arm_second_moment: 2744e-12,
            end_mass: 1.4,
            hull_cross_section_area: 0.006 * 0.008,
            material_impact_strength: BIRCH_IMPACT_STRENGTH,
            stowed_envelope: [1.2, 1.1, 0.5],
        }
    }

    /// Checks every field invariant, reporting the JSON pointer of the first
    /// violation.
    pub fn validate(&self, min_arm_extension: f64) -> Result<(), DesignError> {
        positive("/design/basket_top_diameter", self.basket_top_diameter)?;
        positive("/design/basket_ring_diameter", self.basket_ring_diameter)?;
        positive("/design/frustum_height", self.frustum_height)?;
        positive("/design/truncated_height", self.truncated_height)?;
        positive("/design/capture_width", self.capture_width)?;
        positive("/design/capture_height", self.capture_height)?;
        positive("/design/camera_drop", self.camera_drop)?;
        positive("/design/camera_planar_depth", self.camera_planar_depth)?;
        positive("/design/arm_extension", self.arm_extension)?;
        positive("/design/arm_youngs_modulus", self.arm_youngs_modulus)?;
        positive("/design/arm_second_moment", self.arm_second_moment)?;
        positive("/design/end_mass", self.end_mass)?;
        positive(
            "/design/hull_cross_section_area",
            self.hull_cross_section_area,
        )?;
        positive(
            "/design/material_impact_strength",
            self.material_impact_strength,
        )?;
        for (field, v) in [
            "/design/stowed_envelope/0",
            "/design/stowed_envelope/1",
            "/design/stowed_envelope/2",
        ]
        .into_iter()
        .zip(self.stowed_envelope)
        {
            positive(field, v)?;
        }
        if self.basket_ring_diameter >= self.basket_top_diameter {
            return Err(DesignError::Exceeds {
                field: "/design/basket_ring_diameter",
                value: self.basket_ring_diameter,
                bound_field: "/design/basket_top_diameter",
                bound: self.basket_top_diameter,
            });
        }
        if self.truncated_height >= self.frustum_height {
            return Err(DesignError::Exceeds {
                field: "/design/truncated_height",
                value: self.truncated_height,
                bound_field: "/design/frustum_height",
                bound: self.frustum_height,
            });
        }
        if !(self.camera_fov_half_angle > 0.0 && self.camera_fov_half_angle < FRAC_PI_2) {
            return Err(DesignError::OutOfRange {
                field: "/design/camera_fov_half_angle",
                value: self.camera_fov_half_angle,
                range: "(0, π/2)",
            });
        }
        if self.arm_extension < min_arm_extension {
            return Err(DesignError::ArmTooShort {
                field: "/design/arm_extension",
                value: self.arm_extension,
                min: min_arm_extension,
            });
        }
        Ok(())
    }

    /// Static tip deflection of the arm under the end load [m].
    pub fn arm_sag(&self) -> f64 {
        cantilever_deflection(
            self.end_mass * GRAVITY,
            self.arm_extension,
            self.arm_youngs_modulus,
            self.arm_second_moment,
        )
        .unwrap_or(0.0)
    }

    /// Tip slope of the arm under the end load [rad].
    pub fn arm_tip_slope(&self) -> f64 {
        let f = self.end_mass * GRAVITY;
        let d = self.arm_extension;
        f * d * d / (2.0 * self.arm_youngs_modulus * self.arm_second_moment)
    }
}

fn default_detachment_distance() -> f64 {
    DEFAULT_DETACHMENT_DISTANCE
}

/// The suspended ball and its carrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    /// Ball mass m [kg].
    pub ball_mass: f64,
    /// Ball diameter [m].
    pub ball_diameter: f64,
    /// Axial magnet detachment force F_d [N].
    pub detachment_force: f64,
    /// Magnet separation travel [m].
    #[serde(default = "default_detachment_distance")]
    pub detachment_distance: f64,
    /// Maximum carrier speed v [m/s].
    pub max_carrier_speed: f64,
}

impl TargetSpec {
    pub fn reference() -> Self {
        Self {
            ball_mass: 0.060,
            ball_diameter: 0.15,
            detachment_force: 4.0,
            detachment_distance: DEFAULT_DETACHMENT_DISTANCE,
            max_carrier_speed: 6.0,
        }
    }

    pub fn radius(&self) -> f64 {
        0.5 * self.ball_diameter
    }

    pub fn validate(&self) -> Result<(), DesignError> {
        positive("/target/ball_mass", self.ball_mass)?;
        positive("/target/ball_diameter", self.ball_diameter)?;
        positive("/target/detachment_force", self.detachment_force)?;
        positive("/target/detachment_distance", self.detachment_distance)?;
        positive("/target/max_carrier_speed", self.max_carrier_speed)?;
        Ok(())
    }
}

/// Numeric design limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RequirementSet {
    /// Stowed envelope limit: length, width, height [m].
    pub max_envelope: [f64; 3],
    /// Force the structure is sized to exert on the magnet [N].
    pub required_detach_force: f64,
    /// Platform root-moment limit [N·m]; unchecked when absent.
    pub max_root_moment: Option<f64>,
    /// Allowed arm tip deflection [m].
    pub max_deflection: f64,
    pub payload_mass_limit: f64,
    pub payload_diameter_limit: f64,
    /// Propeller-clearance minimum for the arm extension [m].
    pub min_arm_extension: f64,
}

impl Default for RequirementSet {
    fn default() -> Self {
        Self {
            max_envelope: [1.2, 1.2, 0.5],
            required_detach_force: 4.0,
            max_root_moment: None,
            max_deflection: 0.05,
            payload_mass_limit: 0.15,
            payload_diameter_limit: 0.2,
            min_arm_extension: DEFAULT_MIN_ARM_EXTENSION,
        }
    }
}

impl RequirementSet {
    pub fn validate(&self) -> Result<(), DesignError> {
        for (field, v) in [
            "/requirements/max_envelope/0",
            "/requirements/max_envelope/1",
            "/requirements/max_envelope/2",
        ]
        .into_iter()
        .zip(self.max_envelope)
        {
            positive(field, v)?;
        }
        positive(
            "/requirements/required_detach_force",
            self.required_detach_force,
        )?;
        if let Some(m) = self.max_root_moment {
            positive("/requirements/max_root_moment", m)?;
        }
        positive("/requirements/max_deflection", self.max_deflection)?;
        positive("/requirements/payload_mass_limit", self.payload_mass_limit)?;
        positive(
            "/requirements/payload_diameter_limit",
            self.payload_diameter_limit,
        )?;
        positive("/requirements/min_arm_extension", self.min_arm_extension)?;
        Ok(())
    }
}

/// Approximate grab volume as a frustum of top diameter `d1`, bottom
/// diameter `d2` and height `h` [m³].
pub fn grab_volume_approx(d1: f64, d2: f64, h: f64) -> Result<f64, DesignError> {
    positive("d1", d1)?;
    positive("d2", d2)?;
    positive("h", h)?;
    if d2 > d1 {
        return Err(DesignError::Exceeds {
            field: "d2",
            value: d2,
            bound_field: "d1",
            bound: d1,
        });
    }
    Ok(PI * h / 12.0 * (d1 * d1 + d1 * d2 + d2 * d2))
}

/// Frontal engagement rectangle area [m²].
pub fn capture_area(width: f64, height: f64) -> Result<f64, DesignError> {
    positive("width", width)?;
    positive("height", height)?;
    Ok(width * height)
}

/// Narrowest basket opening that keeps the camera view unobstructed at
/// planar depth `h` with half-angle `theta` [m].
pub fn min_basket_opening(h: f64, theta: f64) -> Result<f64, DesignError> {
    positive("h", h)?;
    if !(theta > 0.0 && theta < FRAC_PI_2) {
        return Err(DesignError::OutOfRange {
            field: "theta",
            value: theta,
            range: "(0, π/2)",
        });
    }
    Ok(2.0 * h * theta.tan())
}

/// The camera sits low enough that its centre can line up with the ball
/// centre while the ball is inside the basket.
pub fn camera_placement_ok(camera_drop: f64, ball_radius: f64) -> Result<bool, DesignError> {
    positive("h_c", camera_drop)?;
    positive("r", ball_radius)?;
    Ok(camera_drop >= ball_radius)
}

/// Kinetic energy of the ball at relative speed `v` [J].
pub fn impact_work(mass: f64, speed: f64) -> Result<f64, DesignError> {
    positive("m", mass)?;
    non_negative("v", speed)?;
    Ok(0.5 * mass * speed * speed)
}

/// Work to pull the magnets apart over `distance` [J].
pub fn detachment_work(force: f64, distance: f64) -> Result<f64, DesignError> {
    positive("F_d", force)?;
    positive("distance", distance)?;
    Ok(force * distance)
}

/// Impact strength the hull material must reach to absorb `total_work`
/// over section `area` [J/m²].
pub fn required_impact_strength(total_work: f64, area: f64) -> Result<f64, DesignError> {
    non_negative("W_total", total_work)?;
    positive("A", area)?;
    Ok(total_work / area)
}

/// Tip deflection of an end-loaded cantilever [m].
pub fn cantilever_deflection(
    force: f64,
    length: f64,
    modulus: f64,
    second_moment: f64,
) -> Result<f64, DesignError> {
    non_negative("F", force)?;
    positive("d", length)?;
    positive("E", modulus)?;
    positive("I", second_moment)?;
    Ok(force * length.powi(3) / (3.0 * modulus * second_moment))
}

/// Moment at the arm root from the end mass [N·m].
pub fn root_moment(end_mass: f64, arm: f64, g: f64) -> Result<f64, DesignError> {
    positive("end_mass", end_mass)?;
    positive("arm", arm)?;
    positive("g", g)?;
    Ok(end_mass * g * arm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "FAIL",
            Verdict::NotApplicable => "n/a",
        })
    }
}

/// One computed quantity with its verdict and the inputs that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub name: String,
    pub value: f64,
    pub unit: String,
    pub verdict: Verdict,
    /// The requirement the value was compared against, if any.
    pub limit: Option<f64>,
    pub inputs: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub entries: Vec<ReportEntry>,
    pub overall_pass: bool,
}

impl DesignReport {
    pub fn get(&self, name: &str) -> Option<&ReportEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.get(name).map(|e| e.value)
    }

    /// Human-readable aligned table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let name_w = self
            .entries
            .iter()
            .map(|e| e.name.len())
            .max()
            .unwrap_or(4)
            .max(8);
        out.push_str(&format!(
            "{:<name_w$}  {:>14}  {:<6}  {:>12}  {}\n",
            "quantity", "value", "unit", "limit", "verdict"
        ));
        out.push_str(&format!("{}\n", "-".repeat(name_w + 48)));
        for e in &self.entries {
            let limit = e
                .limit
                .map(|l| format!("{l:.6}"))
                .unwrap_or_else(|| "-".into());
            out.push_str(&format!(
                "{:<name_w$}  {:>14.6}  {:<6}  {:>12}  {}\n",
                e.name, e.value, e.unit, limit, e.verdict
            ));
        }
        out.push_str(&format!(
            "overall: {}\n",
            if self.overall_pass { "PASS" } else { "FAIL" }
        ));
        out
    }
}

fn entry(
    name: &str,
    value: f64,
    unit: &str,
    verdict: Verdict,
    limit: Option<f64>,
    inputs: &[(&str, f64)],
) -> ReportEntry {
    ReportEntry {
        name: name.to_string(),
        value,
        unit: unit.to_string(),
        verdict,
        limit,
        inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
    }
}

/// Computes every sizing quantity and checks it against `req`.
pub fn evaluate_design(
    design: &ManipulatorDesign,
    target: &TargetSpec,
    req: &RequirementSet,
) -> Result<DesignReport, DesignError> {
    req.validate()?;
    design.validate(req.min_arm_extension)?;
    target.validate()?;

    let d = design;
    let r = target.radius();
    let mut entries = Vec::with_capacity(16);

    let volume = grab_volume_approx(
        d.basket_top_diameter,
        d.basket_ring_diameter,
        d.frustum_height,
    )?;
    entries.push(entry(
        "grab_volume_approx",
        volume,
        "m3",
        Verdict::NotApplicable,
        None,
        &[
            ("d1", d.basket_top_diameter),
            ("d2", d.basket_ring_diameter),
            ("h1", d.frustum_height),
        ],
    ));
    entries.push(entry(
        "grab_volume_cad",
        CAD_GRAB_VOLUME,
        "m3",
        Verdict::NotApplicable,
        None,
        &[],
    ));

    let area = capture_area(d.capture_width, d.capture_height)?;
    entries.push(entry(
        "capture_area",
        area,
        "m2",
        Verdict::NotApplicable,
        None,
        &[("width", d.capture_width), ("height", d.capture_height)],
    ));

    let opening = min_basket_opening(d.camera_planar_depth, d.camera_fov_half_angle)?;
    entries.push(entry(
        "min_basket_opening",
        opening,
        "m",
        Verdict::from_bool(opening <= d.basket_top_diameter),
        Some(d.basket_top_diameter),
        &[
            ("h", d.camera_planar_depth),
            ("theta", d.camera_fov_half_angle),
        ],
    ));

    let cam_ok = camera_placement_ok(d.camera_drop, r)?;
    entries.push(entry(
        "camera_drop",
        d.camera_drop,
        "m",
        Verdict::from_bool(cam_ok),
        Some(r),
        &[("h_c", d.camera_drop), ("r", r)],
    ));

    let w_impact = impact_work(target.ball_mass, target.max_carrier_speed)?;
    entries.push(entry(
        "impact_work",
        w_impact,
        "J",
        Verdict::NotApplicable,
        None,
        &[("m", target.ball_mass), ("v", target.max_carrier_speed)],
    ));
    let w_detach = detachment_work(target.detachment_force, target.detachment_distance)?;
    entries.push(entry(
        "detachment_work",
        w_detach,
        "J",
        Verdict::NotApplicable,
        None,
        &[
            ("F_d", target.detachment_force),
            ("distance", target.detachment_distance),
        ],
    ));
    let w_total = w_impact + w_detach;
    entries.push(entry(
        "total_work",
        w_total,
        "J",
        Verdict::NotApplicable,
        None,
        &[("W_impact", w_impact), ("W_detach", w_detach)],
    ));

    let needed = required_impact_strength(w_total, d.hull_cross_section_area)?;
    entries.push(entry(
        "required_impact_strength",
        needed,
        "J/m2",
        Verdict::from_bool(d.material_impact_strength >= needed),
        Some(d.material_impact_strength),
        &[("W_total", w_total), ("A", d.hull_cross_section_area)],
    ));
    entries.push(entry(
        "impact_safety_factor",
        d.material_impact_strength / needed,
        "-",
        Verdict::NotApplicable,
        None,
        &[
            ("material_impact_strength", d.material_impact_strength),
            ("required_impact_strength", needed),
        ],
    ));

    let load = d.end_mass * GRAVITY;
    let sag = cantilever_deflection(
        load,
        d.arm_extension,
        d.arm_youngs_modulus,
        d.arm_second_moment,
    )?;
    entries.push(entry(
        "arm_deflection",
        sag,
        "m",
        Verdict::from_bool(sag <= req.max_deflection),
        Some(req.max_deflection),
        &[
            ("F", load),
            ("d", d.arm_extension),
            ("E", d.arm_youngs_modulus),
            ("I", d.arm_second_moment),
        ],
    ));

    let moment = root_moment(d.end_mass, d.arm_extension, GRAVITY)?;
    entries.push(entry(
        "root_moment",
        moment,
        "N*m",
        req.max_root_moment
            .map(|limit| Verdict::from_bool(moment <= limit))
            .unwrap_or(Verdict::NotApplicable),
        req.max_root_moment,
        &[
            ("end_mass", d.end_mass),
            ("arm", d.arm_extension),
            ("g", GRAVITY),
        ],
    ));

    let utilisation = d
        .stowed_envelope
        .iter()
        .zip(req.max_envelope.iter())
        .map(|(s, m)| s / m)
        .fold(0.0_f64, f64::max);
    entries.push(entry(
        "envelope_utilisation",
        utilisation,
        "-",
        Verdict::from_bool(utilisation <= 1.0),
        Some(1.0),
        &[
            ("length", d.stowed_envelope[0]),
            ("width", d.stowed_envelope[1]),
            ("height", d.stowed_envelope[2]),
        ],
    ));

    entries.push(entry(
        "detachment_force",
        target.detachment_force,
        "N",
        Verdict::from_bool(target.detachment_force <= req.required_detach_force),
        Some(req.required_detach_force),
        &[("F_d", target.detachment_force)],
    ));
    entries.push(entry(
        "payload_mass",
        target.ball_mass,
        "kg",
        Verdict::from_bool(target.ball_mass <= req.payload_mass_limit),
        Some(req.payload_mass_limit),
        &[],
    ));
    entries.push(entry(
        "payload_diameter",
        target.ball_diameter,
        "m",
        Verdict::from_bool(target.ball_diameter <= req.payload_diameter_limit),
        Some(req.payload_diameter_limit),
        &[],
    ));

    let overall_pass = entries.iter().all(|e| e.verdict != Verdict::Fail);
    Ok(DesignReport {
        entries,
        overall_pass,
    })
}
