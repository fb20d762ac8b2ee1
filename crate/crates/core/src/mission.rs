//! # Capture-and-deposit mission
//!
//! A phase machine running in lockstep with the world:
//!
//! ```text
//! SEARCH → APPROACH → ENGAGE → CONFIRM → TRANSPORT → DROP → DONE
//!    ↑                            │
//!    └──────── retry ─────────────┘        any phase → ABORT(cause)
//! ```
//!
//! Grab confirmation comes from a detector plate under the basket ring with
//! three limit switches; deposit opens a servo over the drop box.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dynamics::geometry::EngagementGeometry;
use crate::dynamics::guidance::GuidanceMode;
use crate::dynamics::world::{AttachmentStatus, Controls, Scene, StepReport, WorldState};
use crate::Vec3;

/// Angular positions of the three switches on the plate [rad].
pub const SWITCH_ANGLES: [f64; 3] = [PI / 2.0, 7.0 * PI / 6.0, 11.0 * PI / 6.0];

/// Half-width of the plate sector each switch senses [rad].
pub const SECTOR_HALF_WIDTH: f64 = PI / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    Search,
    Approach,
    Engage,
    Confirm,
    Transport,
    Drop,
    Done,
    Abort,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Search => "SEARCH",
            Phase::Approach => "APPROACH",
            Phase::Engage => "ENGAGE",
            Phase::Confirm => "CONFIRM",
            Phase::Transport => "TRANSPORT",
            Phase::Drop => "DROP",
            Phase::Done => "DONE",
            Phase::Abort => "ABORT",
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, Phase::Done | Phase::Abort)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AbortCause {
    NeverDetected,
    EngageTimeout,
    DetachFailed,
    RetriesExhausted,
    TransportTimeout,
    DropMissed,
    DurationExceeded,
    Diverged,
}

impl AbortCause {
    pub fn as_str(&self) -> &'static str {
        match self {
            AbortCause::NeverDetected => "never-detected",
            AbortCause::EngageTimeout => "engage-timeout",
            AbortCause::DetachFailed => "detach-failed",
            AbortCause::RetriesExhausted => "retries-exhausted",
            AbortCause::TransportTimeout => "transport-timeout",
            AbortCause::DropMissed => "drop-missed",
            AbortCause::DurationExceeded => "duration-exceeded",
            AbortCause::Diverged => "diverged",
        }
    }
}

impl fmt::Display for AbortCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServoState {
    Closed,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrabRule {
    /// Any single closed switch.
    #[default]
    AnyOne,
    /// At least two of three.
    Majority,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DropBox {
    /// Centre of the opening plane [m].
    pub center: [f64; 3],
    /// Opening size along world x and y [m].
    pub opening: [f64; 2],
}

impl Default for DropBox {
    fn default() -> Self {
        Self {
            center: [-5.0, -5.0, 0.5],
            opening: [0.4, 0.4],
        }
    }
}

impl DropBox {
    pub fn contains_xy(&self, p: &Vec3) -> bool {
        (p.x - self.center[0]).abs() <= 0.5 * self.opening[0]
            && (p.y - self.center[1]).abs() <= 0.5 * self.opening[1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseTimeouts {
    pub search: f64,
    pub approach: f64,
    pub engage: f64,
    pub confirm: f64,
    pub transport: f64,
    pub drop: f64,
}

impl Default for PhaseTimeouts {
    fn default() -> Self {
        Self {
            search: 5.0,
            approach: 20.0,
            engage: 4.0,
            confirm: 2.0,
            transport: 60.0,
            drop: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissionConfig {
    pub max_retries: u32,
    /// Time the grab condition must hold before it is believed [s].
    pub debounce: f64,
    pub grab_rule: GrabRule,
    /// Radius of the ball's contact patch on the plate [m].
    pub contact_radius: f64,
    /// Lateral and vertical alignment needed to start the engagement [m].
    pub align_tolerance: f64,
    /// Slack on the hold-off distance when starting the engagement [m].
    pub range_tolerance: f64,
    /// Relative speed allowed when starting the engagement [m/s].
    pub closing_tolerance: f64,
    /// Horizontal distance from the box centre counted as over it [m].
    pub hover_tolerance: f64,
    /// Chaser speed counted as hovering [m/s].
    pub hover_speed: f64,
    /// Ball height above the opening when released [m].
    pub drop_height: f64,
    pub drop_box: DropBox,
    pub timeouts: PhaseTimeouts,
}

impl Default for MissionConfig {
    fn default() -> Self {
        Self {
            max_retries: 3,
            debounce: 0.1,
            grab_rule: GrabRule::AnyOne,
            contact_radius: 0.03,
            align_tolerance: 0.05,
            range_tolerance: 0.15,
            closing_tolerance: 0.3,
            hover_tolerance: 0.1,
            hover_speed: 0.3,
            drop_height: 0.5,
            drop_box: DropBox::default(),
            timeouts: PhaseTimeouts::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionState {
    pub phase: Phase,
    pub phase_entry: f64,
    pub retries: u32,
    pub switches: [bool; 3],
    pub servo: ServoState,
    pub cause: Option<AbortCause>,
    /// Since when the grab condition has held.
    grab_since: Option<f64>,
    last_ball: Option<Vec3>,
}

impl Default for MissionState {
    fn default() -> Self {
        Self {
            phase: Phase::Search,
            phase_entry: 0.0,
            retries: 0,
            switches: [false; 3],
            servo: ServoState::Closed,
            cause: None,
            grab_since: None,
            last_ball: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MissionEvent {
    Phase { from: Phase, to: Phase },
    Switch { index: usize, closed: bool },
    Servo(ServoState),
    Abort(AbortCause),
}

impl fmt::Display for MissionEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MissionEvent::Phase { from, to } => write!(f, "phase {from}->{to}"),
            MissionEvent::Switch { index, closed } => {
                write!(
                    f,
                    "switch {index} {}",
                    if *closed { "closed" } else { "open" }
                )
            }
            MissionEvent::Servo(ServoState::Open) => f.write_str("servo open"),
            MissionEvent::Servo(ServoState::Closed) => f.write_str("servo closed"),
            MissionEvent::Abort(c) => write!(f, "abort {c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionOutput {
    pub controls: Controls,
    pub events: Vec<MissionEvent>,
}

fn angle_in_sector(angle: f64, centre: f64) -> bool {
    let d = (angle - centre + PI).rem_euclid(2.0 * PI) - PI;
    d.abs() <= SECTOR_HALF_WIDTH
}

fn segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let s = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * s)).norm()
}

/// Distance from `p` (plate plane, z ignored) to the wedge of radius `radius`
/// centred on direction `centre`.
fn sector_distance(p: &Vec3, centre: f64, radius: f64) -> f64 {
    let q = Vec3::new(p.x, p.y, 0.0);
    let r = q.norm();
    let angle = q.y.atan2(q.x);
    if r == 0.0 || angle_in_sector(angle, centre) {
        return (r - radius).max(0.0);
    }
    let o = Vec3::zeros();
    let edge = |a: f64| Vec3::new(a.cos(), a.sin(), 0.0) * radius;
    let lo = edge(centre - SECTOR_HALF_WIDTH);
    let hi = edge(centre + SECTOR_HALF_WIDTH);
    segment_distance(&q, &o, &lo).min(segment_distance(&q, &o, &hi))
}

/// Switch states for a ball resting at `contact` (plate frame, ring centre
/// at the origin), or all open without a ball.
pub fn detector_update(contact: Option<&Vec3>, ring_radius: f64, contact_radius: f64) -> [bool; 3] {
    match contact {
        None => [false; 3],
        Some(c) => SWITCH_ANGLES.map(|a| sector_distance(c, a, ring_radius) <= contact_radius),
    }
}

pub fn grab_condition(switches: &[bool; 3], rule: GrabRule) -> bool {
    let closed = switches.iter().filter(|s| **s).count();
    match rule {
        GrabRule::AnyOne => closed >= 1,
        GrabRule::Majority => closed >= 2,
    }
}

/// Outcome of a fall segment `from → to` against the box opening plane:
/// `None` before the ball reaches the plane, otherwise whether it went in.
pub fn opening_crossing(from: &Vec3, to: &Vec3, drop_box: &DropBox) -> Option<bool> {
    let plane = drop_box.center[2];
    if from.z > plane && to.z <= plane {
        let s = (from.z - plane) / (from.z - to.z);
        let hit = from + (to - from) * s;
        Some(drop_box.contains_xy(&hit))
    } else {
        None
    }
}

/// Whether a sampled fall trajectory enters the box through its opening.
pub fn release_check(trajectory: &[Vec3], drop_box: &DropBox) -> bool {
    trajectory
        .windows(2)
        .find_map(|w| opening_crossing(&w[0], &w[1], drop_box))
        .unwrap_or(false)
}

impl MissionState {
    /// A mission resumed in `phase`, entered at `since`, with the servo set
    /// as that phase requires.
    pub fn in_phase(phase: Phase, since: f64) -> Self {
        Self {
            phase,
            phase_entry: since,
            servo: if phase == Phase::Drop {
                ServoState::Open
            } else {
                ServoState::Closed
            },
            ..Default::default()
        }
    }

    fn enter(&mut self, to: Phase, t: f64, events: &mut Vec<MissionEvent>) {
        events.push(MissionEvent::Phase {
            from: self.phase,
            to,
        });
        self.phase = to;
        self.phase_entry = t;
        let servo = if to == Phase::Drop {
            ServoState::Open
        } else {
            ServoState::Closed
        };
        if servo != self.servo {
            self.servo = servo;
            events.push(MissionEvent::Servo(servo));
        }
    }

    fn abort(&mut self, cause: AbortCause, t: f64, events: &mut Vec<MissionEvent>) {
        self.cause = Some(cause);
        self.enter(Phase::Abort, t, events);
        events.push(MissionEvent::Abort(cause));
    }

    /// Ends the mission on a simulation failure.
    pub fn diverged(&mut self, t: f64) -> Vec<MissionEvent> {
        let mut events = Vec::new();
        if !self.phase.is_terminal() {
            self.abort(AbortCause::Diverged, t, &mut events);
        }
        events
    }

    pub fn controls(&self, world: &WorldState, scene: &Scene, cfg: &MissionConfig) -> Controls {
        let gcfg = &scene.encounter.guidance;
        let mode = match self.phase {
            Phase::Search | Phase::Done | Phase::Abort => GuidanceMode::Loiter,
            Phase::Approach => GuidanceMode::Track {
                gap: gcfg.approach_gap,
            },
            Phase::Engage if world.hook.is_none() && world.status == AttachmentStatus::Attached => {
                GuidanceMode::Engage
            }
            Phase::Engage | Phase::Confirm => GuidanceMode::Coast,
            Phase::Transport | Phase::Drop => GuidanceMode::GoTo {
                target: transport_target(world, scene, cfg),
                speed: gcfg.transport_speed,
            },
        };
        Controls {
            mode,
            servo_open: self.servo == ServoState::Open,
        }
    }
}

/// Chaser position that puts the held ball `drop_height` above the box centre.
fn transport_target(world: &WorldState, scene: &Scene, cfg: &MissionConfig) -> Vec3 {
    let g = &scene.geometry;
    let rest = world
        .rest
        .unwrap_or_else(|| Vec3::new(0.0, 0.0, -g.rest_depth()));
    let c = cfg.drop_box.center;
    let release = Vec3::new(c[0], c[1], c[2] + cfg.drop_height);
    release - EngagementGeometry::rotation(world.chaser_yaw) * (g.ee_origin + rest)
}

fn aligned(world: &WorldState, scene: &Scene, cfg: &MissionConfig) -> bool {
    let Some(est) = world.estimate else {
        return false;
    };
    let frame = world.capture_frame(scene);
    let f = frame.forward;
    let err = est.position - f * scene.encounter.guidance.approach_gap - frame.centre;
    let along = err.dot(&f);
    let across = (err - f * along).norm();
    across <= cfg.align_tolerance
        && along.abs() <= cfg.range_tolerance
        && (est.velocity - frame.velocity).norm() <= cfg.closing_tolerance
}

/// Advances the mission after a world step and returns the controls for the
/// next one. `duration` bounds the whole mission.
pub fn mission_step(
    m: &mut MissionState,
    world: &WorldState,
    scene: &Scene,
    cfg: &MissionConfig,
    report: &StepReport,
    duration: f64,
) -> MissionOutput {
    let t = world.time;
    let mut events = Vec::new();

    let contact = match (world.status, world.rest) {
        (AttachmentStatus::Captured, Some(rest)) => Some(rest),
        _ => None,
    };
    let switches = detector_update(
        contact.as_ref(),
        scene.geometry.ring_radius,
        cfg.contact_radius,
    );
    for (index, (old, new)) in m.switches.iter().zip(switches).enumerate() {
        if *old != new {
            events.push(MissionEvent::Switch { index, closed: new });
        }
    }
    m.switches = switches;
    if grab_condition(&switches, cfg.grab_rule) {
        m.grab_since.get_or_insert(t);
    } else {
        m.grab_since = None;
    }
    // half a step of slack absorbs round-off in the accumulated time
    let grabbed = m
        .grab_since
        .is_some_and(|s| t - s + 0.5 * scene.encounter.timestep >= cfg.debounce);

    let elapsed = t - m.phase_entry;
    let to = &cfg.timeouts;
    if !m.phase.is_terminal() && t >= duration {
        m.abort(AbortCause::DurationExceeded, t, &mut events);
    }
    match m.phase {
        Phase::Search => {
            if report.measurement.is_some() {
                m.enter(Phase::Approach, t, &mut events);
            } else if elapsed > to.search {
                m.abort(AbortCause::NeverDetected, t, &mut events);
            }
        }
        Phase::Approach => {
            if world.hook.is_some() || world.status != AttachmentStatus::Attached {
                m.enter(Phase::Engage, t, &mut events);
            } else if world.missed {
                m.abort(AbortCause::EngageTimeout, t, &mut events);
            } else if aligned(world, scene, cfg) {
                m.enter(Phase::Engage, t, &mut events);
            } else if elapsed > to.approach {
                m.abort(AbortCause::EngageTimeout, t, &mut events);
            }
        }
        Phase::Engage => {
            if world.status != AttachmentStatus::Attached {
                m.enter(Phase::Confirm, t, &mut events);
            } else if world.missed {
                m.abort(AbortCause::EngageTimeout, t, &mut events);
            } else if elapsed > to.engage {
                let cause = if world.hook.is_some() {
                    AbortCause::DetachFailed
                } else {
                    AbortCause::EngageTimeout
                };
                m.abort(cause, t, &mut events);
            }
        }
        Phase::Confirm => {
            if grabbed && world.status == AttachmentStatus::Captured {
                m.enter(Phase::Transport, t, &mut events);
            } else if world.status == AttachmentStatus::Lost || elapsed > to.confirm {
                if m.retries < cfg.max_retries {
                    m.retries += 1;
                    m.enter(Phase::Search, t, &mut events);
                } else {
                    m.abort(AbortCause::RetriesExhausted, t, &mut events);
                }
            }
        }
        Phase::Transport => {
            let c = cfg.drop_box.center;
            let off = (world.ball_position - Vec3::new(c[0], c[1], c[2]))
                .xy()
                .norm();
            if world.status != AttachmentStatus::Captured {
                m.abort(AbortCause::DropMissed, t, &mut events);
            } else if off <= cfg.hover_tolerance && world.chaser_velocity.norm() <= cfg.hover_speed
            {
                m.enter(Phase::Drop, t, &mut events);
            } else if elapsed > to.transport {
                m.abort(AbortCause::TransportTimeout, t, &mut events);
            }
        }
        Phase::Drop => {
            let crossing = m
                .last_ball
                .and_then(|prev| opening_crossing(&prev, &world.ball_position, &cfg.drop_box));
            match crossing {
                Some(true) => m.enter(Phase::Done, t, &mut events),
                Some(false) => m.abort(AbortCause::DropMissed, t, &mut events),
                None if world.landed || elapsed > to.drop => {
                    m.abort(AbortCause::DropMissed, t, &mut events)
                }
                None => {}
            }
        }
        Phase::Done | Phase::Abort => {}
    }
    m.last_ball = if world.status == AttachmentStatus::Dropped {
        Some(world.ball_position)
    } else {
        None
    };
    MissionOutput {
        controls: m.controls(world, scene, cfg),
        events,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const RING: f64 = 0.0875;

    #[test]
    fn centred_ball_closes_all() {
        assert_eq!(detector_update(Some(&Vec3::zeros()), RING, 0.03), [true; 3]);
    }

    #[test]
    fn no_ball_all_open() {
        let s = detector_update(None, RING, 0.03);
        assert_eq!(s, [false; 3]);
        assert!(!grab_condition(&s, GrabRule::AnyOne));
    }

    #[test]
    fn off_centre_closes_at_least_one() {
        for k in 0..72 {
            let a = k as f64 * 5f64.to_radians();
            let p = Vec3::new(a.cos(), a.sin(), 0.0) * (0.6 * RING);
            let s = detector_update(Some(&p), RING, 0.03);
            assert!(grab_condition(&s, GrabRule::AnyOne), "angle {a}");
            // deep inside one sector and far from the others
            if k % 24 == 18 {
                assert_eq!(s.iter().filter(|x| **x).count(), 1, "angle {a}");
            }
        }
    }

    #[test]
    fn sector_distance_oracle() {
        // brute-force distance to a sampled wedge
        let centre = SWITCH_ANGLES[1];
        for (x, y) in [
            (0.05, 0.0),
            (0.0, 0.06),
            (-0.2, 0.1),
            (0.1, -0.1),
            (0.0, -0.02),
        ] {
            let p = Vec3::new(x, y, 0.0);
            let mut best = f64::INFINITY;
            for i in 0..=200 {
                for j in 0..=200 {
                    let a = centre - SECTOR_HALF_WIDTH + 2.0 * SECTOR_HALF_WIDTH * i as f64 / 200.0;
                    let r = RING * j as f64 / 200.0;
                    best = best.min((p - Vec3::new(a.cos(), a.sin(), 0.0) * r).norm());
                }
            }
            let d = sector_distance(&p, centre, RING);
            assert!((d - best).abs() < 2e-3, "{x},{y}: {d} vs {best}");
        }
    }

    #[test]
    fn majority_needs_two() {
        assert!(!grab_condition(&[true, false, false], GrabRule::Majority));
        assert!(grab_condition(&[true, true, false], GrabRule::Majority));
    }

    fn fall(start: Vec3, velocity: Vec3, dt: f64) -> Vec<Vec3> {
        let g = crate::GRAVITY;
        (0..2000)
            .map(|k| {
                let t = k as f64 * dt;
                start + velocity * t - Vec3::new(0.0, 0.0, 0.5 * g * t * t)
            })
            .take_while(|p| p.z > -1.0)
            .collect()
    }

    #[test]
    fn aligned_drop_enters() {
        let b = DropBox::default();
        let start = Vec3::new(b.center[0], b.center[1], b.center[2] + 0.5);
        assert!(release_check(&fall(start, Vec3::zeros(), 0.002), &b));
    }

    #[test]
    fn lateral_drop_misses() {
        let b = DropBox::default();
        let start = Vec3::new(b.center[0] + 1.0, b.center[1], b.center[2] + 0.5);
        assert!(!release_check(&fall(start, Vec3::zeros(), 0.002), &b));
    }

    #[test]
    fn moving_drop_matches_projectile() {
        let b = DropBox::default();
        let h = 0.5;
        let v = 2.0;
        let shift = v * (2.0 * h / crate::GRAVITY).sqrt();
        assert!((shift - 0.6386).abs() < 1e-3);
        for offset in [-0.5, -0.45, -0.3, -0.1, 0.0, 0.2] {
            let start = Vec3::new(b.center[0] + offset, b.center[1], b.center[2] + h);
            let landed_x = offset + shift;
            let expected = landed_x.abs() <= 0.2;
            let got = release_check(&fall(start, Vec3::new(v, 0.0, 0.0), 0.0005), &b);
            assert_eq!(got, expected, "offset {offset}");
        }
    }
}
