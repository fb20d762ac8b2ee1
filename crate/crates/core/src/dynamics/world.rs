//! The encounter world and its fixed-order step.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::camera::{camera_measurement, Measurement};
use super::carrier::{carrier_state, CarrierState};
use super::detachment::{detachment_update, ContactLoad, DetachmentProgress, Magnet};
use super::downwash::downwash_velocity;
use super::geometry::{capture_check, CaptureCheck, EngagementGeometry};
use super::guidance::{guidance_command, BallEstimate, BallEstimator, CaptureFrame, GuidanceMode};
use super::gust::{gust_velocity, GustProcess};
use super::pendulum::{pendulum_step_with, Forcing, PendulumParams, PendulumState};
use super::{DynamicsError, EncounterConfig};
use crate::design::{ManipulatorDesign, TargetSpec};
use crate::rng::Streams;
use crate::{Vec3, GRAVITY};

/// Contact stiffness of the basket hull against the ball [N/m].
pub const HULL_STIFFNESS: f64 = 2000.0;

/// Ball speed above which the chaser turns to follow it [m/s].
pub const YAW_FOLLOW_SPEED: f64 = 1.0;

pub const GROUND_LEVEL: f64 = 0.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttachmentStatus {
    Attached,
    Detached,
    Captured,
    Dropped,
    Lost,
}

impl AttachmentStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            AttachmentStatus::Attached => "attached",
            AttachmentStatus::Detached => "detached",
            AttachmentStatus::Captured => "captured",
            AttachmentStatus::Dropped => "dropped",
            AttachmentStatus::Lost => "lost",
        }
    }

    /// Whether `next` may follow `self` in a trace.
    pub fn may_become(&self, next: AttachmentStatus) -> bool {
        use AttachmentStatus::*;
        matches!(
            (self, next),
            (Attached, Attached | Detached)
                | (Detached, Detached | Captured | Lost)
                | (Captured, Captured | Dropped)
                | (Dropped, Dropped)
                | (Lost, Lost)
        )
    }
}

impl fmt::Display for AttachmentStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WorldEvent {
    /// The ball crossed the capture plane inside the rectangle (EE frame).
    Hooked {
        point: Vec3,
    },
    /// The ball crossed the capture plane outside the rectangle (EE frame).
    Missed {
        point: Vec3,
    },
    Detached {
        work: f64,
    },
    Captured {
        rest: Vec3,
    },
    Lost,
    Released,
    Landed,
}

impl fmt::Display for WorldEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WorldEvent::Hooked { point } => write!(f, "hooked y={} z={}", point.y, point.z),
            WorldEvent::Missed { point } => write!(f, "missed y={} z={}", point.y, point.z),
            WorldEvent::Detached { work } => write!(f, "detached work={work}"),
            WorldEvent::Captured { rest } => write!(f, "captured x={} y={}", rest.x, rest.y),
            WorldEvent::Lost => f.write_str("lost"),
            WorldEvent::Released => f.write_str("released"),
            WorldEvent::Landed => f.write_str("landed"),
        }
    }
}

/// Everything fixed for the duration of a trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub encounter: EncounterConfig,
    pub geometry: EngagementGeometry,
    pub magnet: Magnet,
    pub pendulum: PendulumParams,
    pub ball_mass: f64,
    pub ball_radius: f64,
}

impl Scene {
    pub fn new(
        design: &ManipulatorDesign,
        target: &TargetSpec,
        encounter: &EncounterConfig,
    ) -> Self {
        Self {
            encounter: encounter.clone(),
            geometry: EngagementGeometry::new(
                design,
                target,
                encounter.chaser.mount_drop,
                encounter.sag_compensated,
            ),
            magnet: Magnet {
                force: target.detachment_force,
                distance: target.detachment_distance,
                peel: encounter.peel_factor,
            },
            pendulum: PendulumParams {
                length: encounter.rod_length,
                mass: target.ball_mass,
                damping: encounter.pendulum_damping,
            },
            ball_mass: target.ball_mass,
            ball_radius: target.radius(),
        }
    }

    fn drag(&self, air_relative: Vec3) -> Vec3 {
        -air_relative * (self.encounter.ball_drag * air_relative.norm())
    }
}

/// Inputs from the mission layer for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controls {
    pub mode: GuidanceMode,
    pub servo_open: bool,
}

impl Default for Controls {
    fn default() -> Self {
        Self {
            mode: GuidanceMode::Loiter,
            servo_open: false,
        }
    }
}

/// Per-trial random initial conditions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InitialConditions {
    /// Initial rod tilt away from its steady direction [rad].
    pub sway_angle: f64,
    /// Direction of that tilt around the steady direction [rad].
    pub sway_azimuth: f64,
    /// Error of the chaser's starting position [m].
    pub chaser_offset: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub time: f64,
    pub chaser_position: Vec3,
    pub chaser_velocity: Vec3,
    pub chaser_yaw: f64,
    pub chaser_yaw_rate: f64,
    pub yaw_target: f64,
    /// Acceleration command applied over the next step.
    pub command: Vec3,
    pub carrier: CarrierState,
    pub pendulum: PendulumState,
    pub ball_position: Vec3,
    pub ball_velocity: Vec3,
    pub status: AttachmentStatus,
    /// EE-frame point where the hull caught the ball.
    pub hook: Option<Vec3>,
    pub missed: bool,
    pub detachment: DetachmentProgress,
    /// EE-frame resting position on the detector plate.
    pub rest: Option<Vec3>,
    pub landed: bool,
    pub gust: GustProcess,
    /// Unit-variance rotor wake fluctuation.
    pub wake: GustProcess,
    pub estimator: BallEstimator,
    pub estimate: Option<BallEstimate>,
    next_camera_time: f64,
    ball_ee: Vec3,
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let r = (a + std::f64::consts::PI).rem_euclid(two_pi);
    r - std::f64::consts::PI
}

/// Steady rod direction: along the net specific force on the ball.
pub fn steady_direction(scene: &Scene, carrier: &CarrierState) -> Vec3 {
    let air_rel = carrier.velocity - Vec3::from(scene.encounter.gust.mean_wind);
    let a = scene.drag(air_rel) / scene.ball_mass + Vec3::new(0.0, 0.0, -GRAVITY)
        - carrier.acceleration;
    a.normalize()
}

impl WorldState {
    pub fn new(
        scene: &Scene,
        init: &InitialConditions,
        streams: &mut Streams,
    ) -> Result<Self, DynamicsError> {
        let cfg = &scene.encounter;
        let carrier = carrier_state(&cfg.carrier, 0.0)?;
        let steady = steady_direction(scene, &carrier);
        let e1 = (Vec3::x() - steady * steady.x).normalize();
        let e2 = steady.cross(&e1);
        let (s, c) = init.sway_angle.sin_cos();
        let (sa, ca) = init.sway_azimuth.sin_cos();
        let u = steady * c + (e1 * ca + e2 * sa) * s;
        let l = cfg.rod_length;
        let pendulum = PendulumState::from_offset(u * l, Vec3::zeros(), l);
        let ball_position = carrier.position + pendulum.offset(l);

        let yaw = cfg.chaser.approach_heading.unwrap_or(carrier.heading);
        let geom = &scene.geometry;
        let forward = EngagementGeometry::forward(yaw);
        let centre = ball_position - forward * cfg.chaser.standoff + init.chaser_offset;
        let chaser_position =
            centre - EngagementGeometry::rotation(yaw) * (geom.ee_origin + geom.capture_centre);

        let gust = GustProcess::stationary(&cfg.gust, &mut streams.gust);
        let wake = GustProcess::stationary(&cfg.downwash.wake_process(), &mut streams.wake);
        let mut w = Self {
            time: 0.0,
            chaser_position,
            chaser_velocity: carrier.velocity,
            chaser_yaw: yaw,
            chaser_yaw_rate: 0.0,
            yaw_target: yaw,
            command: Vec3::zeros(),
            carrier,
            pendulum,
            ball_position,
            ball_velocity: carrier.velocity,
            status: AttachmentStatus::Attached,
            hook: None,
            missed: false,
            detachment: DetachmentProgress::default(),
            rest: None,
            landed: false,
            gust,
            wake,
            estimator: BallEstimator::default(),
            estimate: None,
            next_camera_time: 0.0,
            ball_ee: Vec3::zeros(),
        };
        w.ball_ee = w.ball_in_ee(scene);
        Ok(w)
    }

    pub fn ball_in_ee(&self, scene: &Scene) -> Vec3 {
        scene
            .geometry
            .world_to_ee(&self.ball_position, &self.chaser_position, self.chaser_yaw)
    }

    pub fn capture_frame(&self, scene: &Scene) -> CaptureFrame {
        let g = &scene.geometry;
        CaptureFrame {
            centre: g.ee_to_world(&g.capture_centre, &self.chaser_position, self.chaser_yaw),
            velocity: g.ee_point_velocity(
                &g.capture_centre,
                &self.chaser_velocity,
                self.chaser_yaw,
                self.chaser_yaw_rate,
            ),
            forward: EngagementGeometry::forward(self.chaser_yaw),
        }
    }

    /// World position of the basket top centre.
    pub fn ee_position(&self, scene: &Scene) -> Vec3 {
        scene
            .geometry
            .ee_to_world(&Vec3::zeros(), &self.chaser_position, self.chaser_yaw)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepReport {
    pub events: Vec<WorldEvent>,
    pub measurement: Option<Measurement>,
}

fn free_flight(scene: &Scene, position: Vec3, velocity: Vec3, air: Vec3, dt: f64) -> (Vec3, Vec3) {
    let g = Vec3::new(0.0, 0.0, -GRAVITY);
    let acc = |v: Vec3| g + scene.drag(v - air) / scene.ball_mass;
    let k1v = acc(velocity);
    let k1p = velocity;
    let k2v = acc(velocity + k1v * (0.5 * dt));
    let k2p = velocity + k1v * (0.5 * dt);
    let k3v = acc(velocity + k2v * (0.5 * dt));
    let k3p = velocity + k2v * (0.5 * dt);
    let k4v = acc(velocity + k3v * dt);
    let k4p = velocity + k3v * dt;
    (
        position + (k1p + k2p * 2.0 + k3p * 2.0 + k4p) * (dt / 6.0),
        velocity + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (dt / 6.0),
    )
}

/// Advances the world by one timestep. Within the step the order is:
///
/// 1. disturbances: gust process, downwash and its wake turbulence at the ball,
///    gust push on the chaser;
/// 2. dynamics: chaser (last command), carrier, ball by attachment status;
/// 3. detachment: capture-plane crossing, hull pull on the magnet;
/// 4. capture: containment of a free ball, servo release of a held one;
/// 5. guidance: camera fix, estimator, next command.
pub fn step_world(
    w: &mut WorldState,
    scene: &Scene,
    controls: &Controls,
    streams: &mut Streams,
) -> Result<StepReport, DynamicsError> {
    let cfg = &scene.encounter;
    let geom = &scene.geometry;
    let dt = cfg.timestep;
    let t = w.time;
    let mut report = StepReport::default();

    // 1. disturbances
    let wind = gust_velocity(&mut w.gust, &cfg.gust, dt, &mut streams.gust);
    let jet = downwash_velocity(&w.ball_position, &w.chaser_position, &cfg.downwash);
    let eddy = gust_velocity(
        &mut w.wake,
        &cfg.downwash.wake_process(),
        dt,
        &mut streams.wake,
    );
    let air = wind + jet + eddy * (cfg.downwash.turbulence * jet.norm());
    let push = w.gust.fluctuation * cfg.chaser.gust_coupling;

    // 2. dynamics
    let a = w.command + push;
    w.chaser_position += w.chaser_velocity * dt + a * (0.5 * dt * dt);
    w.chaser_velocity += a * dt;
    let speed = w.chaser_velocity.norm();
    if speed > cfg.chaser.max_speed {
        w.chaser_velocity *= cfg.chaser.max_speed / speed;
    }
    let max_turn = cfg.chaser.max_yaw_rate * dt;
    let turn = wrap_angle(w.yaw_target - w.chaser_yaw).clamp(-max_turn, max_turn);
    w.chaser_yaw = wrap_angle(w.chaser_yaw + turn);
    w.chaser_yaw_rate = turn / dt;

    // path lookups are clamped to absorb round-off in the accumulated time
    let end = cfg.carrier.duration();
    let c0 = w.carrier;
    let cm = carrier_state(&cfg.carrier, (t + 0.5 * dt).min(end))?;
    let c1 = carrier_state(&cfg.carrier, (t + dt).min(end))?;
    let l = cfg.rod_length;

    match w.status {
        AttachmentStatus::Attached if w.hook.is_none() => {
            let forcing = |tau: f64, s: &PendulumState| {
                let c = if tau == 0.0 {
                    &c0
                } else if tau < dt {
                    &cm
                } else {
                    &c1
                };
                let v = c.velocity + s.relative_velocity(l);
                Forcing {
                    pivot_accel: c.acceleration,
                    force: scene.drag(v - air),
                }
            };
            w.pendulum = pendulum_step_with(&w.pendulum, &scene.pendulum, dt, t, forcing)?;
            w.ball_position = c1.position + w.pendulum.offset(l);
            w.ball_velocity = c1.velocity + w.pendulum.relative_velocity(l);
        }
        AttachmentStatus::Attached => {
            let hook = w.hook.unwrap_or_default();
            let p = geom.ee_to_world(&hook, &w.chaser_position, w.chaser_yaw);
            let v =
                geom.ee_point_velocity(&hook, &w.chaser_velocity, w.chaser_yaw, w.chaser_yaw_rate);
            let reach = p - c1.position;
            let dist = reach.norm();
            let u = reach / dist;
            let rel = v - c1.velocity;
            let tangential = rel - u * rel.dot(&u);
            w.ball_position = c1.position + u * l;
            w.ball_velocity = c1.velocity + tangential;
            w.pendulum = PendulumState::from_offset(u * l, tangential, l);

            // 3. detachment: the hull pulls along the heading
            let excess = dist - l - w.detachment.separation;
            if excess > 0.0 {
                let pull = EngagementGeometry::forward(w.chaser_yaw);
                let threshold = scene.magnet.threshold(pull.dot(&u));
                let load = ContactLoad {
                    force: pull * (HULL_STIFFNESS * excess),
                    magnet_axis: u,
                    travel: excess - threshold / HULL_STIFFNESS,
                };
                w.detachment = detachment_update(&w.detachment, &scene.magnet, &load);
                if w.detachment.detached {
                    w.status = AttachmentStatus::Detached;
                    w.hook = None;
                    w.ball_velocity = v;
                    report.events.push(WorldEvent::Detached {
                        work: w.detachment.work,
                    });
                }
            }
        }
        AttachmentStatus::Captured => {
            let rest = w.rest.unwrap_or_default();
            w.ball_position = geom.ee_to_world(&rest, &w.chaser_position, w.chaser_yaw);
            w.ball_velocity =
                geom.ee_point_velocity(&rest, &w.chaser_velocity, w.chaser_yaw, w.chaser_yaw_rate);
        }
        AttachmentStatus::Detached | AttachmentStatus::Dropped | AttachmentStatus::Lost => {
            if !w.landed {
                let (p, v) = free_flight(scene, w.ball_position, w.ball_velocity, air, dt);
                w.ball_position = p;
                w.ball_velocity = v;
            }
        }
    }
    w.carrier = c1;

    // 3. detachment: first crossing of the capture plane decides hook or miss
    let ball_ee = w.ball_in_ee(scene);
    if w.status == AttachmentStatus::Attached && w.hook.is_none() && !w.missed {
        let prev = w.ball_ee;
        if prev.x > 0.0 && ball_ee.x <= 0.0 {
            let s = prev.x / (prev.x - ball_ee.x);
            let mut point = prev + (ball_ee - prev) * s;
            point.x = 0.0;
            if geom.in_capture_rectangle(&point) {
                w.hook = Some(point);
                report.events.push(WorldEvent::Hooked { point });
            } else {
                w.missed = true;
                report.events.push(WorldEvent::Missed { point });
            }
        }
    }
    w.ball_ee = ball_ee;

    // 4. capture
    match w.status {
        AttachmentStatus::Detached => match capture_check(&ball_ee, geom) {
            CaptureCheck::Pending => {}
            CaptureCheck::Captured { rest } => {
                w.status = AttachmentStatus::Captured;
                w.rest = Some(rest);
                w.ball_position = geom.ee_to_world(&rest, &w.chaser_position, w.chaser_yaw);
                w.ball_velocity = geom.ee_point_velocity(
                    &rest,
                    &w.chaser_velocity,
                    w.chaser_yaw,
                    w.chaser_yaw_rate,
                );
                report.events.push(WorldEvent::Captured { rest });
            }
            CaptureCheck::Lost => {
                w.status = AttachmentStatus::Lost;
                report.events.push(WorldEvent::Lost);
            }
        },
        AttachmentStatus::Captured if controls.servo_open => {
            w.status = AttachmentStatus::Dropped;
            w.rest = None;
            report.events.push(WorldEvent::Released);
        }
        _ => {}
    }
    let floor = GROUND_LEVEL + scene.ball_radius;
    if matches!(w.status, AttachmentStatus::Dropped | AttachmentStatus::Lost)
        && !w.landed
        && w.ball_position.z <= floor
    {
        w.ball_position.z = floor;
        w.ball_velocity = Vec3::zeros();
        w.landed = true;
        report.events.push(WorldEvent::Landed);
    }

    // 5. guidance
    w.time += dt;
    if w.time >= w.next_camera_time {
        w.next_camera_time += 1.0 / cfg.camera.rate_hz;
        let visible = matches!(
            w.status,
            AttachmentStatus::Attached | AttachmentStatus::Detached
        );
        report.measurement = camera_measurement(
            w.time,
            &ball_ee,
            visible,
            geom,
            cfg.camera.noise_std,
            &mut streams.camera,
        );
        if let Some(m) = &report.measurement {
            let fix = geom.ee_to_world(&m.position, &w.chaser_position, w.chaser_yaw);
            w.estimator.push(w.time, fix);
        }
    }
    w.estimate = w
        .estimator
        .estimate(w.time, cfg.guidance.lookback, cfg.guidance.accel_lookback);
    if let (GuidanceMode::Track { .. }, Some(est)) = (&controls.mode, &w.estimate) {
        if est.velocity.xy().norm() > YAW_FOLLOW_SPEED {
            w.yaw_target = est.velocity.y.atan2(est.velocity.x);
        }
    }
    let frame = w.capture_frame(scene);
    w.command = guidance_command(
        &controls.mode,
        w.estimate.as_ref(),
        &w.chaser_position,
        &w.chaser_velocity,
        &frame,
        &cfg.guidance,
        cfg.chaser.max_accel,
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{DownwashConfig, GustConfig};

    fn calm() -> EncounterConfig {
        EncounterConfig {
            gust: GustConfig::default(),
            downwash: DownwashConfig {
                enabled: false,
                ..Default::default()
            },
            camera: crate::dynamics::CameraConfig {
                noise_std: 0.0,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    fn scene(cfg: &EncounterConfig) -> Scene {
        Scene::new(
            &ManipulatorDesign::reference(),
            &TargetSpec::reference(),
            cfg,
        )
    }

    #[test]
    fn static_world_is_fixed_point() {
        let cfg = calm();
        let s = scene(&cfg);
        let mut streams = Streams::new(1);
        let mut w = WorldState::new(&s, &InitialConditions::default(), &mut streams).unwrap();
        let before = w.clone();
        let ctl = Controls {
            mode: GuidanceMode::Coast,
            servo_open: false,
        };
        for _ in 0..1000 {
            step_world(&mut w, &s, &ctl, &mut streams).unwrap();
        }
        assert_eq!(w.ball_position, before.ball_position);
        assert_eq!(w.chaser_position, before.chaser_position);
        assert_eq!(w.pendulum, before.pendulum);
        assert_eq!(w.status, AttachmentStatus::Attached);
    }

    #[test]
    fn time_advances_by_dt() {
        let cfg = calm();
        let s = scene(&cfg);
        let mut streams = Streams::new(1);
        let mut w = WorldState::new(&s, &InitialConditions::default(), &mut streams).unwrap();
        let t0 = w.time;
        step_world(&mut w, &s, &Controls::default(), &mut streams).unwrap();
        assert_eq!(w.time, t0 + cfg.timestep);
    }

    #[test]
    fn wrap_angle_range() {
        for k in -20..20 {
            let a = wrap_angle(0.7 * k as f64);
            assert!((-std::f64::consts::PI..=std::f64::consts::PI).contains(&a));
        }
    }

    #[test]
    fn status_order() {
        use AttachmentStatus::*;
        assert!(Attached.may_become(Detached));
        assert!(!Attached.may_become(Captured));
        assert!(Detached.may_become(Lost));
        assert!(!Lost.may_become(Captured));
        assert!(!Dropped.may_become(Attached));
    }
}
