//! Physics checks against independent closed forms and integration oracles.

use capture_core::design::grab_volume_approx;
use capture_core::dynamics::guidance::GuidanceMode;
use capture_core::dynamics::pendulum::{pendulum_step, PendulumParams, PendulumState};
use capture_core::dynamics::world::{
    step_world, AttachmentStatus, Controls, InitialConditions, Scene, WorldState,
};
use capture_core::dynamics::{DownwashConfig, EncounterConfig, GustConfig};
use capture_core::rng::Streams;
use capture_core::{ManipulatorDesign, TargetSpec, Vec3, GRAVITY};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Midpoint-rule volume of a cone frustum sliced into discs.
fn sliced_frustum(d1: f64, d2: f64, h: f64, slices: usize) -> f64 {
    let dz = h / slices as f64;
    (0..slices)
        .map(|i| {
            let s = (i as f64 + 0.5) / slices as f64;
            let r = 0.5 * (d1 + (d2 - d1) * s);
            std::f64::consts::PI * r * r * dz
        })
        .sum()
}

#[test]
fn frustum_volume_matches_slice_integration() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..100 {
        let d1 = rng.random_range(0.05..1.0);
        let d2 = d1 * rng.random_range(0.05..0.99);
        let h = rng.random_range(0.05..1.0);
        let exact = grab_volume_approx(d1, d2, h).unwrap();
        let sliced = sliced_frustum(d1, d2, h, 20_000);
        assert!(((exact - sliced) / sliced).abs() < 1e-6, "{d1} {d2} {h}");
    }
}

fn vacuum() -> EncounterConfig {
    EncounterConfig {
        timestep: 0.002,
        ball_drag: 0.0,
        gust: GustConfig::default(),
        downwash: DownwashConfig {
            enabled: false,
            ..Default::default()
        },
        ..Default::default()
    }
}

/// Free-flying ball far from the chaser, so it is reported lost at once and
/// then only gravity acts.
fn released_world(cfg: &EncounterConfig, p0: Vec3, v0: Vec3) -> (Scene, WorldState, Streams) {
    let scene = Scene::new(
        &ManipulatorDesign::reference(),
        &TargetSpec::reference(),
        cfg,
    );
    let mut streams = Streams::new(3);
    let mut w = WorldState::new(&scene, &InitialConditions::default(), &mut streams).unwrap();
    w.status = AttachmentStatus::Detached;
    w.ball_position = p0;
    w.ball_velocity = v0;
    (scene, w, streams)
}

#[test]
fn ballistic_flight_matches_projectile() {
    let cfg = vacuum();
    let p0 = Vec3::new(30.0, -20.0, 200.0);
    let v0 = Vec3::new(3.0, -1.5, 4.0);
    let (scene, mut w, mut streams) = released_world(&cfg, p0, v0);
    let ctl = Controls {
        mode: GuidanceMode::Coast,
        servo_open: false,
    };
    for _ in 0..500 {
        step_world(&mut w, &scene, &ctl, &mut streams).unwrap();
    }
    let t = w.time;
    assert!((t - 1.0).abs() < 1e-9);
    let exact = p0 + v0 * t + Vec3::new(0.0, 0.0, -0.5 * GRAVITY * t * t);
    assert!(
        (w.ball_position - exact).norm() < 1e-6,
        "{}",
        (w.ball_position - exact).norm()
    );
    assert_eq!(w.status, AttachmentStatus::Lost);
}

#[test]
fn drag_slows_the_fall() {
    let mut cfg = vacuum();
    cfg.ball_drag = capture_core::dynamics::DEFAULT_BALL_DRAG;
    let (scene, mut w, mut streams) =
        released_world(&cfg, Vec3::new(30.0, 0.0, 500.0), Vec3::zeros());
    for _ in 0..10_000 {
        step_world(&mut w, &scene, &Controls::default(), &mut streams).unwrap();
    }
    // 20 s of fall settles on the terminal speed
    assert!(
        (w.ball_velocity.z.abs() - 9.0).abs() < 0.05,
        "{}",
        w.ball_velocity.z
    );
}

fn period_of_release(amplitude: f64, length: f64, dt: f64) -> f64 {
    let p = PendulumParams {
        length,
        mass: 0.06,
        damping: 0.0,
    };
    let mut s = PendulumState {
        beta: amplitude,
        ..Default::default()
    };
    let mut t = 0.0;
    let mut crossings = Vec::new();
    while crossings.len() < 3 {
        let next = pendulum_step(&s, &p, Vec3::zeros(), Vec3::zeros(), dt).unwrap();
        if s.beta > 0.0 && next.beta <= 0.0 || s.beta < 0.0 && next.beta >= 0.0 {
            let frac = s.beta / (s.beta - next.beta);
            crossings.push(t + frac * dt);
        }
        s = next;
        t += dt;
    }
    crossings[2] - crossings[0]
}

#[test]
fn small_angle_period() {
    let l = 0.5;
    let expected = 2.0 * std::f64::consts::PI * (l / GRAVITY).sqrt();
    let period = period_of_release(5f64.to_radians(), l, 0.002);
    assert!(
        ((period - expected) / expected).abs() < 0.01,
        "{period} vs {expected}"
    );
}

fn swinging() -> (PendulumState, PendulumParams) {
    (
        PendulumState {
            alpha: 0.4,
            beta: -0.3,
            alpha_rate: 0.8,
            beta_rate: 1.1,
        },
        PendulumParams {
            length: 1.0,
            mass: 0.06,
            damping: 0.0,
        },
    )
}

#[test]
fn undamped_energy_drift() {
    let (mut s, p) = swinging();
    let e0 = s.energy(&p);
    for _ in 0..10_000 {
        s = pendulum_step(&s, &p, Vec3::zeros(), Vec3::zeros(), 0.002).unwrap();
    }
    let drift = ((s.energy(&p) - e0) / e0).abs();
    assert!(drift <= 1e-5, "relative drift {drift}");
}

#[test]
fn fourth_order_convergence() {
    let (s0, p) = swinging();
    let run = |dt: f64| {
        let steps = (1.0 / dt).round() as usize;
        let mut s = s0;
        for _ in 0..steps {
            s = pendulum_step(&s, &p, Vec3::zeros(), Vec3::zeros(), dt).unwrap();
        }
        s.offset(p.length)
    };
    let reference = run(0.02 / 64.0);
    let coarse = (run(0.02) - reference).norm();
    let fine = (run(0.01) - reference).norm();
    let ratio = coarse / fine;
    // an RK4 halving shrinks the error about sixteenfold
    assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn rigid_rod_holds_on_a_turning_carrier() {
    let cfg = capture_core::experiments::scenario("curved_arc").unwrap();
    let scene = Scene::new(&cfg.design, &cfg.target, &cfg.encounter);
    let init = InitialConditions {
        sway_angle: 0.3,
        sway_azimuth: 1.0,
        chaser_offset: Vec3::new(0.0, 0.0, 5.0),
    };
    let mut streams = Streams::new(9);
    let mut w = WorldState::new(&scene, &init, &mut streams).unwrap();
    let l = cfg.encounter.rod_length;
    let mut worst: f64 = 0.0;
    for _ in 0..5_000 {
        step_world(&mut w, &scene, &Controls::default(), &mut streams).unwrap();
        assert_eq!(w.status, AttachmentStatus::Attached);
        worst = worst.max(((w.ball_position - w.carrier.position).norm() - l).abs());
    }
    assert!(worst <= 1e-9, "rod length error {worst}");
}
