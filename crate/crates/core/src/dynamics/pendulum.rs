//! Spherical pendulum on a moving pivot.
//!
//! The rod direction is parameterised by two angles: `alpha` swings the ball
//! in the y–z plane and `beta` tilts it out of that plane toward +x,
//!
//! ```text
//! u = (sin β, −sin α cos β, −cos α cos β)
//! ```
//!
//! so (0, 0) hangs straight down. The chart is singular only at β = ±π/2,
//! a horizontal rod along x, which a hanging load never reaches.

use serde::{Deserialize, Serialize};

use super::{DynamicsError, DIVERGENCE_RATE};
use crate::{Vec3, GRAVITY};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PendulumState {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_rate: f64,
    pub beta_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumParams {
    pub length: f64,
    pub mass: f64,
    /// Viscous damping rate [1/s].
    pub damping: f64,
}

/// External inputs over a step: pivot acceleration and force on the ball.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Forcing {
    pub pivot_accel: Vec3,
    pub force: Vec3,
}

impl PendulumState {
    /// Unit vector from pivot to ball.
    pub fn direction(&self) -> Vec3 {
        let (sa, ca) = self.alpha.sin_cos();
        let (sb, cb) = self.beta.sin_cos();
        Vec3::new(sb, -sa * cb, -ca * cb)
    }

    fn partials(&self) -> (Vec3, Vec3) {
        let (sa, ca) = self.alpha.sin_cos();
        let (sb, cb) = self.beta.sin_cos();
        let du_dalpha = Vec3::new(0.0, -ca * cb, sa * cb);
        let du_dbeta = Vec3::new(cb, sa * sb, ca * sb);
        (du_dalpha, du_dbeta)
    }

    /// Ball position relative to the pivot.
    pub fn offset(&self, length: f64) -> Vec3 {
        self.direction() * length
    }

    /// Ball velocity relative to the pivot.
    pub fn relative_velocity(&self, length: f64) -> Vec3 {
        let (ua, ub) = self.partials();
        (ua * self.alpha_rate + ub * self.beta_rate) * length
    }

    /// Angles and rates reproducing a ball offset and relative velocity.
    /// Velocity along the rod is discarded.
    pub fn from_offset(offset: Vec3, relative_velocity: Vec3, length: f64) -> Self {
        let u = offset / offset.norm();
        let beta = u.x.clamp(-1.0, 1.0).asin();
        let alpha = (-u.y).atan2(-u.z);
        let mut s = Self {
            alpha,
            beta,
            alpha_rate: 0.0,
            beta_rate: 0.0,
        };
        let (ua, ub) = s.partials();
        let cb = beta.cos();
        s.alpha_rate = relative_velocity.dot(&ua) / (length * cb * cb);
        s.beta_rate = relative_velocity.dot(&ub) / length;
        s
    }

    /// Mechanical energy in the pivot frame for a stationary pivot, with the
    /// pivot height as potential zero [J].
    pub fn energy(&self, p: &PendulumParams) -> f64 {
        let cb = self.beta.cos();
        let ml2 = p.mass * p.length * p.length;
        0.5 * ml2 * (cb * cb * self.alpha_rate.powi(2) + self.beta_rate.powi(2))
            - p.mass * GRAVITY * p.length * self.alpha.cos() * cb
    }

    fn is_finite(&self) -> bool {
        self.alpha.is_finite()
            && self.beta.is_finite()
            && self.alpha_rate.is_finite()
            && self.beta_rate.is_finite()
    }
}

#[derive(Clone, Copy)]
struct Deriv {
    alpha: f64,
    beta: f64,
    alpha_rate: f64,
    beta_rate: f64,
}

fn derivative(s: &PendulumState, p: &PendulumParams, f: &Forcing) -> Deriv {
    let (ua, ub) = s.partials();
    let (sb, cb) = s.beta.sin_cos();
    let accel = f.force / p.mass + Vec3::new(0.0, 0.0, -GRAVITY) - f.pivot_accel;
    let alpha_acc = ua.dot(&accel) / (p.length * cb * cb)
        + 2.0 * (sb / cb) * s.alpha_rate * s.beta_rate
        - p.damping * s.alpha_rate;
    let beta_acc =
        ub.dot(&accel) / p.length - sb * cb * s.alpha_rate.powi(2) - p.damping * s.beta_rate;
    Deriv {
        alpha: s.alpha_rate,
        beta: s.beta_rate,
        alpha_rate: alpha_acc,
        beta_rate: beta_acc,
    }
}

fn advance(s: &PendulumState, d: &Deriv, h: f64) -> PendulumState {
    PendulumState {
        alpha: s.alpha + h * d.alpha,
        beta: s.beta + h * d.beta,
        alpha_rate: s.alpha_rate + h * d.alpha_rate,
        beta_rate: s.beta_rate + h * d.beta_rate,
    }
}

/// One RK4 step with forcing evaluated at each stage. The closure gets the
/// stage time offset in `[0, dt]` and the stage state.
pub fn pendulum_step_with<F>(
    state: &PendulumState,
    params: &PendulumParams,
    dt: f64,
    time: f64,
    forcing: F,
) -> Result<PendulumState, DynamicsError>
where
    F: Fn(f64, &PendulumState) -> Forcing,
{
    let k1 = derivative(state, params, &forcing(0.0, state));
    let s2 = advance(state, &k1, 0.5 * dt);
    let k2 = derivative(&s2, params, &forcing(0.5 * dt, &s2));
    let s3 = advance(state, &k2, 0.5 * dt);
    let k3 = derivative(&s3, params, &forcing(0.5 * dt, &s3));
    let s4 = advance(state, &k3, dt);
    let k4 = derivative(&s4, params, &forcing(dt, &s4));
    let w = dt / 6.0;
    let next = PendulumState {
        alpha: state.alpha + w * (k1.alpha + 2.0 * k2.alpha + 2.0 * k3.alpha + k4.alpha),
        beta: state.beta + w * (k1.beta + 2.0 * k2.beta + 2.0 * k3.beta + k4.beta),
        alpha_rate: state.alpha_rate
            + w * (k1.alpha_rate + 2.0 * k2.alpha_rate + 2.0 * k3.alpha_rate + k4.alpha_rate),
        beta_rate: state.beta_rate
            + w * (k1.beta_rate + 2.0 * k2.beta_rate + 2.0 * k3.beta_rate + k4.beta_rate),
    };
    if !next.is_finite()
        || next.alpha_rate.abs() > DIVERGENCE_RATE
        || next.beta_rate.abs() > DIVERGENCE_RATE
    {
        return Err(DynamicsError::Diverged {
            time: time + dt,
            what: format!(
                "pendulum rates ({:.3e}, {:.3e}) rad/s",
                next.alpha_rate, next.beta_rate
            ),
        });
    }
    Ok(next)
}

/// RK4 step under forcing held constant over the step.
pub fn pendulum_step(
    state: &PendulumState,
    params: &PendulumParams,
    pivot_accel: Vec3,
    disturbance_force: Vec3,
    dt: f64,
) -> Result<PendulumState, DynamicsError> {
    let f = Forcing {
        pivot_accel,
        force: disturbance_force,
    };
    pendulum_step_with(state, params, dt, 0.0, |_, _| f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(length: f64, damping: f64) -> PendulumParams {
        PendulumParams {
            length,
            mass: 0.06,
            damping,
        }
    }

    #[test]
    fn equilibrium_is_fixed() {
        let s = PendulumState::default();
        let p = params(1.0, 0.05);
        let next = pendulum_step(&s, &p, Vec3::zeros(), Vec3::zeros(), 0.002).unwrap();
        assert_eq!(next, s);
    }

    #[test]
    fn small_angle_period() {
        let p = params(0.5, 0.0);
        let dt = 0.0005;
        let mut s = PendulumState {
            alpha: 5f64.to_radians(),
            ..Default::default()
        };
        // time successive downward zero crossings of alpha
        let mut t = 0.0;
        let mut crossings = Vec::new();
        for _ in 0..20_000 {
            let next = pendulum_step(&s, &p, Vec3::zeros(), Vec3::zeros(), dt).unwrap();
            if s.alpha > 0.0 && next.alpha <= 0.0 {
                crossings.push(t + dt * s.alpha / (s.alpha - next.alpha));
            }
            s = next;
            t += dt;
        }
        let period = (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64;
        let expected = 2.0 * std::f64::consts::PI * (0.5 / GRAVITY).sqrt();
        assert!(
            (period / expected - 1.0).abs() < 0.01,
            "{period} vs {expected}"
        );
    }

    #[test]
    fn undamped_energy_conserved() {
        let p = params(1.0, 0.0);
        let mut s = PendulumState {
            alpha: 0.4,
            beta: -0.3,
            alpha_rate: 0.7,
            beta_rate: 0.2,
        };
        let e0 = s.energy(&p);
        for _ in 0..10_000 {
            s = pendulum_step(&s, &p, Vec3::zeros(), Vec3::zeros(), 0.002).unwrap();
        }
        assert!(((s.energy(&p) - e0) / e0).abs() < 1e-5);
    }

    #[test]
    fn offset_round_trip() {
        let s = PendulumState {
            alpha: 0.3,
            beta: -0.2,
            alpha_rate: 1.1,
            beta_rate: -0.4,
        };
        let l = 1.3;
        let back = PendulumState::from_offset(s.offset(l), s.relative_velocity(l), l);
        assert_relative_eq!(back.alpha, s.alpha, epsilon = 1e-12);
        assert_relative_eq!(back.beta, s.beta, epsilon = 1e-12);
        assert_relative_eq!(back.alpha_rate, s.alpha_rate, epsilon = 1e-12);
        assert_relative_eq!(back.beta_rate, s.beta_rate, epsilon = 1e-12);
    }

    #[test]
    fn steady_pivot_accel_tilts_rod() {
        // constant pivot acceleration: the damped pendulum settles along g − a
        let p = params(1.0, 2.0);
        let a = Vec3::new(3.0, 0.0, 0.0);
        let mut s = PendulumState::default();
        for _ in 0..20_000 {
            s = pendulum_step(&s, &p, a, Vec3::zeros(), 0.002).unwrap();
        }
        let want = (Vec3::new(0.0, 0.0, -GRAVITY) - a).normalize();
        assert!((s.direction() - want).norm() < 1e-6);
    }

    #[test]
    fn blow_up_is_reported() {
        let p = params(1.0, 0.0);
        let s = PendulumState::default();
        let err = pendulum_step(&s, &p, Vec3::new(0.0, 1e9, 0.0), Vec3::zeros(), 0.002);
        assert!(matches!(err, Err(DynamicsError::Diverged { .. })));
    }

    proptest! {
        #[test]
        fn damped_energy_non_increasing(
            alpha in -1.2f64..1.2,
            beta in -1.0f64..1.0,
            ar in -2.0f64..2.0,
            br in -2.0f64..2.0,
            c in 0.01f64..1.0,
        ) {
            let p = params(0.8, c);
            let mut s = PendulumState { alpha, beta, alpha_rate: ar, beta_rate: br };
            let mut e = s.energy(&p);
            for _ in 0..2000 {
                s = pendulum_step(&s, &p, Vec3::zeros(), Vec3::zeros(), 0.002).unwrap();
                let next = s.energy(&p);
                prop_assert!(next <= e + 1e-12 * e.abs().max(1.0));
                e = next;
            }
        }

        #[test]
        fn rod_length_exact(alpha in -3.0f64..3.0, beta in -1.4f64..1.4, l in 0.3f64..3.0) {
            let s = PendulumState { alpha, beta, ..Default::default() };
            prop_assert!((s.offset(l).norm() - l).abs() <= 1e-9);
        }
    }
}
